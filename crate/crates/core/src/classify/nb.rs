//! Bernoulli Naive Bayes with add-one smoothing.

use serde::{Deserialize, Serialize};

use super::{Classifier, ClassifyError, Prediction};
use crate::indicators::IndicatorMatrix;
use crate::sim::ClassLabel;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub indicator_ids: Vec<String>,
    /// Indexed by class code; classes absent from training have prior 0.
    pub class_priors: [f64; 4],
    /// `theta[j][c] = P(bit j = 1 | class c) = (count + 1) / (n_c + 2)`.
    pub theta: Vec<[f64; 4]>,
}

/// Trains on all four classes; each must have at least one example.
pub fn nb_train(matrix: &IndicatorMatrix) -> Result<NaiveBayesModel, ClassifyError> {
    nb_train_classes(matrix, &ClassLabel::ALL)
}

/// Trains on the given class subset; every listed class needs an example
/// and rows of other classes are rejected.
pub fn nb_train_classes(
    matrix: &IndicatorMatrix,
    classes: &[ClassLabel],
) -> Result<NaiveBayesModel, ClassifyError> {
    if matrix.is_empty() {
        return Err(ClassifyError::EmptyMatrix);
    }
    let p = matrix.n_cols();
    let mut n_c = [0usize; 4];
    let mut ones = vec![[0usize; 4]; p];
    for i in 0..matrix.n_rows() {
        let label = matrix.labels()[i];
        if !classes.contains(&label) {
            return Err(ClassifyError::InvalidParameter(format!(
                "row {i} has class `{label}` outside the trained set"
            )));
        }
        let c = label.index();
        n_c[c] += 1;
        for (j, &b) in matrix.row(i).iter().enumerate() {
            ones[j][c] += b as usize;
        }
    }
    if let Some(&missing) = classes.iter().find(|c| n_c[c.index()] == 0) {
        return Err(ClassifyError::MissingClass(missing));
    }

    let n = matrix.n_rows() as f64;
    let mut class_priors = [0.0; 4];
    for c in classes {
        class_priors[c.index()] = n_c[c.index()] as f64 / n;
    }
    let theta = ones
        .iter()
        .map(|counts| {
            let mut t = [0.5; 4];
            for c in classes {
                let c = c.index();
                t[c] = (counts[c] as f64 + 1.0) / (n_c[c] as f64 + 2.0);
            }
            t
        })
        .collect();

    Ok(NaiveBayesModel {
        indicator_ids: matrix.columns().to_vec(),
        class_priors,
        theta,
    })
}

/// Posterior over classes from the log-joint, normalized with log-sum-exp.
pub fn nb_predict(model: &NaiveBayesModel, bits: &[u8]) -> Result<Prediction, ClassifyError> {
    if bits.len() != model.theta.len() {
        return Err(ClassifyError::DimensionMismatch {
            expected: model.theta.len(),
            got: bits.len(),
        });
    }
    let mut log_joint = [f64::NEG_INFINITY; 4];
    for c in 0..4 {
        if model.class_priors[c] <= 0.0 {
            continue;
        }
        let mut lp = model.class_priors[c].ln();
        for (t, &b) in model.theta.iter().zip(bits) {
            lp += if b == 1 { t[c].ln() } else { (1.0 - t[c]).ln() };
        }
        log_joint[c] = lp;
    }
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut scores = [0.0; 4];
    let mut total = 0.0;
    for c in 0..4 {
        scores[c] = (log_joint[c] - max).exp();
        total += scores[c];
    }
    for s in &mut scores {
        *s /= total;
    }
    Ok(Prediction::from_scores(scores))
}

impl NaiveBayesModel {
    pub fn validate(&self) -> Result<(), ClassifyError> {
        let bad = |m: String| Err(ClassifyError::MalformedModel(m));
        if self.theta.len() != self.indicator_ids.len() {
            return bad(format!(
                "{} theta rows for {} indicators",
                self.theta.len(),
                self.indicator_ids.len()
            ));
        }
        let sum: f64 = self.class_priors.iter().sum();
        if (sum - 1.0).abs() > 1e-9 || self.class_priors.iter().any(|p| *p < 0.0) {
            return bad(format!("priors {:?} do not form a distribution", self.class_priors));
        }
        if self.theta.iter().flatten().any(|t| !(*t > 0.0 && *t < 1.0)) {
            return bad("theta outside (0, 1)".to_string());
        }
        Ok(())
    }

    pub fn theta_of(&self, id: &str) -> Option<[f64; 4]> {
        self.indicator_ids
            .iter()
            .position(|x| x == id)
            .map(|j| self.theta[j])
    }
}

impl Classifier for NaiveBayesModel {
    fn indicator_ids(&self) -> &[String] {
        &self.indicator_ids
    }

    fn predict(&self, bits: &[u8]) -> Result<Prediction, ClassifyError> {
        nb_predict(self, bits)
    }
}
