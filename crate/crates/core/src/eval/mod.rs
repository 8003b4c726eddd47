//! Experiment protocol: balanced splits, accuracy metrics, forward
//! selection sweeps and the class-conditional probability table.

mod protocol;
mod report;

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{Classifier, ClassifierKind, ClassifyError, NaiveBayesModel, TrainedModel};
use crate::features::RankingResult;
use crate::indicators::IndicatorMatrix;
use crate::rng;
use crate::sim::{class_histogram, ClassLabel};

pub use protocol::{run_protocol, run_protocol_on, ProtocolConfig, ProtocolOutcome};
pub use report::{
    read_sweep, write_plot_csv, write_probability_csv, write_sweep_summary_csv, ProbabilityRow,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("not enough signals for a balanced split: {}", format_deficits(.0))]
    Infeasible(Vec<(ClassLabel, usize)>),
    #[error("invalid split: {0}")]
    InvalidSpec(String),
    #[error("indicator columns do not match the model ({0})")]
    ColumnMismatch(String),
    #[error("unknown indicator `{0}`")]
    UnknownIndicator(String),
    #[error("{0}")]
    Sweep(String),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

fn format_deficits(d: &[(ClassLabel, usize)]) -> String {
    d.iter()
        .map(|(c, n)| format!("class {} short by {n}", c.name()))
        .collect::<Vec<_>>()
        .join(", ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub learn_per_class: usize,
    pub test_subsets: usize,
    /// Balanced: `subset_size / 4` signals of each class.
    pub subset_size: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            learn_per_class: 250,
            test_subsets: 10,
            subset_size: 500,
            seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn default_with_seed(seed: u64) -> Self {
        Self {
            seed,
            ..Self::default()
        }
    }
}

/// Row positions of a learn/test split. `subsets` index into `test`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub spec: SplitSpec,
    pub learn: Vec<usize>,
    pub test: Vec<usize>,
    pub subsets: Vec<Vec<usize>>,
}

/// Class-balanced learning set, the remainder as test set, and balanced
/// test subsets drawn independently of each other.
pub fn split(labels: &[ClassLabel], spec: &SplitSpec) -> Result<Split, EvalError> {
    if !spec.subset_size.is_multiple_of(4) {
        return Err(EvalError::InvalidSpec(format!(
            "subset size {} is not a multiple of 4",
            spec.subset_size
        )));
    }
    let per_subset = spec.subset_size / 4;
    let by_class: Vec<Vec<usize>> = ClassLabel::ALL
        .iter()
        .map(|c| (0..labels.len()).filter(|&i| labels[i] == *c).collect())
        .collect();
    let need = spec.learn_per_class + if spec.test_subsets > 0 { per_subset } else { 0 };
    let deficits: Vec<(ClassLabel, usize)> = ClassLabel::ALL
        .iter()
        .zip(&by_class)
        .filter(|(_, rows)| rows.len() < need)
        .map(|(c, rows)| (*c, need - rows.len()))
        .collect();
    if !deficits.is_empty() {
        return Err(EvalError::Infeasible(deficits));
    }

    let mut r = rng::tagged_stream(spec.seed, rng::domain::SPLIT, 0);
    let mut in_learn = vec![false; labels.len()];
    for rows in &by_class {
        for k in index::sample(&mut r, rows.len(), spec.learn_per_class) {
            in_learn[rows[k]] = true;
        }
    }
    let learn: Vec<usize> = (0..labels.len()).filter(|&i| in_learn[i]).collect();
    let test: Vec<usize> = (0..labels.len()).filter(|&i| !in_learn[i]).collect();

    let test_by_class: Vec<Vec<usize>> = ClassLabel::ALL
        .iter()
        .map(|c| (0..test.len()).filter(|&k| labels[test[k]] == *c).collect())
        .collect();
    let subsets = (0..spec.test_subsets)
        .map(|s| {
            let mut r = rng::tagged_stream(spec.seed, rng::domain::SUBSET, s as u64);
            let mut subset: Vec<usize> = test_by_class
                .iter()
                .flat_map(|pos| {
                    index::sample(&mut r, pos.len(), per_subset)
                        .into_iter()
                        .map(|k| pos[k])
                        .collect::<Vec<_>>()
                })
                .collect();
            subset.sort_unstable();
            subset
        })
        .collect();

    Ok(Split {
        spec: *spec,
        learn,
        test,
        subsets,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_indicators: usize,
    pub train_accuracy: f64,
    pub test_mean_accuracy: f64,
    /// Sample standard deviation over the subset accuracies.
    pub test_accuracy_sd: f64,
    pub test_subset_accuracies: Vec<f64>,
    pub test_full_accuracy: f64,
    pub oob_accuracy: Option<f64>,
    /// Rows are true classes, columns predicted, on the full test set.
    pub confusion: [[u64; 4]; 4],
    pub per_class_error: [f64; 4],
}

impl EvalReport {
    /// Confusion rows as fractions of each true class.
    pub fn confusion_rates(&self) -> [[f64; 4]; 4] {
        self.confusion.map(|row| {
            let n: u64 = row.iter().sum();
            row.map(|v| if n == 0 { 0.0 } else { v as f64 / n as f64 })
        })
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

fn check_columns<C: Classifier + ?Sized>(
    model: &C,
    matrix: &IndicatorMatrix,
    which: &str,
) -> Result<(), EvalError> {
    if model.indicator_ids() != matrix.columns() {
        return Err(EvalError::ColumnMismatch(format!(
            "{which} matrix has {} columns, model expects {}",
            matrix.n_cols(),
            model.indicator_ids().len()
        )));
    }
    Ok(())
}

fn predict_all<C: Classifier + ?Sized>(
    model: &C,
    matrix: &IndicatorMatrix,
) -> Result<Vec<ClassLabel>, EvalError> {
    (0..matrix.n_rows())
        .into_par_iter()
        .map(|i| model.predict(matrix.row(i)).map(|p| p.label))
        .collect::<Result<Vec<_>, _>>()
        .map_err(EvalError::from)
}

fn accuracy(pred: &[ClassLabel], truth: &[ClassLabel]) -> f64 {
    let hits = pred.iter().zip(truth).filter(|(p, t)| p == t).count();
    hits as f64 / truth.len() as f64
}

/// Training accuracy, test accuracy over the full test set and over each
/// subset (positions into `test`), and the full-test confusion matrix.
pub fn evaluate<C: Classifier + ?Sized>(
    model: &C,
    learn: &IndicatorMatrix,
    test: &IndicatorMatrix,
    subsets: &[Vec<usize>],
) -> Result<EvalReport, EvalError> {
    check_columns(model, learn, "learning")?;
    check_columns(model, test, "test")?;
    let train_pred = predict_all(model, learn)?;
    let test_pred = predict_all(model, test)?;
    let truth = test.labels();

    let mut confusion = [[0u64; 4]; 4];
    for (p, t) in test_pred.iter().zip(truth) {
        confusion[t.index()][p.index()] += 1;
    }
    let per_class_error = std::array::from_fn(|c| {
        let n: u64 = confusion[c].iter().sum();
        if n == 0 {
            0.0
        } else {
            1.0 - confusion[c][c] as f64 / n as f64
        }
    });
    let mut subset_acc = Vec::with_capacity(subsets.len());
    for s in subsets {
        if let Some(&k) = s.iter().find(|&&k| k >= test.n_rows()) {
            return Err(EvalError::InvalidSpec(format!(
                "subset position {k} outside a test set of {}",
                test.n_rows()
            )));
        }
        let hits = s.iter().filter(|&&k| test_pred[k] == truth[k]).count();
        subset_acc.push(hits as f64 / s.len() as f64);
    }
    let full = accuracy(&test_pred, truth);
    let (mean, sd) = if subset_acc.is_empty() {
        (full, 0.0)
    } else {
        mean_sd(&subset_acc)
    };

    Ok(EvalReport {
        n_indicators: model.indicator_ids().len(),
        train_accuracy: accuracy(&train_pred, learn.labels()),
        test_mean_accuracy: mean,
        test_accuracy_sd: sd,
        test_subset_accuracies: subset_acc,
        test_full_accuracy: full,
        oob_accuracy: model.oob_accuracy(),
        confusion,
        per_class_error,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub classifier: ClassifierKind,
    pub records: Vec<EvalReport>,
}

impl SweepResult {
    pub fn record(&self, m: usize) -> Option<&EvalReport> {
        self.records.iter().find(|r| r.n_indicators == m)
    }
}

/// Trains and evaluates on the first `m` ranked indicators for every
/// `m` in `1..=max_count`.
pub fn forward_sweep(
    learn: &IndicatorMatrix,
    test: &IndicatorMatrix,
    subsets: &[Vec<usize>],
    ranking: &RankingResult,
    max_count: usize,
    kind: &ClassifierKind,
) -> Result<SweepResult, EvalError> {
    let counts: Vec<usize> = (1..=max_count).collect();
    sweep_counts(learn, test, subsets, ranking, &counts, kind)
}

/// Like [`forward_sweep`] for an explicit, strictly increasing list of
/// subset sizes.
pub fn sweep_counts(
    learn: &IndicatorMatrix,
    test: &IndicatorMatrix,
    subsets: &[Vec<usize>],
    ranking: &RankingResult,
    counts: &[usize],
    kind: &ClassifierKind,
) -> Result<SweepResult, EvalError> {
    if counts.windows(2).any(|w| w[0] >= w[1]) || counts.first() == Some(&0) {
        return Err(EvalError::Sweep(
            "indicator counts must be positive and strictly increasing".into(),
        ));
    }
    if let Some(&max) = counts.last() {
        if max > ranking.len() {
            return Err(EvalError::Sweep(format!(
                "sweep to {max} indicators but the ranking has {}",
                ranking.len()
            )));
        }
    }
    if learn.columns() != test.columns() {
        return Err(EvalError::ColumnMismatch(
            "learning and test matrices differ".into(),
        ));
    }
    let cols = ranking
        .ordered_ids
        .iter()
        .map(|id| {
            learn
                .column_index(id)
                .ok_or_else(|| EvalError::UnknownIndicator(id.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let records = counts
        .par_iter()
        .map(|&m| {
            let l = learn.select_columns(&cols[..m]);
            let t = test.select_columns(&cols[..m]);
            let model = TrainedModel::train(kind, &l)?;
            evaluate(&model, &l, &t, subsets)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SweepResult {
        classifier: *kind,
        records,
    })
}

/// Subset size `m <= max_allowed` with the best out-of-bag accuracy when
/// present, else the best training accuracy; ties go to the smallest `m`.
pub fn select_optimal(sweep: &SweepResult, max_allowed: usize) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for r in sweep.records.iter().filter(|r| r.n_indicators <= max_allowed) {
        let score = r.oob_accuracy.unwrap_or(r.train_accuracy);
        if best.is_none_or(|(_, s)| score > s) {
            best = Some((r.n_indicators, score));
        }
    }
    best.map(|(m, _)| m)
}

/// `P(bit = 1 | class)` rows for `ids`, in the given order, read from the
/// model's smoothed estimates.
pub fn conditional_probability_report<S: AsRef<str>>(
    model: &NaiveBayesModel,
    ids: &[S],
) -> Result<Vec<ProbabilityRow>, EvalError> {
    ids.iter()
        .enumerate()
        .map(|(k, id)| {
            let id = id.as_ref();
            let probs = model
                .theta_of(id)
                .ok_or_else(|| EvalError::UnknownIndicator(id.to_string()))?;
            Ok(ProbabilityRow::new(k + 1, id, probs))
        })
        .collect()
}

/// Class histogram of the rows selected by `positions`.
pub fn histogram_of(labels: &[ClassLabel], positions: &[usize]) -> [usize; 4] {
    class_histogram(positions.iter().map(|&i| &labels[i]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{nb_train, Prediction};
    use crate::sim::DatasetConfig;

    fn set_a_labels() -> Vec<ClassLabel> {
        let cfg = DatasetConfig::new(crate::sim::Variant::A, 3000, 1000, 0);
        (0..cfg.total()).map(|i| cfg.label_of(i)).collect()
    }

    #[test]
    fn default_split_on_full_set() {
        let labels = set_a_labels();
        let s = split(&labels, &SplitSpec::default_with_seed(4)).unwrap();
        assert_eq!(s.learn.len(), 1000);
        assert_eq!(s.test.len(), 5000);
        assert_eq!(histogram_of(&labels, &s.learn), [250; 4]);
        assert_eq!(histogram_of(&labels, &s.test), [2750, 750, 750, 750]);
        let mut seen = vec![false; labels.len()];
        for &i in s.learn.iter().chain(&s.test) {
            assert!(!seen[i]);
            seen[i] = true;
        }
        assert!(seen.iter().all(|&b| b));
        assert_eq!(s.subsets.len(), 10);
        let test_labels: Vec<ClassLabel> = s.test.iter().map(|&i| labels[i]).collect();
        for sub in &s.subsets {
            assert_eq!(histogram_of(&test_labels, sub), [125; 4]);
            assert!(sub.windows(2).all(|w| w[0] < w[1]));
        }
        assert_eq!(s, split(&labels, &SplitSpec::default_with_seed(4)).unwrap());
        assert_ne!(s.learn, split(&labels, &SplitSpec::default_with_seed(5)).unwrap().learn);
    }

    #[test]
    fn infeasible_split_reports_deficits() {
        let cfg = DatasetConfig::new(crate::sim::Variant::A, 400, 200, 0);
        let labels: Vec<ClassLabel> = (0..cfg.total()).map(|i| cfg.label_of(i)).collect();
        match split(&labels, &SplitSpec::default()) {
            Err(EvalError::Infeasible(d)) => {
                assert_eq!(d.len(), 3);
                assert_eq!(d[0], (ClassLabel::VarianceShift, 175));
            }
            other => panic!("{other:?}"),
        }
        let bad = SplitSpec {
            subset_size: 10,
            ..SplitSpec::default()
        };
        assert!(matches!(split(&labels, &bad), Err(EvalError::InvalidSpec(_))));
    }

    struct Fixed(Vec<String>, Option<ClassLabel>);

    impl Classifier for Fixed {
        fn indicator_ids(&self) -> &[String] {
            &self.0
        }

        fn predict(&self, bits: &[u8]) -> Result<Prediction, ClassifyError> {
            let c = self.1.map_or(bits[0] as usize, |c| c.index());
            let mut s = [0.0; 4];
            s[c] = 1.0;
            Ok(Prediction::from_scores(s))
        }
    }

    /// Column 0 holds the class code (0..=3 fits a u8 but not a bit, so
    /// only rows of classes 0 and 1 are used here).
    fn two_class(n: usize) -> IndicatorMatrix {
        let labels: Vec<ClassLabel> = (0..n).map(|i| ClassLabel::ALL[i % 2]).collect();
        let bits = labels.iter().map(|l| l.code()).collect();
        IndicatorMatrix::new((0..n as u64).collect(), labels, vec!["c".into()], bits).unwrap()
    }

    #[test]
    fn perfect_and_constant_models() {
        let m = two_class(40);
        let subsets = vec![(0..10).collect(), (10..40).collect()];
        let perfect = Fixed(vec!["c".into()], None);
        let r = evaluate(&perfect, &m, &m, &subsets).unwrap();
        assert_eq!(r.test_full_accuracy, 1.0);
        assert_eq!(r.test_mean_accuracy, 1.0);
        assert_eq!(r.test_accuracy_sd, 0.0);
        assert_eq!(r.confusion[0], [20, 0, 0, 0]);
        assert_eq!(r.confusion[1], [0, 20, 0, 0]);

        let constant = Fixed(vec!["c".into()], Some(ClassLabel::None));
        let r = evaluate(&constant, &m, &m, &subsets).unwrap();
        assert_eq!(r.test_full_accuracy, 0.5);
        assert_eq!(r.per_class_error, [0.0, 1.0, 0.0, 0.0]);
        let trace: u64 = (0..4).map(|c| r.confusion[c][c]).sum();
        let total: u64 = r.confusion.iter().flatten().sum();
        assert_eq!(trace as f64 / total as f64, r.test_full_accuracy);

        let other = Fixed(vec!["x".into()], None);
        assert!(matches!(
            evaluate(&other, &m, &m, &subsets),
            Err(EvalError::ColumnMismatch(_))
        ));
    }

    #[test]
    fn select_optimal_tie_breaks() {
        let rec = |m: usize, acc: f64| EvalReport {
            n_indicators: m,
            train_accuracy: acc,
            test_mean_accuracy: 0.0,
            test_accuracy_sd: 0.0,
            test_subset_accuracies: vec![],
            test_full_accuracy: 0.0,
            oob_accuracy: None,
            confusion: [[0; 4]; 4],
            per_class_error: [0.0; 4],
        };
        let mut sweep = SweepResult {
            classifier: ClassifierKind::NaiveBayes,
            records: (1..=10).map(|m| rec(m, m as f64 / 10.0)).collect(),
        };
        assert_eq!(select_optimal(&sweep, 7), Some(7));
        for r in &mut sweep.records {
            r.train_accuracy = 0.5;
        }
        assert_eq!(select_optimal(&sweep, 10), Some(1));
        sweep.records[4].oob_accuracy = Some(0.9);
        for r in &mut sweep.records {
            r.oob_accuracy.get_or_insert(0.1);
        }
        assert_eq!(select_optimal(&sweep, 10), Some(5));
    }

    fn perfect_feature_matrix() -> IndicatorMatrix {
        // column "noise" is uninformative; "hi" and "odd" jointly identify the class
        let n = 200;
        let labels: Vec<ClassLabel> = (0..n).map(|i| ClassLabel::ALL[i % 4]).collect();
        let mut bits = Vec::new();
        for (i, l) in labels.iter().enumerate() {
            bits.extend([(l.code() >= 2) as u8, l.code() % 2, ((i / 4) % 2) as u8]);
        }
        IndicatorMatrix::new(
            (0..n as u64).collect(),
            labels,
            vec!["hi".into(), "odd".into(), "noise".into()],
            bits,
        )
        .unwrap()
    }

    #[test]
    fn sweep_accuracy_grows_with_informative_columns() {
        let m = perfect_feature_matrix();
        let ranking = crate::features::mrmr_rank(&m, 3);
        assert_eq!(&ranking.ordered_ids[..2].len(), &2);
        let subsets = vec![(0..100).collect()];
        let sweep =
            forward_sweep(&m, &m, &subsets, &ranking, 3, &ClassifierKind::NaiveBayes).unwrap();
        assert_eq!(sweep.records.len(), 3);
        assert!((sweep.records[0].test_full_accuracy - 0.5).abs() < 1e-12);
        assert_eq!(sweep.records[1].test_full_accuracy, 1.0);
        assert_eq!(select_optimal(&sweep, 3), Some(2));
        let again =
            forward_sweep(&m, &m, &subsets, &ranking, 3, &ClassifierKind::NaiveBayes).unwrap();
        assert_eq!(sweep, again);
        assert!(forward_sweep(&m, &m, &subsets, &ranking, 4, &ClassifierKind::NaiveBayes).is_err());
    }

    #[test]
    fn probability_rows_equal_theta() {
        let m = perfect_feature_matrix();
        let model = nb_train(&m).unwrap();
        let rows = conditional_probability_report(&model, &["odd", "hi"]).unwrap();
        assert_eq!(rows[0].indicator_id, "odd");
        assert_eq!(rows[0].probs, model.theta_of("odd").unwrap());
        assert_eq!(rows[1].probs[0], 1.0 / 52.0);
        assert!(matches!(
            conditional_probability_report(&model, &["nope"]),
            Err(EvalError::UnknownIndicator(_))
        ));
    }
}
