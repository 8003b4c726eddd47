//! Classifiers over binary indicator vectors.

mod forest;
mod nb;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::ClassLabel;

pub use forest::{
    rf_predict, rf_train, rf_variable_importance, ForestModel, ForestParams, Node, Tree,
};
pub use nb::{nb_predict, nb_train, nb_train_classes, NaiveBayesModel};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClassifyError {
    #[error("training matrix is empty")]
    EmptyMatrix,
    #[error("class `{0}` has no training example")]
    MissingClass(ClassLabel),
    #[error("expected {expected} indicator bits, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("indicator columns differ from the model's ({0})")]
    ColumnMismatch(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed model: {0}")]
    MalformedModel(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub label: ClassLabel,
    /// Posterior probabilities (Naive Bayes) or vote fractions (forest),
    /// indexed by class code; sums to 1.
    pub per_class_score: [f64; 4],
}

impl Prediction {
    /// Highest score, ties to the lower class code.
    pub fn from_scores(per_class_score: [f64; 4]) -> Self {
        let mut best = 0;
        for c in 1..4 {
            if per_class_score[c] > per_class_score[best] {
                best = c;
            }
        }
        Self {
            label: ClassLabel::ALL[best],
            per_class_score,
        }
    }
}

/// A trained model that maps indicator bits to a class.
pub trait Classifier: Sync {
    fn indicator_ids(&self) -> &[String];

    fn predict(&self, bits: &[u8]) -> Result<Prediction, ClassifyError>;

    /// Out-of-bag accuracy, for models that track it.
    fn oob_accuracy(&self) -> Option<f64> {
        None
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    NaiveBayes,
    Forest(ForestParams),
}

impl ClassifierKind {
    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::NaiveBayes => "nb",
            ClassifierKind::Forest(_) => "rf",
        }
    }
}

/// Model file contents: either classifier, tagged by kind.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrainedModel {
    NaiveBayes(NaiveBayesModel),
    Forest(ForestModel),
}

impl TrainedModel {
    pub fn train(
        kind: &ClassifierKind,
        matrix: &crate::indicators::IndicatorMatrix,
    ) -> Result<Self, ClassifyError> {
        Ok(match kind {
            ClassifierKind::NaiveBayes => TrainedModel::NaiveBayes(nb_train(matrix)?),
            ClassifierKind::Forest(p) => TrainedModel::Forest(rf_train(matrix, p)?),
        })
    }

    pub fn as_classifier(&self) -> &dyn Classifier {
        match self {
            TrainedModel::NaiveBayes(m) => m,
            TrainedModel::Forest(m) => m,
        }
    }

    pub fn validate(&self) -> Result<(), ClassifyError> {
        match self {
            TrainedModel::NaiveBayes(m) => m.validate(),
            TrainedModel::Forest(m) => m.validate(),
        }
    }
}

impl Classifier for TrainedModel {
    fn indicator_ids(&self) -> &[String] {
        self.as_classifier().indicator_ids()
    }

    fn predict(&self, bits: &[u8]) -> Result<Prediction, ClassifyError> {
        self.as_classifier().predict(bits)
    }

    fn oob_accuracy(&self) -> Option<f64> {
        self.as_classifier().oob_accuracy()
    }
}
