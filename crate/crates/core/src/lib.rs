//! Anomaly classification by indicator aggregation.
//!
//! Signals are scanned with sliding two-sample tests (Mann-Whitney U,
//! two-sample Kolmogorov-Smirnov, F variance ratio). The per-window
//! decisions are folded into binary indicators by confirmation rules,
//! ranked with mRMR and classified with Bernoulli Naive Bayes or a
//! Random Forest.
//!
//! The pipeline, end to end:
//!
//! ```no_run
//! use indagg::prelude::*;
//!
//! let signals = generate_dataset(&DatasetConfig::new(Variant::A, 300, 100, 1));
//! let grid = default_grid(Variant::A);
//! let matrix = featurize(&signals, &grid);
//! let spec = SplitSpec { learn_per_class: 50, test_subsets: 5, subset_size: 100, seed: 7 };
//! let split = split(matrix.labels(), &spec).unwrap();
//! let learn = matrix.select_rows(&split.learn);
//! let test = matrix.select_rows(&split.test);
//! let ranking = mrmr_rank(&learn, 23);
//! let learn = learn.select_columns_by_id(&ranking.ordered_ids).unwrap();
//! let test = test.select_columns_by_id(&ranking.ordered_ids).unwrap();
//! let model = nb_train(&learn).unwrap();
//! let report = evaluate(&model, &learn, &test, &split.subsets).unwrap();
//! println!("{:.4}", report.test_mean_accuracy);
//! ```

pub mod classify;
pub mod cli;
pub mod eval;
pub mod features;
pub mod indicators;
pub mod io;
pub mod rng;
pub mod sim;
pub mod stats;

pub mod prelude {
    pub use crate::classify::{
        nb_predict, nb_train, rf_predict, rf_train, rf_variable_importance, Classifier,
        ClassifierKind, ForestModel, ForestParams, NaiveBayesModel, Prediction,
    };
    pub use crate::eval::{
        conditional_probability_report, evaluate, forward_sweep, select_optimal, split,
        EvalReport, SplitSpec, SweepResult,
    };
    pub use crate::features::{mrmr_rank, mutual_information, RankingResult};
    pub use crate::indicators::{
        confirm, default_grid, evaluate_grid, featurize, scan, smooth, ConfirmationFamily,
        IndicatorGrid, IndicatorMatrix, IndicatorSpec, Overlap, WindowScheme, WindowSize,
    };
    pub use crate::sim::{
        generate_dataset, generate_signal, ClassLabel, DatasetConfig, Signal, Variant,
    };
    pub use crate::stats::{
        f_variance_test, ks_two_sample, mann_whitney_u, reject, TestKind, TestResult,
    };
}
