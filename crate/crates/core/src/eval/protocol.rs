use std::fmt::Write as _;

use log::info;
use serde::{Deserialize, Serialize};

use super::{
    conditional_probability_report, evaluate, forward_sweep, select_optimal, split, sweep_counts,
    EvalError, EvalReport, ProbabilityRow, Split, SplitSpec, SweepResult,
};
use crate::classify::{nb_train, rf_train, ClassifierKind, ForestParams, NaiveBayesModel};
use crate::features::{mrmr_rank, RankingResult};
use crate::indicators::{default_grid, featurize, IndicatorMatrix};
use crate::sim::{generate_dataset, DatasetConfig, Variant};

/// Full experiment on one simulated corpus. One seed drives every stage;
/// each stage draws from its own tagged stream.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub variant: Variant,
    pub seed: u64,
    pub n_normal: usize,
    pub n_per_anomaly: usize,
    pub learn_per_class: usize,
    pub test_subsets: usize,
    pub subset_size: usize,
    pub n_trees: usize,
    /// Length of the mRMR ranking and of the Naive Bayes sweep.
    pub sweep_max: usize,
    /// Subset sizes for the forest sweep.
    pub forest_counts: Vec<usize>,
    /// Largest subset size considered when selecting the NB model.
    pub select_max: usize,
    pub table_top: usize,
}

impl ProtocolConfig {
    pub fn full(variant: Variant, seed: u64) -> Self {
        Self {
            variant,
            seed,
            n_normal: 3000,
            n_per_anomaly: 1000,
            learn_per_class: 250,
            test_subsets: 10,
            subset_size: 500,
            n_trees: 500,
            sweep_max: 100,
            forest_counts: (1..=100).collect(),
            select_max: 30,
            table_top: 23,
        }
    }

    pub fn dataset(&self) -> DatasetConfig {
        DatasetConfig::new(self.variant, self.n_normal, self.n_per_anomaly, self.seed)
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec {
            learn_per_class: self.learn_per_class,
            test_subsets: self.test_subsets,
            subset_size: self.subset_size,
            seed: self.seed,
        }
    }

    pub fn forest(&self) -> ForestParams {
        ForestParams {
            n_trees: self.n_trees,
            mtry: None,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolOutcome {
    pub config: ProtocolConfig,
    #[serde(skip)]
    pub matrix: Option<IndicatorMatrix>,
    pub split: Split,
    pub ranking: RankingResult,
    pub rf_full: EvalReport,
    pub nb_full: EvalReport,
    pub nb_sweep: SweepResult,
    pub rf_sweep: SweepResult,
    pub nb_selected_m: usize,
    pub nb_selected: EvalReport,
    pub nb_selected_model: NaiveBayesModel,
    pub table: Vec<ProbabilityRow>,
}

/// Simulates, featurizes with the default grid and runs
/// [`run_protocol_on`].
pub fn run_protocol(config: &ProtocolConfig) -> Result<ProtocolOutcome, EvalError> {
    info!("simulating {} signals", config.dataset().total());
    let signals = generate_dataset(&config.dataset());
    let grid = default_grid(config.variant);
    info!("featurizing with {} indicators", grid.len());
    let matrix = featurize(&signals, &grid);
    run_protocol_on(matrix, config)
}

/// Split, rank, full-grid models, forward sweeps, NB selection and the
/// probability table, on an already featurized corpus.
pub fn run_protocol_on(
    matrix: IndicatorMatrix,
    config: &ProtocolConfig,
) -> Result<ProtocolOutcome, EvalError> {
    let split = split(matrix.labels(), &config.split_spec())?;
    let learn = matrix.select_rows(&split.learn);
    let test = matrix.select_rows(&split.test);
    if config.sweep_max > matrix.n_cols() || config.table_top > config.sweep_max {
        return Err(EvalError::Sweep(format!(
            "sweep to {} and table of {} with {} indicators",
            config.sweep_max,
            config.table_top,
            matrix.n_cols()
        )));
    }

    info!("training forest on all {} indicators", matrix.n_cols());
    let forest = rf_train(&learn, &config.forest())?;
    let rf_full = evaluate(&forest, &learn, &test, &split.subsets)?;
    drop(forest);
    let nb = nb_train(&learn)?;
    let nb_full = evaluate(&nb, &learn, &test, &split.subsets)?;

    info!("ranking {} indicators", config.sweep_max);
    let ranking = mrmr_rank(&learn, config.sweep_max);
    info!("naive Bayes sweep");
    let nb_sweep = forward_sweep(
        &learn,
        &test,
        &split.subsets,
        &ranking,
        config.sweep_max,
        &ClassifierKind::NaiveBayes,
    )?;
    info!("forest sweep over {} sizes", config.forest_counts.len());
    let rf_sweep = sweep_counts(
        &learn,
        &test,
        &split.subsets,
        &ranking,
        &config.forest_counts,
        &ClassifierKind::Forest(config.forest()),
    )?;

    let nb_selected_m = select_optimal(&nb_sweep, config.select_max)
        .ok_or_else(|| EvalError::Sweep("empty sweep".into()))?;
    let ids = ranking.top(nb_selected_m);
    let l = learn
        .select_columns_by_id(ids)
        .map_err(EvalError::UnknownIndicator)?;
    let t = test
        .select_columns_by_id(ids)
        .map_err(EvalError::UnknownIndicator)?;
    let nb_selected_model = nb_train(&l)?;
    let nb_selected = evaluate(&nb_selected_model, &l, &t, &split.subsets)?;
    let table = conditional_probability_report(&nb, ranking.top(config.table_top))?;

    Ok(ProtocolOutcome {
        config: config.clone(),
        matrix: Some(matrix),
        split,
        ranking,
        rf_full,
        nb_full,
        nb_sweep,
        rf_sweep,
        nb_selected_m,
        nb_selected,
        nb_selected_model,
        table,
    })
}

fn confusion_table(out: &mut String, r: &EvalReport) {
    let names = ["none", "variance", "mean", "trend"];
    let _ = writeln!(out, "{:>10} {:>8} {:>8} {:>8} {:>8}", "", names[0], names[1], names[2], names[3]);
    for (c, row) in r.confusion.iter().enumerate() {
        let _ = writeln!(
            out,
            "{:>10} {:>8} {:>8} {:>8} {:>8}",
            names[c], row[0], row[1], row[2], row[3]
        );
    }
}

impl ProtocolOutcome {
    /// Plain-text summary of the headline numbers.
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let c = &self.config;
        let _ = writeln!(s, "set {} (seed {})", c.variant, c.seed);
        let acc = |r: &EvalReport| format!("{:.4} ({:.4})", r.test_mean_accuracy, r.test_accuracy_sd);
        let _ = writeln!(
            s,
            "random forest, all indicators: test {}  oob {:.4}",
            acc(&self.rf_full),
            self.rf_full.oob_accuracy.unwrap_or(f64::NAN)
        );
        let _ = writeln!(s, "naive Bayes, all indicators:   test {}", acc(&self.nb_full));
        let _ = writeln!(
            s,
            "naive Bayes, mRMR top {:<3}:    test {}  train {:.4}",
            self.nb_selected_m,
            acc(&self.nb_selected),
            self.nb_selected.train_accuracy
        );
        for m in [30, 100] {
            if let Some(r) = self.rf_sweep.record(m) {
                let _ = writeln!(s, "random forest, mRMR top {m:<3}:  test {}", acc(r));
            }
        }
        let _ = writeln!(s, "\nnaive Bayes confusion, all indicators (rows true, columns predicted):");
        confusion_table(&mut s, &self.nb_full);
        let _ = writeln!(s, "\nP(positive | class), top {} indicators:", self.table.len());
        let _ = writeln!(s, "{:>4} {:<14} {:>8} {:>8} {:>8} {:>8}", "rank", "label", "none", "variance", "mean", "trend");
        for r in &self.table {
            let _ = writeln!(
                s,
                "{:>4} {:<14} {:>8.4} {:>8.4} {:>8.4} {:>8.4}",
                r.rank, r.short_label, r.probs[0], r.probs[1], r.probs[2], r.probs[3]
            );
        }
        s
    }
}
