use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::SweepResult;
use crate::indicators::IndicatorSpec;
use crate::io::{self, fmt_f64, FormatError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityRow {
    pub rank: usize,
    pub indicator_id: String,
    /// Compact label such as `confu(2,3)`; the id itself when it does not
    /// parse as an indicator spec.
    pub short_label: String,
    /// `P(bit = 1 | class)` for classes 0..=3.
    pub probs: [f64; 4],
}

impl ProbabilityRow {
    pub fn new(rank: usize, id: &str, probs: [f64; 4]) -> Self {
        let short_label = id
            .parse::<IndicatorSpec>()
            .map(|s| s.short_label())
            .unwrap_or_else(|_| id.to_string());
        Self {
            rank,
            indicator_id: id.to_string(),
            short_label,
            probs,
        }
    }
}

/// `rank,indicator_id,label,p_none,p_variance,p_mean,p_trend`
pub fn write_probability_csv<W: Write>(out: W, rows: &[ProbabilityRow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "rank",
        "indicator_id",
        "label",
        "p_none",
        "p_variance",
        "p_mean",
        "p_trend",
    ])?;
    for r in rows {
        let mut rec = vec![r.rank.to_string(), r.indicator_id.clone(), r.short_label.clone()];
        rec.extend(r.probs.iter().map(|&p| fmt_f64(p)));
        w.write_record(&rec)?;
    }
    w.flush()
}

/// Flat accuracy table, one row per `(n_indicators, subset)`:
/// `n_indicators,subset,accuracy`.
pub fn write_plot_csv<W: Write>(out: W, sweep: &SweepResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n_indicators", "subset", "accuracy"])?;
    for r in &sweep.records {
        for (s, acc) in r.test_subset_accuracies.iter().enumerate() {
            w.write_record([r.n_indicators.to_string(), s.to_string(), fmt_f64(*acc)])?;
        }
    }
    w.flush()
}

/// One row per subset size with train, test, OOB and per-class errors.
pub fn write_sweep_summary_csv<W: Write>(out: W, sweep: &SweepResult) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "n_indicators",
        "train_accuracy",
        "test_mean_accuracy",
        "test_accuracy_sd",
        "test_full_accuracy",
        "oob_accuracy",
        "error_none",
        "error_variance",
        "error_mean",
        "error_trend",
    ])?;
    for r in &sweep.records {
        let mut rec = vec![
            r.n_indicators.to_string(),
            fmt_f64(r.train_accuracy),
            fmt_f64(r.test_mean_accuracy),
            fmt_f64(r.test_accuracy_sd),
            fmt_f64(r.test_full_accuracy),
            r.oob_accuracy.map(fmt_f64).unwrap_or_default(),
        ];
        rec.extend(r.per_class_error.iter().map(|&e| fmt_f64(e)));
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn read_sweep(path: &Path) -> Result<SweepResult, FormatError> {
    let text = io::read_to_string(path)?;
    let sweep: SweepResult = serde_json::from_str(&text)
        .map_err(|e| FormatError::at_line(e.line(), e.to_string()).in_file(path))?;
    if sweep
        .records
        .windows(2)
        .any(|w| w[0].n_indicators >= w[1].n_indicators)
    {
        return Err(FormatError::new("sweep records are not in increasing order").in_file(path));
    }
    Ok(sweep)
}
