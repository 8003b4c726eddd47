//! Command-line front end. Every stage reads and writes files, so a run
//! can be resumed or inspected at any point.
//!
//! Exit codes: 0 success, 2 usage error, 3 input error (missing or
//! malformed file, dimension mismatch), 4 runtime failure.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifierKind, ClassifyError, ForestParams, TrainedModel};
use crate::eval::{
    conditional_probability_report, evaluate, forward_sweep, run_protocol_on, split,
    write_plot_csv, write_probability_csv, write_sweep_summary_csv, EvalError, ProtocolConfig,
    Split, SplitSpec,
};
use crate::features::{mrmr_rank, RankingResult};
use crate::indicators::{default_grid, evaluate_grid, IndicatorGrid, IndicatorMatrix};
use crate::io::{self, FormatError};
use crate::sim::{self, generate_dataset, DatasetConfig, Signal, Variant};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_INPUT: u8 = 3;
pub const EXIT_RUNTIME: u8 = 4;

const FILE_FORMATS: &str = "\
FILE FORMATS
  dataset (.jsonl)   one JSON object per line:
                     {\"id\":u64,\"label\":0..3,\"change_point\":k|null,
                      \"shift_param\":x|null,\"values\":[f64,...]}
                     labels: 0 none, 1 variance shift, 2 mean shift, 3 trend shift
  grid (.json)       {\"specs\":[{\"test\":\"mann_whitney_u\"|\"kolmogorov_smirnov2\"
                     |\"f_variance_ratio\",\"window\":{\"fixed\":30}|\"adaptive\",
                     \"level\":0.1,\"family\":{\"rate\":{\"beta\":0.1}}
                     |{\"longest_run\":{\"beta\":0.3}}|{\"k_of_n\":{\"k\":2,\"n\":3}},
                     \"overlap\":\"full\"|{\"shared\":5},\"smoothed\":false},...]}
                     or {\"generator\":{...}} with parameter lists
  matrix (.csv)      header signal_id,label,<indicator ids>; one 0/1 row per signal
  split (.json)      {\"spec\":{...},\"learn\":[row...],\"test\":[row...],
                     \"subsets\":[[position in test...],...]}
  ranking (.csv)     rank,indicator_id,relevance,redundancy,score
  model (.json)      {\"kind\":\"naive_bayes\",...} or {\"kind\":\"forest\",...}
  report (.json)     accuracies, subset accuracies, OOB, 4x4 confusion
                     (rows true class, columns predicted), per-class error
  sweep (.json)      {\"classifier\":...,\"records\":[report per subset size]}
  table (.csv)       rank,indicator_id,label,p_none,p_variance,p_mean,p_trend
Every command also writes <output>.manifest.json with the tool version,
seeds, arguments, SHA-256 digests of inputs and outputs and timestamps.";

#[derive(Debug, Parser)]
#[command(
    name = "indagg",
    version,
    about = "Simulate signals, build binary test indicators, rank them and classify anomalies",
    after_long_help = FILE_FORMATS,
)]
pub struct Cli {
    /// Worker threads (defaults to all cores)
    #[arg(long, global = true, env = "INDAGG_JOBS")]
    pub jobs: Option<usize>,

    /// Only print warnings and errors
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labelled corpus of simulated signals
    Simulate(SimulateArgs),
    /// Evaluate an indicator grid on every signal of a dataset
    Featurize(FeaturizeArgs),
    /// Draw a class-balanced learning set and balanced test subsets
    Split(SplitArgs),
    /// Rank indicators by mRMR on the learning rows
    Rank(RankArgs),
    /// Train Naive Bayes or a Random Forest on the learning rows
    Train(TrainArgs),
    /// Train and evaluate on the top 1..=max ranked indicators
    Sweep(SweepArgs),
    /// Evaluate a model, or print its class-conditional probability table
    Report(ReportArgs),
    /// Run the whole protocol on sets A and B with pinned seeds
    ReproducePaper(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VariantArg {
    A,
    B,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::A => Variant::A,
            VariantArg::B => Variant::B,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ClassifierArg {
    /// Bernoulli Naive Bayes
    Nb,
    /// Random Forest
    Rf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Data set variant; B has smaller mean shifts
    #[arg(long, value_enum, default_value = "a", ignore_case = true)]
    pub variant: VariantArg,
    /// Number of signals without anomaly
    #[arg(long, default_value_t = 3000)]
    pub normal: usize,
    /// Number of signals per anomaly class
    #[arg(long, default_value_t = 1000)]
    pub per_anomaly: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Dataset file to write (JSON lines)
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct FeaturizeArgs {
    /// Dataset file (JSON lines)
    #[arg(long, short)]
    pub input: PathBuf,
    /// Grid file; the built-in 810-indicator grid when omitted
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Matrix file to write (CSV)
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Matrix file (CSV)
    #[arg(long, short)]
    pub matrix: PathBuf,
    #[arg(long, default_value_t = 250)]
    pub learn_per_class: usize,
    /// Number of balanced test subsets
    #[arg(long, default_value_t = 10)]
    pub subsets: usize,
    /// Size of each test subset (multiple of 4)
    #[arg(long, default_value_t = 500)]
    pub subset_size: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Split file to write (JSON)
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct RankArgs {
    #[arg(long, short)]
    pub matrix: PathBuf,
    #[arg(long, short)]
    pub split: PathBuf,
    /// Number of indicators to rank
    #[arg(long, default_value_t = 100)]
    pub count: usize,
    /// Ranking file to write (CSV)
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ForestArgs {
    /// Trees in the forest
    #[arg(long, default_value_t = 500)]
    pub trees: usize,
    /// Candidate columns per node (default floor(sqrt(columns)))
    #[arg(long)]
    pub mtry: Option<usize>,
    /// Forest seed
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

impl ForestArgs {
    fn kind(&self, classifier: ClassifierArg) -> ClassifierKind {
        match classifier {
            ClassifierArg::Nb => ClassifierKind::NaiveBayes,
            ClassifierArg::Rf => ClassifierKind::Forest(ForestParams {
                n_trees: self.trees,
                mtry: self.mtry,
                seed: self.seed,
            }),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, short)]
    pub matrix: PathBuf,
    #[arg(long, short)]
    pub split: PathBuf,
    #[arg(long, short, value_enum)]
    pub classifier: ClassifierArg,
    /// Restrict to the top indicators of this ranking
    #[arg(long, short)]
    pub ranking: Option<PathBuf>,
    /// Number of ranked indicators to keep (needs --ranking)
    #[arg(long, requires = "ranking")]
    pub top: Option<usize>,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Model file to write (JSON)
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, short)]
    pub matrix: PathBuf,
    #[arg(long, short)]
    pub split: PathBuf,
    #[arg(long, short)]
    pub ranking: PathBuf,
    #[arg(long, short, value_enum)]
    pub classifier: ClassifierArg,
    /// Largest number of indicators
    #[arg(long, default_value_t = 100)]
    pub max: usize,
    #[command(flatten)]
    pub forest: ForestArgs,
    /// Sweep file to write (JSON)
    #[arg(long, short)]
    pub output: PathBuf,
    /// Also write one row per (indicator count, subset) accuracy
    #[arg(long)]
    pub plot_csv: Option<PathBuf>,
    /// Also write one summary row per indicator count
    #[arg(long)]
    pub summary_csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Model file (JSON)
    #[arg(long)]
    pub model: PathBuf,
    /// Matrix file, needed for the evaluation report
    #[arg(long, short, required_unless_present = "table5")]
    pub matrix: Option<PathBuf>,
    /// Split file, needed for the evaluation report
    #[arg(long, short, required_unless_present = "table5")]
    pub split: Option<PathBuf>,
    /// Write P(indicator positive | class) for the model's first indicators
    /// instead of the evaluation report (Naive Bayes models only)
    #[arg(long)]
    pub table5: bool,
    /// Rows of the probability table
    #[arg(long, default_value_t = 23)]
    pub top: usize,
    /// Report file to write (JSON, or CSV with --table5)
    #[arg(long, short)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Output directory (created if missing)
    #[arg(long, short)]
    pub out_dir: PathBuf,
    /// Sets to run
    #[arg(long, value_enum, value_delimiter = ',', default_values = ["a", "b"], ignore_case = true)]
    pub sets: Vec<VariantArg>,
    #[arg(long, default_value_t = 1)]
    pub seed_a: u64,
    #[arg(long, default_value_t = 2)]
    pub seed_b: u64,
    #[arg(long, default_value_t = 500)]
    pub trees: usize,
    /// Largest subset size in the forest sweep
    #[arg(long, default_value_t = 100)]
    pub forest_max: usize,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Input(_) => EXIT_INPUT,
            CliError::Runtime(_) => EXIT_RUNTIME,
        }
    }
}

impl From<FormatError> for CliError {
    fn from(e: FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::ColumnMismatch(_)
            | EvalError::UnknownIndicator(_)
            | EvalError::Infeasible(_)
            | EvalError::Classify(ClassifyError::DimensionMismatch { .. })
            | EvalError::Classify(ClassifyError::ColumnMismatch(_)) => CliError::Input(e.to_string()),
            EvalError::InvalidSpec(_) | EvalError::Sweep(_) => CliError::Usage(e.to_string()),
            EvalError::Classify(_) => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        CliError::from(EvalError::from(e))
    }
}

fn write_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

/// Provenance record written next to every output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub seeds: BTreeMap<String, u64>,
    pub jobs: usize,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub started_unix: f64,
    pub finished_unix: f64,
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn digests(paths: &[PathBuf]) -> Result<Vec<FileDigest>, CliError> {
    paths
        .iter()
        .map(|p| {
            Ok(FileDigest {
                path: p.clone(),
                sha256: io::sha256_file(p).map_err(|e| write_err(p, e))?,
            })
        })
        .collect()
}

/// Path of the manifest for `output`: `<output>.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

struct Run {
    command: &'static str,
    args: Vec<String>,
    seeds: BTreeMap<String, u64>,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    started: f64,
}

impl Run {
    fn new(command: &'static str, args: &[String]) -> Self {
        Self {
            command,
            args: args.to_vec(),
            seeds: BTreeMap::new(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: unix_now(),
        }
    }

    fn seed(&mut self, name: &str, seed: u64) {
        self.seeds.insert(name.to_string(), seed);
    }

    fn input(&mut self, path: &Path) {
        self.inputs.push(path.to_path_buf());
    }

    fn write<F>(&mut self, path: &Path, fill: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        io::write_atomic(path, fill).map_err(|e| write_err(path, e))?;
        self.outputs.push(path.to_path_buf());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, path: &Path, value: &T) -> Result<(), CliError> {
        self.write(path, |w| {
            serde_json::to_writer_pretty(&mut *w, value)?;
            w.write_all(b"\n")
        })
    }

    fn finish(self, manifest: &Path) -> Result<(), CliError> {
        let m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.to_string(),
            args: self.args,
            seeds: self.seeds,
            jobs: rayon::current_num_threads(),
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
            started_unix: self.started,
            finished_unix: unix_now(),
        };
        io::write_atomic(manifest, |w| {
            serde_json::to_writer_pretty(&mut *w, &m)?;
            w.write_all(b"\n")
        })
        .map_err(|e| write_err(manifest, e))
    }
}

fn load_matrix(path: &Path) -> Result<IndicatorMatrix, CliError> {
    info!("reading {}", path.display());
    Ok(IndicatorMatrix::load(path)?)
}

/// Reads a split file and checks it against a matrix of `n_rows` rows.
pub fn load_split(path: &Path, n_rows: usize) -> Result<Split, CliError> {
    let text = io::read_to_string(path)?;
    let s: Split = serde_json::from_str(&text)
        .map_err(|e| FormatError::at_line(e.line(), e.to_string()).in_file(path))?;
    let bad = |m: String| Err(CliError::Input(format!("{}: {m}", path.display())));
    if let Some(&i) = s.learn.iter().chain(&s.test).find(|&&i| i >= n_rows) {
        return bad(format!("row {i} outside a matrix of {n_rows} rows"));
    }
    let mut seen = vec![false; n_rows];
    for &i in s.learn.iter().chain(&s.test) {
        if std::mem::replace(&mut seen[i], true) {
            return bad(format!("row {i} listed twice"));
        }
    }
    if let Some(&k) = s.subsets.iter().flatten().find(|&&k| k >= s.test.len()) {
        return bad(format!("subset position {k} outside a test set of {}", s.test.len()));
    }
    Ok(s)
}

fn learn_test(
    matrix: &IndicatorMatrix,
    split: &Split,
    ids: Option<&[String]>,
) -> Result<(IndicatorMatrix, IndicatorMatrix), CliError> {
    let (l, t) = (matrix.select_rows(&split.learn), matrix.select_rows(&split.test));
    match ids {
        None => Ok((l, t)),
        Some(ids) => Ok((
            l.select_columns_by_id(ids).map_err(CliError::Input)?,
            t.select_columns_by_id(ids).map_err(CliError::Input)?,
        )),
    }
}

fn load_ranking(path: &Path) -> Result<RankingResult, CliError> {
    Ok(RankingResult::load(path)?)
}

fn load_model(path: &Path) -> Result<TrainedModel, CliError> {
    let text = io::read_to_string(path)?;
    let model: TrainedModel = serde_json::from_str(&text)
        .map_err(|e| FormatError::at_line(e.line(), e.to_string()).in_file(path))?;
    model
        .validate()
        .map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok(model)
}

/// Featurizes in chunks so progress can be logged.
fn featurize_logged(signals: &[Signal], grid: &IndicatorGrid) -> IndicatorMatrix {
    let start = Instant::now();
    let chunk = 500;
    let mut bits = Vec::with_capacity(signals.len() * grid.len());
    for (c, part) in signals.chunks(chunk).enumerate() {
        let rows: Vec<Vec<u8>> = part.par_iter().map(|s| evaluate_grid(s, grid)).collect();
        bits.extend(rows.into_iter().flatten());
        info!(
            "featurized {}/{} signals ({:.1}s)",
            (c * chunk + part.len()),
            signals.len(),
            start.elapsed().as_secs_f64()
        );
    }
    IndicatorMatrix::new(
        signals.iter().map(|s| s.id).collect(),
        signals.iter().map(|s| s.label).collect(),
        grid.ids().to_vec(),
        bits,
    )
    .expect("grid evaluation yields one bit per indicator")
}

fn cmd_simulate(a: &SimulateArgs, args: &[String]) -> Result<(), CliError> {
    let mut run = Run::new("simulate", args);
    run.seed("seed", a.seed);
    let cfg = DatasetConfig::new(a.variant.into(), a.normal, a.per_anomaly, a.seed);
    info!("simulating {} signals of set {}", cfg.total(), cfg.variant);
    let signals = generate_dataset(&cfg);
    run.write(&a.output, |w| sim::write_dataset(w, &signals))?;
    run.finish(&manifest_path(&a.output))
}

fn cmd_featurize(a: &FeaturizeArgs, args: &[String]) -> Result<(), CliError> {
    let mut run = Run::new("featurize", args);
    run.input(&a.input);
    info!("reading {}", a.input.display());
    let signals = sim::load_dataset(&a.input)?;
    let grid = match &a.grid {
        Some(p) => {
            run.input(p);
            IndicatorGrid::load(p)?
        }
        None => default_grid(Variant::A),
    };
    info!("{} signals x {} indicators", signals.len(), grid.len());
    let matrix = featurize_logged(&signals, &grid);
    run.write(&a.output, |w| matrix.write_csv(w))?;
    run.finish(&manifest_path(&a.output))
}

fn cmd_split(a: &SplitArgs, args: &[String]) -> Result<(), CliError> {
    let mut run = Run::new("split", args);
    run.seed("seed", a.seed);
    run.input(&a.matrix);
    let matrix = load_matrix(&a.matrix)?;
    let spec = SplitSpec {
        learn_per_class: a.learn_per_class,
        test_subsets: a.subsets,
        subset_size: a.subset_size,
        seed: a.seed,
    };
    let s = split(matrix.labels(), &spec)?;
    run.write_json(&a.output, &s)?;
    run.finish(&manifest_path(&a.output))
}

fn cmd_rank(a: &RankArgs, args: &[String]) -> Result<(), CliError> {
    let mut run = Run::new("rank", args);
    run.input(&a.matrix);
    run.input(&a.split);
    let matrix = load_matrix(&a.matrix)?;
    let s = load_split(&a.split, matrix.n_rows())?;
    if a.count > matrix.n_cols() {
        return Err(CliError::Usage(format!(
            "--count {} exceeds the {} indicators of {}",
            a.count,
            matrix.n_cols(),
            a.matrix.display()
        )));
    }
    if s.learn.is_empty() {
        return Err(CliError::Input(format!("{}: empty learning set", a.split.display())));
    }
    let learn = matrix.select_rows(&s.learn);
    info!("ranking {} of {} indicators", a.count, matrix.n_cols());
    let ranking = mrmr_rank(&learn, a.count);
    run.write(&a.output, |w| ranking.write_csv(w))?;
    run.finish(&manifest_path(&a.output))
}

fn top_ids(ranking: &RankingResult, top: Option<usize>) -> Result<Vec<String>, CliError> {
    let m = top.unwrap_or(ranking.len());
    if m == 0 || m > ranking.len() {
        return Err(CliError::Usage(format!(
            "--top {m} outside 1..={} ranked indicators",
            ranking.len()
        )));
    }
    Ok(ranking.top(m).to_vec())
}

fn cmd_train(a: &TrainArgs, args: &[String]) -> Result<(), CliError> {
    let mut run = Run::new("train", args);
    run.input(&a.matrix);
    run.input(&a.split);
    let kind = a.forest.kind(a.classifier);
    if let ClassifierKind::Forest(p) = &kind {
        run.seed("forest", p.seed);
    }
    let matrix = load_matrix(&a.matrix)?;
    let s = load_split(&a.split, matrix.n_rows())?;
    let ids = match &a.ranking {
        Some(p) => {
            run.input(p);
            Some(top_ids(&load_ranking(p)?, a.top)?)
        }
        None => None,
    };
    let (learn, _) = learn_test(&matrix, &s, ids.as_deref())?;
    info!("training {} on {} x {}", kind.name(), learn.n_rows(), learn.n_cols());
    let model = TrainedModel::train(&kind, &learn).map_err(|e| match e {
        ClassifyError::InvalidParameter(m) => CliError::Usage(m),
        other => CliError::from(other),
    })?;
    run.write_json(&a.output, &model)?;
    run.finish(&manifest_path(&a.output))
}

fn cmd_sweep(a: &SweepArgs, args: &[String]) -> Result<(), CliError> {
    let mut run = Run::new("sweep", args);
    run.input(&a.matrix);
    run.input(&a.split);
    run.input(&a.ranking);
    let kind = a.forest.kind(a.classifier);
    if let ClassifierKind::Forest(p) = &kind {
        run.seed("forest", p.seed);
    }
    let matrix = load_matrix(&a.matrix)?;
    let s = load_split(&a.split, matrix.n_rows())?;
    let ranking = load_ranking(&a.ranking)?;
    let (learn, test) = learn_test(&matrix, &s, None)?;
    info!("{} sweep over 1..={}", kind.name(), a.max);
    let sweep = forward_sweep(&learn, &test, &s.subsets, &ranking, a.max, &kind)?;
    run.write_json(&a.output, &sweep)?;
    if let Some(p) = &a.plot_csv {
        run.write(p, |w| write_plot_csv(w, &sweep))?;
    }
    if let Some(p) = &a.summary_csv {
        run.write(p, |w| write_sweep_summary_csv(w, &sweep))?;
    }
    run.finish(&manifest_path(&a.output))
}

fn cmd_report(a: &ReportArgs, args: &[String]) -> Result<(), CliError> {
    let mut run = Run::new("report", args);
    run.input(&a.model);
    let model = load_model(&a.model)?;
    if a.table5 {
        let TrainedModel::NaiveBayes(nb) = &model else {
            return Err(CliError::Usage(
                "--table5 needs a Naive Bayes model".to_string(),
            ));
        };
        if a.top == 0 || a.top > nb.indicator_ids.len() {
            return Err(CliError::Usage(format!(
                "--top {} outside 1..={} model indicators",
                a.top,
                nb.indicator_ids.len()
            )));
        }
        let rows = conditional_probability_report(nb, &nb.indicator_ids[..a.top])?;
        run.write(&a.output, |w| write_probability_csv(w, &rows))?;
        return run.finish(&manifest_path(&a.output));
    }
    let (Some(mpath), Some(spath)) = (&a.matrix, &a.split) else {
        return Err(CliError::Usage("--matrix and --split are required".into()));
    };
    run.input(mpath);
    run.input(spath);
    let matrix = load_matrix(mpath)?;
    let s = load_split(spath, matrix.n_rows())?;
    let ids = model.as_classifier().indicator_ids().to_vec();
    let (learn, test) = learn_test(&matrix, &s, Some(&ids))?;
    let report = evaluate(model.as_classifier(), &learn, &test, &s.subsets)?;
    run.write_json(&a.output, &report)?;
    run.finish(&manifest_path(&a.output))
}

fn cmd_reproduce(a: &ReproduceArgs, args: &[String]) -> Result<(), CliError> {
    std::fs::create_dir_all(&a.out_dir).map_err(|e| write_err(&a.out_dir, e))?;
    let mut run = Run::new("reproduce-paper", args);
    let mut summary = String::new();
    for &set in &a.sets {
        let variant: Variant = set.into();
        let seed = match set {
            VariantArg::A => a.seed_a,
            VariantArg::B => a.seed_b,
        };
        run.seed(&format!("set_{variant}"), seed);
        let mut cfg = ProtocolConfig::full(variant, seed);
        cfg.n_trees = a.trees;
        cfg.forest_counts = (1..=a.forest_max.min(cfg.sweep_max)).collect();
        let dir = a.out_dir.join(format!("set_{}", variant.to_string().to_lowercase()));
        std::fs::create_dir_all(&dir).map_err(|e| write_err(&dir, e))?;

        let signals = generate_dataset(&cfg.dataset());
        run.write(&dir.join("dataset.jsonl"), |w| sim::write_dataset(w, &signals))?;
        let matrix = featurize_logged(&signals, &default_grid(variant));
        drop(signals);
        run.write(&dir.join("matrix.csv"), |w| matrix.write_csv(w))?;

        let out = run_protocol_on(matrix, &cfg)?;
        run.write_json(&dir.join("split.json"), &out.split)?;
        run.write(&dir.join("ranking.csv"), |w| out.ranking.write_csv(w))?;
        run.write_json(&dir.join("rf_full.json"), &out.rf_full)?;
        run.write_json(&dir.join("nb_full.json"), &out.nb_full)?;
        run.write_json(&dir.join("nb_selected.json"), &out.nb_selected)?;
        run.write_json(&dir.join("nb_selected_model.json"), &out.nb_selected_model)?;
        for (name, sweep) in [("nb_sweep", &out.nb_sweep), ("rf_sweep", &out.rf_sweep)] {
            run.write_json(&dir.join(format!("{name}.json")), sweep)?;
            run.write(&dir.join(format!("{name}_plot.csv")), |w| write_plot_csv(w, sweep))?;
            run.write(&dir.join(format!("{name}_summary.csv")), |w| {
                write_sweep_summary_csv(w, sweep)
            })?;
        }
        run.write(&dir.join("table5.csv"), |w| write_probability_csv(w, &out.table))?;
        let text = out.summary();
        print!("{text}");
        summary.push_str(&text);
        summary.push('\n');
    }
    run.write(&a.out_dir.join("summary.txt"), |w| w.write_all(summary.as_bytes()))?;
    run.finish(&a.out_dir.join("manifest.json"))
}

fn init_logging(quiet: bool) {
    let default = if quiet { "warn" } else { "info" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default))
        .format_timestamp(None)
        .try_init();
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    init_logging(cli.quiet);
    if let Some(jobs) = cli.jobs {
        if jobs == 0 {
            eprintln!("error: --jobs must be at least 1");
            return EXIT_USAGE;
        }
        // A global pool may already exist when run() is called twice in
        // one process; the existing pool is then kept.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    let args: Vec<String> = argv
        .iter()
        .skip(1)
        .map(|a| a.to_string_lossy().into_owned())
        .collect();
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, &args),
        Command::Featurize(a) => cmd_featurize(a, &args),
        Command::Split(a) => cmd_split(a, &args),
        Command::Rank(a) => cmd_rank(a, &args),
        Command::Train(a) => cmd_train(a, &args),
        Command::Sweep(a) => cmd_sweep(a, &args),
        Command::Report(a) => cmd_report(a, &args),
        Command::ReproducePaper(a) => cmd_reproduce(a, &args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
