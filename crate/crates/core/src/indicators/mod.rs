//! Binary indicators built from sliding-window tests.
//!
//! An [`IndicatorSpec`] fixes a test, a window length, a level, an overlap
//! between consecutive windows, a confirmation rule and whether the
//! signal is smoothed first. Evaluating a grid of specs on a signal gives
//! one bit per spec; evaluating it on a dataset gives an
//! [`IndicatorMatrix`].

mod confirm;
mod matrix;
mod window;

use std::collections::HashMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::io::{self, FormatError};
use crate::sim::{Signal, Variant};
use crate::stats::{StatsError, TestKind};

pub use confirm::{confirm, longest_run, max_in_span, rate_threshold, ConfirmationFamily};
pub use matrix::IndicatorMatrix;
pub use window::{
    scan, scan_results, scan_values, smooth, smooth_values, Overlap, WindowScheme, WindowSize,
    ADAPTIVE_CAP, SMOOTHING_SPAN,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndicatorError {
    #[error("series of length {len} is too short, {needed} observations needed")]
    TooShort { len: usize, needed: usize },
    #[error("no window position of length {window} fits a series of length {len}")]
    NoWindowPositions { len: usize, window: usize },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndicatorSpec {
    pub test: TestKind,
    pub window: WindowSize,
    pub level: f64,
    pub family: ConfirmationFamily,
    pub overlap: Overlap,
    pub smoothed: bool,
}

impl IndicatorSpec {
    /// Stable identifier, e.g. `u/w30/p0.1/k2of3/ovfull/raw`.
    ///
    /// Contains no commas so it can be used directly as a CSV header.
    pub fn id(&self) -> String {
        format!(
            "{}/w{}/p{}/{}/ov{}/{}",
            self.test.tag(),
            self.window.tag(),
            self.level,
            self.family.tag(),
            self.overlap.tag(),
            if self.smoothed { "smooth" } else { "raw" }
        )
    }

    /// Compact name in the style `confu(2,3)`, `ratef(0.1)`, `lsequ(0.3)`.
    pub fn short_label(&self) -> String {
        let t = self.test.tag();
        match self.family {
            ConfirmationFamily::Rate { beta } => format!("rate{t}({beta})"),
            ConfirmationFamily::LongestRun { beta } => format!("lseq{t}({beta})"),
            ConfirmationFamily::KofN { k, n } => format!("conf{t}({k},{n})"),
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(format!("level {} outside (0, 1)", self.level));
        }
        if let WindowSize::Fixed(w) = self.window {
            if w < 4 {
                return Err(format!("window {w} leaves fewer than 2 points per sample"));
            }
        }
        self.family.validate()
    }

    fn cache_key(&self, n: usize) -> (TestKind, usize, bool) {
        (self.test, self.window.resolve(n), self.smoothed)
    }
}

impl fmt::Display for IndicatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.id())
    }
}

impl FromStr for IndicatorSpec {
    type Err = String;

    fn from_str(id: &str) -> Result<Self, Self::Err> {
        let bad = || format!("malformed indicator id `{id}`");
        let parts: Vec<&str> = id.split('/').collect();
        let [test, window, level, family, overlap, prep] = parts[..] else {
            return Err(bad());
        };
        let test = TestKind::ALL
            .into_iter()
            .find(|t| t.tag() == test)
            .ok_or_else(bad)?;
        let window = match window.strip_prefix('w').ok_or_else(bad)? {
            "adapt" => WindowSize::Adaptive,
            w => WindowSize::Fixed(w.parse().map_err(|_| bad())?),
        };
        let level: f64 = level
            .strip_prefix('p')
            .ok_or_else(bad)?
            .parse()
            .map_err(|_| bad())?;
        let family = if let Some(b) = family.strip_prefix("rate") {
            ConfirmationFamily::Rate {
                beta: b.parse().map_err(|_| bad())?,
            }
        } else if let Some(b) = family.strip_prefix("run") {
            ConfirmationFamily::LongestRun {
                beta: b.parse().map_err(|_| bad())?,
            }
        } else if let Some(kn) = family.strip_prefix('k') {
            let (k, n) = kn.split_once("of").ok_or_else(bad)?;
            ConfirmationFamily::KofN {
                k: k.parse().map_err(|_| bad())?,
                n: n.parse().map_err(|_| bad())?,
            }
        } else {
            return Err(bad());
        };
        let overlap = match overlap.strip_prefix("ov").ok_or_else(bad)? {
            "full" => Overlap::Full,
            k => Overlap::Shared(k.parse().map_err(|_| bad())?),
        };
        let smoothed = match prep {
            "raw" => false,
            "smooth" => true,
            _ => return Err(bad()),
        };
        let spec = IndicatorSpec {
            test,
            window,
            level,
            family,
            overlap,
            smoothed,
        };
        spec.validate()?;
        Ok(spec)
    }
}

/// Ordered list of indicator specs; the order defines matrix columns.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorGrid {
    specs: Vec<IndicatorSpec>,
    ids: Vec<String>,
}

impl IndicatorGrid {
    pub fn new(specs: Vec<IndicatorSpec>) -> Result<Self, String> {
        let mut seen = HashMap::new();
        let mut ids = Vec::with_capacity(specs.len());
        for (i, spec) in specs.iter().enumerate() {
            spec.validate().map_err(|e| format!("spec {i}: {e}"))?;
            let id = spec.id();
            if let Some(j) = seen.insert(id.clone(), i) {
                return Err(format!("specs {j} and {i} share id `{id}`"));
            }
            ids.push(id);
        }
        Ok(Self { specs, ids })
    }

    pub fn specs(&self) -> &[IndicatorSpec] {
        &self.specs
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.specs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.specs.is_empty()
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        let text = io::read_to_string(path)?;
        let file: GridFile = serde_json::from_str(&text)
            .map_err(|e| FormatError::at_line(e.line(), e.to_string()).in_file(path))?;
        file.into_grid()
            .map_err(|e| FormatError::new(e).in_file(path))
    }

    pub fn to_file(&self) -> GridFile {
        GridFile::Specs(self.specs.clone())
    }
}

/// Parameter ranges expanded into a grid.
///
/// Expansion order (outermost first): smoothing, test, window, level,
/// then per base configuration the rate variants (beta, then overlap),
/// longest-run variants (beta, then overlap) and k-of-n variants
/// ((k, n), then overlap).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridGenerator {
    pub smoothing: Vec<bool>,
    pub tests: Vec<TestKind>,
    pub windows: Vec<WindowSize>,
    pub levels: Vec<f64>,
    pub rate_betas: Vec<f64>,
    pub rate_overlaps: Vec<Overlap>,
    pub run_betas: Vec<f64>,
    pub run_overlaps: Vec<Overlap>,
    pub k_of_n: Vec<(usize, usize)>,
    pub k_of_n_overlaps: Vec<Overlap>,
}

impl Default for GridGenerator {
    fn default() -> Self {
        Self {
            smoothing: vec![false, true],
            tests: TestKind::ALL.to_vec(),
            windows: vec![WindowSize::Fixed(30), WindowSize::Fixed(50), WindowSize::Adaptive],
            levels: vec![0.005, 0.1, 0.5],
            rate_betas: vec![0.1, 0.3, 0.5],
            rate_overlaps: vec![Overlap::Full, Overlap::Shared(5), Overlap::Shared(10)],
            run_betas: vec![0.1, 0.3, 0.5],
            run_overlaps: vec![Overlap::Full],
            k_of_n: vec![(2, 3), (3, 5), (4, 5)],
            k_of_n_overlaps: vec![Overlap::Full],
        }
    }
}

impl GridGenerator {
    pub fn build(&self) -> Result<IndicatorGrid, String> {
        let mut specs = Vec::new();
        for &smoothed in &self.smoothing {
            for &test in &self.tests {
                for &window in &self.windows {
                    for &level in &self.levels {
                        let mut push = |family, overlap| {
                            specs.push(IndicatorSpec {
                                test,
                                window,
                                level,
                                family,
                                overlap,
                                smoothed,
                            })
                        };
                        for &beta in &self.rate_betas {
                            for &ov in &self.rate_overlaps {
                                push(ConfirmationFamily::Rate { beta }, ov);
                            }
                        }
                        for &beta in &self.run_betas {
                            for &ov in &self.run_overlaps {
                                push(ConfirmationFamily::LongestRun { beta }, ov);
                            }
                        }
                        for &(k, n) in &self.k_of_n {
                            for &ov in &self.k_of_n_overlaps {
                                push(ConfirmationFamily::KofN { k, n }, ov);
                            }
                        }
                    }
                }
            }
        }
        IndicatorGrid::new(specs)
    }
}

/// Grid config file: either `{"specs": [...]}` or `{"generator": {...}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridFile {
    Specs(Vec<IndicatorSpec>),
    Generator(Box<GridGenerator>),
}

impl GridFile {
    pub fn into_grid(self) -> Result<IndicatorGrid, String> {
        match self {
            GridFile::Specs(specs) => IndicatorGrid::new(specs),
            GridFile::Generator(g) => g.build(),
        }
    }
}

/// The 810-indicator grid: 3 tests x 3 windows x 3 levels, 15 confirmation
/// variants each, on raw and smoothed signals. Both datasets use the same
/// grid.
pub fn default_grid(_variant: Variant) -> IndicatorGrid {
    GridGenerator::default()
        .build()
        .expect("default grid is valid")
}

/// Evaluates one spec directly, without sharing work with other specs.
pub fn evaluate_spec(signal: &Signal, spec: &IndicatorSpec) -> Result<bool, IndicatorError> {
    let values = if spec.smoothed {
        smooth_values(&signal.values)?
    } else {
        signal.values.clone()
    };
    let scheme = WindowScheme::resolve(spec.window, spec.overlap, values.len());
    let flags = scan_values(&values, spec.test, &scheme, spec.level)?;
    Ok(confirm(&flags, &spec.family))
}

/// Reference evaluation: every spec scanned independently.
pub fn evaluate_grid_uncached(signal: &Signal, grid: &IndicatorGrid) -> Vec<u8> {
    grid.specs()
        .iter()
        .map(|spec| match evaluate_spec(signal, spec) {
            Ok(bit) => bit as u8,
            Err(e) => {
                log::warn!("signal {}: {}: {e}; bit set to 0", signal.id, spec.id());
                0
            }
        })
        .collect()
}

/// One bit per spec, in grid order.
///
/// P-values are computed once per (test, window, smoothing) at every
/// position; coarser steps, other levels and other confirmation rules
/// reuse them. A spec that cannot be evaluated (series too short) yields
/// 0 and a warning.
pub fn evaluate_grid(signal: &Signal, grid: &IndicatorGrid) -> Vec<u8> {
    let raw = &signal.values;
    let smoothed = if grid.specs().iter().any(|s| s.smoothed) {
        Some(smooth_values(raw))
    } else {
        None
    };

    type Key = (TestKind, usize, bool);
    let mut cache: HashMap<Key, Result<Vec<f64>, IndicatorError>> = HashMap::new();

    grid.specs()
        .iter()
        .map(|spec| {
            let values: &[f64] = if spec.smoothed {
                match smoothed.as_ref().expect("smoothed series prepared") {
                    Ok(v) => v,
                    Err(e) => {
                        log::warn!("signal {}: {}: {e}; bit set to 0", signal.id, spec.id());
                        return 0;
                    }
                }
            } else {
                raw
            };
            let key = spec.cache_key(values.len());
            let p_values = cache.entry(key).or_insert_with(|| {
                let dense = WindowScheme::new(key.1, 1);
                scan_results(values, spec.test, &dense)
                    .map(|rs| rs.iter().map(|r| r.p_value).collect())
            });
            match p_values {
                Ok(p) => {
                    let step = spec.overlap.step(key.1);
                    let flags: Vec<bool> =
                        p.iter().step_by(step).map(|&pv| pv < spec.level).collect();
                    confirm(&flags, &spec.family) as u8
                }
                Err(e) => {
                    log::warn!("signal {}: {}: {e}; bit set to 0", signal.id, spec.id());
                    0
                }
            }
        })
        .collect()
}

/// Evaluates `grid` on every signal (in parallel) and collects the matrix.
pub fn featurize(signals: &[Signal], grid: &IndicatorGrid) -> IndicatorMatrix {
    let rows: Vec<Vec<u8>> = signals
        .par_iter()
        .map(|s| evaluate_grid(s, grid))
        .collect();
    let mut bits = Vec::with_capacity(signals.len() * grid.len());
    for row in rows {
        bits.extend(row);
    }
    IndicatorMatrix::new(
        signals.iter().map(|s| s.id).collect(),
        signals.iter().map(|s| s.label).collect(),
        grid.ids().to_vec(),
        bits,
    )
    .expect("featurized matrix is consistent")
}
