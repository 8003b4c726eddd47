//! Simulated change-point signals.
//!
//! A signal is `n ~ U{100..=200}` observations of standard Gaussian noise.
//! Anomalous signals switch regime after a change point
//! `k ~ U{ceil(2n/10)..=floor(8n/10)}` (1-based, last pre-change sample):
//!
//! | class           | after the change point                          |
//! |-----------------|-------------------------------------------------|
//! | `VarianceShift` | `N(0, sigma^2)`, `sigma ~ U[1.01, 5]`           |
//! | `MeanShift`     | `N(mu, 1)`, `mu ~ U[1.01, 5]` (A), `U[0.505, 2.5]` (B) |
//! | `TrendShift`    | `N(slope * (t - k), 1)`, `slope ~ U[0.02, 3]`   |
//!
//! Signal `i` of a dataset draws from its own stream derived from
//! `(seed, i)`; see [`crate::rng`].

use std::fmt;
use std::io::{BufRead, Write};
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::io::{self, FormatError};
use crate::rng::{self, Rng};

pub const MIN_LENGTH: usize = 100;
pub const MAX_LENGTH: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "u8", try_from = "u8")]
#[repr(u8)]
pub enum ClassLabel {
    None = 0,
    VarianceShift = 1,
    MeanShift = 2,
    TrendShift = 3,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 4] = [
        ClassLabel::None,
        ClassLabel::VarianceShift,
        ClassLabel::MeanShift,
        ClassLabel::TrendShift,
    ];
    pub const COUNT: usize = 4;

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(code as usize).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::None => "none",
            ClassLabel::VarianceShift => "variance",
            ClassLabel::MeanShift => "mean",
            ClassLabel::TrendShift => "trend",
        }
    }
}

impl From<ClassLabel> for u8 {
    fn from(label: ClassLabel) -> u8 {
        label.code()
    }
}

impl TryFrom<u8> for ClassLabel {
    type Error = String;

    fn try_from(code: u8) -> Result<Self, Self::Error> {
        ClassLabel::from_code(code).ok_or_else(|| format!("unknown class code {code}"))
    }
}

impl fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Variant {
    A,
    B,
}

impl Variant {
    /// Range of the post-change mean for `MeanShift` signals.
    pub fn mean_shift_range(self) -> (f64, f64) {
        match self {
            Variant::A => (1.01, 5.0),
            Variant::B => (0.505, 2.5),
        }
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "A" | "a" => Ok(Variant::A),
            "B" | "b" => Ok(Variant::B),
            other => Err(format!("unknown variant `{other}`, expected A or B")),
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::A => "A",
            Variant::B => "B",
        })
    }
}

pub const VARIANCE_SHIFT_SIGMA: (f64, f64) = (1.01, 5.0);
pub const TREND_SLOPE: (f64, f64) = (0.02, 3.0);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Signal {
    pub id: u64,
    pub label: ClassLabel,
    /// 1-based index of the last pre-change observation.
    pub change_point: Option<usize>,
    /// `sigma`, `mu` or `slope` depending on the label.
    pub shift_param: Option<f64>,
    pub values: Vec<f64>,
}

impl Signal {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Checks the structural invariants of a simulated signal.
    pub fn validate(&self) -> Result<(), String> {
        if let Some(i) = self.values.iter().position(|v| !v.is_finite()) {
            return Err(format!("value {i} is not finite"));
        }
        match (self.label, self.change_point, self.shift_param) {
            (ClassLabel::None, None, None) => Ok(()),
            (ClassLabel::None, _, _) => {
                Err("normal signal carries change-point metadata".to_string())
            }
            (_, Some(k), Some(_)) => {
                let (lo, hi) = change_point_bounds(self.len());
                if k < lo || k > hi {
                    Err(format!("change point {k} outside [{lo}, {hi}]"))
                } else {
                    Ok(())
                }
            }
            _ => Err("anomalous signal without change point or shift parameter".to_string()),
        }
    }
}

/// Inclusive bounds `[ceil(2n/10), floor(8n/10)]` of the change point.
pub fn change_point_bounds(n: usize) -> (usize, usize) {
    ((2 * n).div_ceil(10), (8 * n) / 10)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub variant: Variant,
    pub n_normal: usize,
    pub n_per_anomaly: usize,
    pub seed: u64,
}

impl DatasetConfig {
    pub fn new(variant: Variant, n_normal: usize, n_per_anomaly: usize, seed: u64) -> Self {
        Self {
            variant,
            n_normal,
            n_per_anomaly,
            seed,
        }
    }

    /// 3000 normal signals and 1000 of each anomaly.
    pub fn full(variant: Variant, seed: u64) -> Self {
        Self::new(variant, 3000, 1000, seed)
    }

    pub fn total(&self) -> usize {
        self.n_normal + 3 * self.n_per_anomaly
    }

    /// Label of the `i`-th signal: normals first, then classes 1, 2, 3.
    pub fn label_of(&self, i: usize) -> ClassLabel {
        if i < self.n_normal {
            ClassLabel::None
        } else {
            let j = (i - self.n_normal) / self.n_per_anomaly.max(1);
            ClassLabel::ALL[1 + j.min(2)]
        }
    }
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn generate_signal(rng: &mut Rng, variant: Variant, label: ClassLabel, id: u64) -> Signal {
    let n = rng.random_range(MIN_LENGTH..=MAX_LENGTH);
    if label == ClassLabel::None {
        let values = (0..n).map(|_| normal(rng)).collect();
        return Signal {
            id,
            label,
            change_point: None,
            shift_param: None,
            values,
        };
    }

    let param = match label {
        ClassLabel::VarianceShift => rng.random_range(VARIANCE_SHIFT_SIGMA.0..=VARIANCE_SHIFT_SIGMA.1),
        ClassLabel::MeanShift => {
            let (lo, hi) = variant.mean_shift_range();
            rng.random_range(lo..=hi)
        }
        ClassLabel::TrendShift => rng.random_range(TREND_SLOPE.0..=TREND_SLOPE.1),
        ClassLabel::None => unreachable!(),
    };
    let (lo, hi) = change_point_bounds(n);
    let k = rng.random_range(lo..=hi);

    let values = (1..=n)
        .map(|t| {
            let z = normal(rng);
            if t <= k {
                z
            } else {
                match label {
                    ClassLabel::VarianceShift => param * z,
                    ClassLabel::MeanShift => param + z,
                    ClassLabel::TrendShift => param * (t - k) as f64 + z,
                    ClassLabel::None => unreachable!(),
                }
            }
        })
        .collect();

    Signal {
        id,
        label,
        change_point: Some(k),
        shift_param: Some(param),
        values,
    }
}

/// Generates the whole dataset; signal `i` has id `i`.
pub fn generate_dataset(config: &DatasetConfig) -> Vec<Signal> {
    (0..config.total())
        .into_par_iter()
        .map(|i| {
            let mut rng = rng::tagged_stream(config.seed, rng::domain::SIGNAL, i as u64);
            generate_signal(&mut rng, config.variant, config.label_of(i), i as u64)
        })
        .collect()
}

/// Writes one JSON object per line:
/// `{"id":..,"label":0..3,"change_point":k|null,"shift_param":x|null,"values":[..]}`.
///
/// Floats use the shortest representation that parses back to the same
/// `f64`, so the file round-trips bit-exactly.
pub fn write_dataset<W: Write>(mut out: W, signals: &[Signal]) -> std::io::Result<()> {
    for signal in signals {
        serde_json::to_writer(&mut out, signal)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn read_dataset<R: BufRead>(input: R) -> Result<Vec<Signal>, FormatError> {
    let mut signals = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| FormatError::at_line(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let signal: Signal = serde_json::from_str(&line)
            .map_err(|e| FormatError::at_line(lineno, e.to_string()))?;
        signal
            .validate()
            .map_err(|e| FormatError::at_line(lineno, e))?;
        signals.push(signal);
    }
    Ok(signals)
}

pub fn load_dataset(path: &Path) -> Result<Vec<Signal>, FormatError> {
    let reader = io::open_buffered(path)?;
    read_dataset(reader).map_err(|e| e.in_file(path))
}

pub fn class_histogram<'a, I: IntoIterator<Item = &'a ClassLabel>>(labels: I) -> [usize; 4] {
    let mut counts = [0; 4];
    for label in labels {
        counts[label.index()] += 1;
    }
    counts
}
