use serde::{Deserialize, Serialize};

use super::IndicatorError;
use crate::sim::Signal;
use crate::stats::{reject, TestKind, TestResult};

pub const SMOOTHING_SPAN: usize = 5;
pub const ADAPTIVE_CAP: usize = 100;

/// Total window length (both samples together).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowSize {
    Fixed(usize),
    /// `min(n - 2, 100)` for a series of length `n`.
    Adaptive,
}

impl WindowSize {
    /// Window length for a series of length `n`, rounded down to even.
    pub fn resolve(self, n: usize) -> usize {
        let w = match self {
            WindowSize::Fixed(w) => w,
            WindowSize::Adaptive => n.saturating_sub(2).min(ADAPTIVE_CAP),
        };
        w & !1
    }

    pub fn tag(self) -> String {
        match self {
            WindowSize::Fixed(w) => w.to_string(),
            WindowSize::Adaptive => "adapt".to_string(),
        }
    }
}

/// Observations shared by two consecutive windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Overlap {
    /// `W - 1`: the window slides one observation at a time.
    Full,
    Shared(usize),
}

impl Overlap {
    pub fn step(self, window: usize) -> usize {
        match self {
            Overlap::Full => 1,
            Overlap::Shared(k) => window.saturating_sub(k).max(1),
        }
    }

    pub fn tag(self) -> String {
        match self {
            Overlap::Full => "full".to_string(),
            Overlap::Shared(k) => k.to_string(),
        }
    }
}

/// A resolved sliding window: `total_window` points split into two halves,
/// moved by `step` between consecutive positions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WindowScheme {
    pub total_window: usize,
    pub step: usize,
}

impl WindowScheme {
    pub fn new(total_window: usize, step: usize) -> Self {
        assert!(step >= 1, "window step must be positive");
        Self {
            total_window: total_window & !1,
            step,
        }
    }

    pub fn resolve(window: WindowSize, overlap: Overlap, n: usize) -> Self {
        let w = window.resolve(n);
        Self::new(w, overlap.step(w))
    }

    pub fn half(&self) -> usize {
        self.total_window / 2
    }

    /// Candidate change points `t` (1-based, last point of the first
    /// sample) with `W/2 <= t <= n - W/2`, in increasing order.
    pub fn positions(&self, n: usize) -> impl Iterator<Item = usize> {
        let half = self.half();
        let valid = half >= 2 && n >= self.total_window;
        let last = if valid { n - half } else { 0 };
        let first = if valid { half } else { 1 };
        (first..=last).step_by(self.step)
    }

    pub fn position_count(&self, n: usize) -> usize {
        let half = self.half();
        if half < 2 || n < self.total_window {
            0
        } else {
            (n - self.total_window) / self.step + 1
        }
    }

    /// Before and after samples around position `t`.
    pub fn samples<'a>(&self, values: &'a [f64], t: usize) -> (&'a [f64], &'a [f64]) {
        let half = self.half();
        (&values[t - half..t], &values[t..t + half])
    }
}

/// Centered moving average over 5 observations.
///
/// Output element `j` is the mean of inputs `j..j+5`, so the series loses
/// two points at each end and the change point moves back by 2.
pub fn smooth(signal: &Signal) -> Result<Signal, IndicatorError> {
    let values = smooth_values(&signal.values)?;
    Ok(Signal {
        values,
        change_point: signal.change_point.map(|k| k.saturating_sub(SMOOTHING_SPAN / 2)),
        ..signal.clone()
    })
}

pub fn smooth_values(values: &[f64]) -> Result<Vec<f64>, IndicatorError> {
    if values.len() < SMOOTHING_SPAN {
        return Err(IndicatorError::TooShort {
            len: values.len(),
            needed: SMOOTHING_SPAN,
        });
    }
    Ok(values
        .windows(SMOOTHING_SPAN)
        .map(|w| w.iter().sum::<f64>() / SMOOTHING_SPAN as f64)
        .collect())
}

/// Test results at every position of `scheme`, in position order.
pub fn scan_results(
    values: &[f64],
    test: TestKind,
    scheme: &WindowScheme,
) -> Result<Vec<TestResult>, IndicatorError> {
    if scheme.position_count(values.len()) == 0 {
        return Err(IndicatorError::NoWindowPositions {
            len: values.len(),
            window: scheme.total_window,
        });
    }
    scheme
        .positions(values.len())
        .map(|t| {
            let (before, after) = scheme.samples(values, t);
            test.run(before, after).map_err(IndicatorError::from)
        })
        .collect()
}

pub fn scan_values(
    values: &[f64],
    test: TestKind,
    scheme: &WindowScheme,
    level: f64,
) -> Result<Vec<bool>, IndicatorError> {
    Ok(scan_results(values, test, scheme)?
        .iter()
        .map(|r| reject(r, level))
        .collect())
}

/// One rejection flag per window position of `scheme` on `signal`.
pub fn scan(
    signal: &Signal,
    test: TestKind,
    scheme: &WindowScheme,
    level: f64,
) -> Result<Vec<bool>, IndicatorError> {
    scan_values(&signal.values, test, scheme, level)
}
