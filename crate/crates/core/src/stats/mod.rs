//! Two-sample change detectors.
//!
//! All three tests return asymptotic two-sided p-values:
//!
//! * Mann-Whitney U: normal approximation with continuity correction and
//!   tie-corrected variance, midranks for ties.
//! * Kolmogorov-Smirnov: `Q((sqrt(ne) + 0.12 + 0.11/sqrt(ne)) * D)`.
//! * F variance ratio: `2 * min(P(F <= f), P(F >= f))` from the
//!   regularized incomplete beta function.

pub mod special;

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    MannWhitneyU,
    KolmogorovSmirnov2,
    FVarianceRatio,
}

impl TestKind {
    pub const ALL: [TestKind; 3] = [
        TestKind::MannWhitneyU,
        TestKind::KolmogorovSmirnov2,
        TestKind::FVarianceRatio,
    ];

    pub fn run(self, x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
        match self {
            TestKind::MannWhitneyU => mann_whitney_u(x, y),
            TestKind::KolmogorovSmirnov2 => ks_two_sample(x, y),
            TestKind::FVarianceRatio => f_variance_test(x, y),
        }
    }

    /// Short tag used in indicator ids.
    pub fn tag(self) -> &'static str {
        match self {
            TestKind::MannWhitneyU => "u",
            TestKind::KolmogorovSmirnov2 => "ks",
            TestKind::FVarianceRatio => "f",
        }
    }
}

impl fmt::Display for TestKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TestKind::MannWhitneyU => "U test",
            TestKind::KolmogorovSmirnov2 => "KS test",
            TestKind::FVarianceRatio => "F test",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Set when a degenerate-input convention decided the p-value
    /// (all values tied, or a zero variance).
    pub degenerate: bool,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64) -> Self {
        Self {
            statistic,
            p_value: p_value.clamp(0.0, 1.0),
            degenerate: false,
        }
    }

    fn degenerate(statistic: f64, p_value: f64) -> Self {
        Self {
            degenerate: true,
            ..Self::new(statistic, p_value)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("sample {sample} has {len} observations, at least 2 are required")]
    TooFewObservations { sample: char, len: usize },
    #[error("sample {sample} contains a non-finite value")]
    NonFinite { sample: char },
}

fn check(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    for (sample, s) in [('x', x), ('y', y)] {
        if s.len() < 2 {
            return Err(StatsError::TooFewObservations {
                sample,
                len: s.len(),
            });
        }
        if s.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite { sample });
        }
    }
    Ok(())
}

fn cmp_f64(a: &f64, b: &f64) -> Ordering {
    a.partial_cmp(b).expect("finite values")
}

/// Mann-Whitney U for a location shift between `x` and `y`.
///
/// The statistic is `U_x = R_x - n1 (n1 + 1) / 2`.
pub fn mann_whitney_u(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    check(x, y)?;
    let n1 = x.len();
    let n2 = y.len();
    let n = n1 + n2;

    let mut pooled: Vec<(f64, bool)> = x
        .iter()
        .map(|&v| (v, true))
        .chain(y.iter().map(|&v| (v, false)))
        .collect();
    pooled.sort_unstable_by(|a, b| cmp_f64(&a.0, &b.0));

    let mut rank_sum_x = 0.0;
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i + 1;
        while j < n && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // positions i..j (0-based) share the midrank of ranks i+1..=j
        let midrank = (i + 1 + j) as f64 / 2.0;
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        rank_sum_x += midrank * pooled[i..j].iter().filter(|p| p.1).count() as f64;
        i = j;
    }

    let (n1f, n2f, nf) = (n1 as f64, n2 as f64, n as f64);
    let u = rank_sum_x - n1f * (n1f + 1.0) / 2.0;
    let mean = n1f * n2f / 2.0;
    let variance = n1f * n2f / 12.0 * ((nf + 1.0) - tie_term / (nf * (nf - 1.0)));
    if variance <= 0.0 {
        return Ok(TestResult::degenerate(u, 1.0));
    }
    let z = ((u - mean).abs() - 0.5).max(0.0) / variance.sqrt();
    Ok(TestResult::new(u, 2.0 * special::normal_sf(z)))
}

/// Largest gap between the two right-continuous empirical CDFs.
pub fn ks_statistic(x: &[f64], y: &[f64]) -> f64 {
    let mut xs = x.to_vec();
    let mut ys = y.to_vec();
    xs.sort_unstable_by(cmp_f64);
    ys.sort_unstable_by(cmp_f64);
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0, 0);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] == t {
            i += 1;
        }
        while j < ys.len() && ys[j] == t {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    d
}

pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    check(x, y)?;
    let d = ks_statistic(x, y);
    let (n1, n2) = (x.len() as f64, y.len() as f64);
    let ne = n1 * n2 / (n1 + n2);
    let lambda = (ne.sqrt() + 0.12 + 0.11 / ne.sqrt()) * d;
    Ok(TestResult::new(d, special::kolmogorov_q(lambda)))
}

fn sample_variance(s: &[f64]) -> f64 {
    let n = s.len() as f64;
    let mean = s.iter().sum::<f64>() / n;
    s.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
}

/// F test for equal variances, `f = s_x^2 / s_y^2` with `(n1 - 1, n2 - 1)` df.
///
/// Zero variances follow a fixed convention: both zero gives `p = 1` and
/// `f = 1`; only `s_y^2` zero gives `p = 0` and `f = f64::MAX`; only
/// `s_x^2` zero gives `p = 0` and `f = 0`.
pub fn f_variance_test(x: &[f64], y: &[f64]) -> Result<TestResult, StatsError> {
    check(x, y)?;
    let vx = sample_variance(x);
    let vy = sample_variance(y);
    match (vx == 0.0, vy == 0.0) {
        (true, true) => return Ok(TestResult::degenerate(1.0, 1.0)),
        (false, true) => return Ok(TestResult::degenerate(f64::MAX, 0.0)),
        (true, false) => return Ok(TestResult::degenerate(0.0, 0.0)),
        (false, false) => {}
    }
    let f = vx / vy;
    let d1 = (x.len() - 1) as f64;
    let d2 = (y.len() - 1) as f64;
    let lower = special::f_cdf(f, d1, d2);
    let upper = special::f_sf(f, d1, d2);
    Ok(TestResult::new(f, 2.0 * lower.min(upper)))
}

/// `true` iff `p < level` (strict).
pub fn reject(result: &TestResult, level: f64) -> bool {
    debug_assert!(level > 0.0 && level < 1.0);
    result.p_value < level
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn p(p_value: f64) -> TestResult {
        TestResult::new(0.0, p_value)
    }

    #[test]
    fn reject_is_strict() {
        assert!(reject(&p(0.04), 0.05));
        assert!(!reject(&p(0.05), 0.05));
        assert!(reject(&p(0.3), 0.5));
    }

    #[test]
    fn identical_samples_do_not_reject() {
        let x = [0.3, -1.2, 2.2, 0.9, -0.4, 1.7, 0.05];
        let u = mann_whitney_u(&x, &x).unwrap();
        assert!(u.p_value >= 0.99);
        let ks = ks_two_sample(&x, &x).unwrap();
        assert_eq!(ks.statistic, 0.0);
        assert_eq!(ks.p_value, 1.0);
        let f = f_variance_test(&x, &x).unwrap();
        assert_eq!(f.statistic, 1.0);
        assert_abs_diff_eq!(f.p_value, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn u_test_separated_samples() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [6.0, 7.0, 8.0, 9.0, 10.0];
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.statistic, 0.0);
        // exact two-sided p from enumeration is 2/252
        assert!((r.p_value - 2.0 / 252.0).abs() < 0.02);
    }

    #[test]
    fn u_test_midranks_on_ties() {
        let x = [1.0, 2.0, 2.0];
        let y = [2.0, 3.0];
        // pooled ranks: 1 -> 1, three 2s -> 3, 3 -> 5; R_x = 1 + 3 + 3
        let r = mann_whitney_u(&x, &y).unwrap();
        assert_eq!(r.statistic, 7.0 - 6.0);
    }

    #[test]
    fn u_test_all_tied_is_degenerate() {
        let r = mann_whitney_u(&[2.0; 4], &[2.0; 5]).unwrap();
        assert!(r.degenerate);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ks_disjoint_supports() {
        let r = ks_two_sample(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn ks_ties_step_together() {
        // ECDFs jump at 1 to (2/3, 1/2); at 2 to (1, 1/2); at 3 to (1, 1).
        let d = ks_statistic(&[1.0, 1.0, 2.0], &[1.0, 3.0]);
        assert_abs_diff_eq!(d, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn f_test_zero_variance_conventions() {
        let c = [1.0; 5];
        let v = [0.0, 1.0, 2.0, 3.0];
        let both = f_variance_test(&c, &c).unwrap();
        assert!(both.degenerate && both.p_value == 1.0);
        let one = f_variance_test(&v, &c).unwrap();
        assert!(one.degenerate && one.p_value == 0.0 && one.statistic.is_finite());
        let other = f_variance_test(&c, &v).unwrap();
        assert!(other.degenerate && other.p_value == 0.0);
    }

    #[test]
    fn f_test_known_value() {
        // var(x) = 2.5, var(y) = 10 => f = 0.25 with df (4, 4);
        // P(F(4,4) <= 1/4) = 3 t^2 - 2 t^3 with t = 1/5 -> 0.104.
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let y = [2.0, 4.0, 6.0, 8.0, 10.0];
        let r = f_variance_test(&x, &y).unwrap();
        assert_abs_diff_eq!(r.statistic, 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(r.p_value, 2.0 * 0.104, epsilon = 1e-12);
    }

    #[test]
    fn preconditions_are_enforced() {
        assert!(matches!(
            mann_whitney_u(&[1.0], &[1.0, 2.0]),
            Err(StatsError::TooFewObservations { sample: 'x', len: 1 })
        ));
        assert!(matches!(
            ks_two_sample(&[1.0, 2.0], &[1.0, f64::NAN]),
            Err(StatsError::NonFinite { sample: 'y' })
        ));
    }

    #[test]
    fn u_p_value_shrinks_with_shift() {
        let x: Vec<f64> = (0..15).map(|i| ((i * 37) % 15) as f64 * 0.21 - 1.4).collect();
        let base: Vec<f64> = (0..15).map(|i| ((i * 11) % 15) as f64 * 0.19 - 1.3).collect();
        let mut last = 1.0;
        for step in 0..12 {
            let y: Vec<f64> = base.iter().map(|v| v + 0.25 * step as f64).collect();
            let p = mann_whitney_u(&x, &y).unwrap().p_value;
            assert!(p <= last + 1e-12, "shift {step}: {p} > {last}");
            last = p;
        }
    }

    #[test]
    fn swapping_samples_keeps_p_values() {
        let x = [0.2, 1.9, -0.7, 0.4, 3.1, -1.5, 0.8];
        let y = [2.2, 0.1, 4.4, 1.6, 2.9, 3.3];
        for kind in TestKind::ALL {
            let a = kind.run(&x, &y).unwrap().p_value;
            let b = kind.run(&y, &x).unwrap().p_value;
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }
}
