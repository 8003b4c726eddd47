use std::fmt;

use serde::{Deserialize, Serialize};

/// Rule folding per-window rejections into one bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConfirmationFamily {
    /// At least `ceil(beta * m)` of the `m` windows reject.
    Rate { beta: f64 },
    /// At least `ceil(beta * m)` consecutive windows reject.
    LongestRun { beta: f64 },
    /// Some `n` consecutive windows hold at least `k` rejections.
    #[serde(rename = "k_of_n")]
    KofN { k: usize, n: usize },
}

impl ConfirmationFamily {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            ConfirmationFamily::Rate { beta } | ConfirmationFamily::LongestRun { beta } => {
                if beta > 0.0 && beta <= 1.0 {
                    Ok(())
                } else {
                    Err(format!("beta {beta} outside (0, 1]"))
                }
            }
            ConfirmationFamily::KofN { k, n } => {
                if k >= 1 && k <= n {
                    Ok(())
                } else {
                    Err(format!("k-of-n ({k}, {n}) needs 1 <= k <= n"))
                }
            }
        }
    }

    pub fn tag(&self) -> String {
        match *self {
            ConfirmationFamily::Rate { beta } => format!("rate{beta}"),
            ConfirmationFamily::LongestRun { beta } => format!("run{beta}"),
            ConfirmationFamily::KofN { k, n } => format!("k{k}of{n}"),
        }
    }
}

impl fmt::Display for ConfirmationFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

/// `ceil(beta * m)`, ignoring rounding noise in the product (0.3 * 10).
pub fn rate_threshold(beta: f64, m: usize) -> usize {
    ((beta * m as f64) - 1e-9).ceil().max(0.0) as usize
}

pub fn longest_run(flags: &[bool]) -> usize {
    let mut best = 0;
    let mut cur = 0;
    for &f in flags {
        cur = if f { cur + 1 } else { 0 };
        best = best.max(cur);
    }
    best
}

/// Largest number of rejections in any `n` consecutive flags (all flags
/// when there are fewer than `n`).
pub fn max_in_span(flags: &[bool], n: usize) -> usize {
    if flags.len() <= n {
        return flags.iter().filter(|&&f| f).count();
    }
    let mut count = flags[..n].iter().filter(|&&f| f).count();
    let mut best = count;
    for i in n..flags.len() {
        count += flags[i] as usize;
        count -= flags[i - n] as usize;
        best = best.max(count);
    }
    best
}

pub fn confirm(flags: &[bool], family: &ConfirmationFamily) -> bool {
    let m = flags.len();
    if m == 0 {
        return false;
    }
    match *family {
        ConfirmationFamily::Rate { beta } => {
            flags.iter().filter(|&&f| f).count() >= rate_threshold(beta, m).max(1)
        }
        ConfirmationFamily::LongestRun { beta } => {
            longest_run(flags) >= rate_threshold(beta, m).max(1)
        }
        ConfirmationFamily::KofN { k, n } => max_in_span(flags, n) >= k,
    }
}
