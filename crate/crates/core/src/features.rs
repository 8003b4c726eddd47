//! Mutual information on discrete columns and mRMR forward ranking.
//!
//! Ranking uses the difference form: at each step the unselected column
//! maximizing `I(f; class) - mean_{s in S} I(f; s)` is added. The first
//! pick is the most relevant column. Ties go to the lower column index.
//! All information is in nats.

use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::indicators::IndicatorMatrix;
use crate::io::{self, FormatError};

/// Plug-in entropy of a discrete column (nats).
pub fn entropy(x: &[u8]) -> f64 {
    let n = x.len() as f64;
    let mut counts = [0usize; 256];
    for &v in x {
        counts[v as usize] += 1;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Plug-in mutual information `sum p(x,y) ln(p(x,y) / (p(x) p(y)))` (nats).
///
/// Symbols must be below 16. Empty cells contribute nothing.
pub fn mutual_information(x: &[u8], y: &[u8]) -> f64 {
    assert_eq!(x.len(), y.len(), "columns must have equal lengths");
    assert!(!x.is_empty(), "columns must be non-empty");
    const K: usize = 16;
    let mut joint = [[0u32; K]; K];
    for (&a, &b) in x.iter().zip(y) {
        joint[a as usize][b as usize] += 1;
    }
    let mut px = [0u32; K];
    let mut py = [0u32; K];
    for a in 0..K {
        for b in 0..K {
            px[a] += joint[a][b];
            py[b] += joint[a][b];
        }
    }
    let n = x.len() as f64;
    let mut mi = 0.0;
    for a in 0..K {
        if px[a] == 0 {
            continue;
        }
        for b in 0..K {
            let c = joint[a][b];
            if c == 0 {
                continue;
            }
            let c = c as f64;
            mi += c / n * (c * n / (px[a] as f64 * py[b] as f64)).ln();
        }
    }
    mi.max(0.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedIndicator {
    pub rank: usize,
    pub indicator_id: String,
    pub relevance: f64,
    /// Mean MI against the indicators selected before this one.
    pub redundancy: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct RankingResult {
    pub ordered_ids: Vec<String>,
    pub relevance: Vec<f64>,
    pub redundancy_at_selection: Vec<f64>,
    pub scores: Vec<f64>,
}

impl RankingResult {
    pub fn len(&self) -> usize {
        self.ordered_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ordered_ids.is_empty()
    }

    pub fn top(&self, m: usize) -> &[String] {
        &self.ordered_ids[..m.min(self.len())]
    }

    pub fn records(&self) -> Vec<RankedIndicator> {
        (0..self.len())
            .map(|i| RankedIndicator {
                rank: i + 1,
                indicator_id: self.ordered_ids[i].clone(),
                relevance: self.relevance[i],
                redundancy: self.redundancy_at_selection[i],
                score: self.scores[i],
            })
            .collect()
    }

    /// CSV `rank,indicator_id,relevance,redundancy,score`, floats written
    /// in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["rank", "indicator_id", "relevance", "redundancy", "score"])?;
        for r in self.records() {
            w.write_record([
                r.rank.to_string(),
                r.indicator_id,
                io::fmt_f64(r.relevance),
                io::fmt_f64(r.redundancy),
                io::fmt_f64(r.score),
            ])?;
        }
        w.flush()
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, FormatError> {
        let mut r = csv::Reader::from_reader(input);
        let mut out = RankingResult::default();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| FormatError::at_line(line, e.to_string()))?;
            if rec.len() != 5 {
                return Err(FormatError::at_line(line, "expected 5 fields"));
            }
            let rank: usize = rec[0]
                .parse()
                .map_err(|_| FormatError::at_line(line, "bad rank"))?;
            if rank != i + 1 {
                return Err(FormatError::at_line(line, format!("rank {rank}, expected {}", i + 1)));
            }
            let num = |k: usize| io::parse_f64(&rec[k]).map_err(|e| FormatError::at_line(line, e));
            out.ordered_ids.push(rec[1].to_string());
            out.relevance.push(num(2)?);
            out.redundancy_at_selection.push(num(3)?);
            out.scores.push(num(4)?);
        }
        Ok(out)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::read_csv(io::open_buffered(path)?).map_err(|e| e.in_file(path))
    }
}

fn columns_of(matrix: &IndicatorMatrix) -> Vec<Vec<u8>> {
    (0..matrix.n_cols()).map(|j| matrix.column(j)).collect()
}

/// Greedy mRMR (difference form) over the columns of `matrix`.
pub fn mrmr_rank(matrix: &IndicatorMatrix, count: usize) -> RankingResult {
    assert!(count <= matrix.n_cols(), "count exceeds number of columns");
    if count == 0 {
        return RankingResult::default();
    }
    assert!(!matrix.is_empty(), "matrix has no rows");
    let classes: Vec<u8> = matrix.labels().iter().map(|l| l.code()).collect();
    let cols = columns_of(matrix);
    let relevance: Vec<f64> = cols
        .par_iter()
        .map(|c| mutual_information(c, &classes))
        .collect();

    // Running sum of I(f; s) over the selected s, filled one selected
    // column at a time so each pair is computed once.
    let mut redundancy_sum = vec![0.0; cols.len()];
    let mut selected = vec![false; cols.len()];
    let mut result = RankingResult::default();

    for step in 0..count {
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..cols.len() {
            if selected[j] {
                continue;
            }
            let red = if step == 0 {
                0.0
            } else {
                redundancy_sum[j] / step as f64
            };
            let score = relevance[j] - red;
            if best.is_none_or(|(_, s, _)| score > s) {
                best = Some((j, score, red));
            }
        }
        let (j, score, red) = best.expect("an unselected column remains");
        selected[j] = true;
        result.ordered_ids.push(matrix.columns()[j].clone());
        result.relevance.push(relevance[j]);
        result.redundancy_at_selection.push(red);
        result.scores.push(score);

        if step + 1 < count {
            let chosen = &cols[j];
            let add: Vec<(usize, f64)> = (0..cols.len())
                .into_par_iter()
                .filter(|&f| !selected[f])
                .map(|f| (f, mutual_information(&cols[f], chosen)))
                .collect();
            for (f, mi) in add {
                redundancy_sum[f] += mi;
            }
        }
    }
    result
}
