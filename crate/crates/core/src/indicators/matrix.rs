use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use crate::io::{self, FormatError};
use crate::sim::ClassLabel;

/// Signals x indicators bit matrix with class labels, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndicatorMatrix {
    signal_ids: Vec<u64>,
    labels: Vec<ClassLabel>,
    columns: Vec<String>,
    bits: Vec<u8>,
}

impl IndicatorMatrix {
    pub fn new(
        signal_ids: Vec<u64>,
        labels: Vec<ClassLabel>,
        columns: Vec<String>,
        bits: Vec<u8>,
    ) -> Result<Self, String> {
        if signal_ids.len() != labels.len() {
            return Err(format!(
                "{} signal ids but {} labels",
                signal_ids.len(),
                labels.len()
            ));
        }
        if bits.len() != labels.len() * columns.len() {
            return Err(format!(
                "{} bits do not fill {} x {}",
                bits.len(),
                labels.len(),
                columns.len()
            ));
        }
        if let Some(i) = bits.iter().position(|&b| b > 1) {
            return Err(format!("entry {i} is {} (expected 0 or 1)", bits[i]));
        }
        Ok(Self {
            signal_ids,
            labels,
            columns,
            bits,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn signal_ids(&self) -> &[u64] {
        &self.signal_ids
    }

    pub fn labels(&self) -> &[ClassLabel] {
        &self.labels
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn row(&self, i: usize) -> &[u8] {
        let p = self.n_cols();
        &self.bits[i * p..(i + 1) * p]
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.bits[row * self.n_cols() + col]
    }

    pub fn column(&self, col: usize) -> Vec<u8> {
        (0..self.n_rows()).map(|i| self.get(i, col)).collect()
    }

    pub fn column_index(&self, id: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == id)
    }

    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut bits = Vec::with_capacity(rows.len() * self.n_cols());
        for &i in rows {
            bits.extend_from_slice(self.row(i));
        }
        Self {
            signal_ids: rows.iter().map(|&i| self.signal_ids[i]).collect(),
            labels: rows.iter().map(|&i| self.labels[i]).collect(),
            columns: self.columns.clone(),
            bits,
        }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        let mut bits = Vec::with_capacity(self.n_rows() * cols.len());
        for i in 0..self.n_rows() {
            let row = self.row(i);
            bits.extend(cols.iter().map(|&j| row[j]));
        }
        Self {
            signal_ids: self.signal_ids.clone(),
            labels: self.labels.clone(),
            columns: cols.iter().map(|&j| self.columns[j].clone()).collect(),
            bits,
        }
    }

    pub fn select_columns_by_id<S: AsRef<str>>(&self, ids: &[S]) -> Result<Self, String> {
        let index: HashMap<&str, usize> = self
            .columns
            .iter()
            .enumerate()
            .map(|(j, c)| (c.as_str(), j))
            .collect();
        let cols = ids
            .iter()
            .map(|id| {
                index
                    .get(id.as_ref())
                    .copied()
                    .ok_or_else(|| format!("unknown indicator `{}`", id.as_ref()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.select_columns(&cols))
    }

    /// CSV with header `signal_id,label,<indicator ids...>` and one row of
    /// integers per signal; label is the class code 0..=3.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["signal_id".to_string(), "label".to_string()];
        header.extend(self.columns.iter().cloned());
        w.write_record(&header)?;
        let mut record: Vec<String> = Vec::with_capacity(self.n_cols() + 2);
        for i in 0..self.n_rows() {
            record.clear();
            record.push(self.signal_ids[i].to_string());
            record.push(self.labels[i].code().to_string());
            record.extend(self.row(i).iter().map(|b| b.to_string()));
            w.write_record(&record)?;
        }
        w.flush()
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self, FormatError> {
        let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(input);
        let header = r
            .headers()
            .map_err(|e| FormatError::at_line(1, e.to_string()))?
            .clone();
        if header.len() < 2 || &header[0] != "signal_id" || &header[1] != "label" {
            return Err(FormatError::at_line(
                1,
                "header must start with `signal_id,label`",
            ));
        }
        let columns: Vec<String> = header.iter().skip(2).map(str::to_string).collect();
        let mut signal_ids = Vec::new();
        let mut labels = Vec::new();
        let mut bits = Vec::new();
        for (i, rec) in r.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| FormatError::at_line(line, e.to_string()))?;
            let id = rec[0]
                .parse::<u64>()
                .map_err(|_| FormatError::at_line(line, format!("bad signal_id `{}`", &rec[0])))?;
            let label = rec[1]
                .parse::<u8>()
                .ok()
                .and_then(ClassLabel::from_code)
                .ok_or_else(|| FormatError::at_line(line, format!("bad label `{}`", &rec[1])))?;
            signal_ids.push(id);
            labels.push(label);
            for (j, field) in rec.iter().skip(2).enumerate() {
                match field {
                    "0" => bits.push(0),
                    "1" => bits.push(1),
                    other => {
                        return Err(FormatError::at_line(
                            line,
                            format!("column `{}`: `{other}` is not 0 or 1", columns[j]),
                        ))
                    }
                }
            }
        }
        Self::new(signal_ids, labels, columns, bits).map_err(FormatError::new)
    }

    pub fn load(path: &Path) -> Result<Self, FormatError> {
        Self::read_csv(io::open_buffered(path)?).map_err(|e| e.in_file(path))
    }
}
