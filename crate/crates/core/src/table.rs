//! Two-way contingency tables.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::Marginal;

/// An `I x J` table of non-negative cell counts with row and column labels.
///
/// Each category also carries a numeric value used to place it on the
/// support of the corresponding marginal. Labels that parse as strictly
/// increasing numbers are used directly; otherwise categories are numbered
/// `1..=I` in table order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    row_values: Vec<f64>,
    col_values: Vec<f64>,
}

fn category_values(labels: &[String]) -> Vec<f64> {
    let parsed: Option<Vec<f64>> = labels
        .iter()
        .map(|l| l.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect();
    match parsed {
        Some(v) if v.windows(2).all(|w| w[0] < w[1]) => v,
        _ => (1..=labels.len()).map(|i| i as f64).collect(),
    }
}

impl ContingencyTable {
    pub fn new(counts: Vec<Vec<u64>>) -> Result<Self> {
        let rows = (1..=counts.len()).map(|i| i.to_string()).collect();
        let cols = (1..=counts.first().map_or(0, Vec::len))
            .map(|i| i.to_string())
            .collect();
        Self::with_labels(counts, rows, cols)
    }

    pub fn with_labels(counts: Vec<Vec<u64>>, row_labels: Vec<String>, col_labels: Vec<String>) -> Result<Self> {
        if counts.is_empty() || counts[0].is_empty() {
            return Err(Error::InvalidTable("table has no cells".into()));
        }
        let j = counts[0].len();
        if counts.iter().any(|r| r.len() != j) {
            return Err(Error::InvalidTable("rows have different lengths".into()));
        }
        if row_labels.len() != counts.len() || col_labels.len() != j {
            return Err(Error::InvalidTable("label count does not match table shape".into()));
        }
        if counts.iter().flatten().all(|&c| c == 0) {
            return Err(Error::InvalidTable("table total is zero".into()));
        }
        let row_values = category_values(&row_labels);
        let col_values = category_values(&col_labels);
        Ok(Self {
            counts,
            row_labels,
            col_labels,
            row_values,
            col_values,
        })
    }

    /// Cross-tabulates paired observations over their distinct values.
    pub fn from_pairs(pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptySample);
        }
        let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let mx = Marginal::from_samples(&xs)?;
        let my = Marginal::from_samples(&ys)?;
        let mut counts = vec![vec![0u64; my.len()]; mx.len()];
        for &(x, y) in pairs {
            // Both lookups succeed: the marginals were built from these values.
            let k = mx.index_of(x).ok_or(Error::OffSupport(x))?;
            let l = my.index_of(y).ok_or(Error::OffSupport(y))?;
            counts[k][l] += 1;
        }
        let labels = |m: &Marginal| m.atoms().iter().map(|a| a.to_string()).collect();
        let mut t = Self::with_labels(counts, labels(&mx), labels(&my))?;
        t.row_values = mx.atoms().to_vec();
        t.col_values = my.atoms().to_vec();
        Ok(t)
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn n_rows(&self) -> usize {
        self.counts.len()
    }

    pub fn n_cols(&self) -> usize {
        self.counts[0].len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    pub fn row_values(&self) -> &[f64] {
        &self.row_values
    }

    pub fn col_values(&self) -> &[f64] {
        &self.col_values
    }

    /// Total count `f_{++}`.
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        (0..self.n_cols())
            .map(|l| self.counts.iter().map(|r| r[l]).sum())
            .collect()
    }

    /// Cell proportions `f_kl / n`.
    pub fn proportions(&self) -> Vec<Vec<f64>> {
        let n = self.total() as f64;
        self.counts
            .iter()
            .map(|r| r.iter().map(|&c| c as f64 / n).collect())
            .collect()
    }

    /// Tabulated row marginal; empty rows carry no mass and are dropped.
    pub fn row_marginal(&self) -> Result<Marginal> {
        Marginal::from_counts(&self.row_values, &self.row_totals())
    }

    pub fn col_marginal(&self) -> Result<Marginal> {
        Marginal::from_counts(&self.col_values, &self.col_totals())
    }

    /// Expands the table into one `(x, y)` pair per counted observation.
    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.total() as usize);
        for (k, row) in self.counts.iter().enumerate() {
            for (l, &c) in row.iter().enumerate() {
                out.extend(std::iter::repeat_n(
                    (self.row_values[k], self.col_values[l]),
                    c as usize,
                ));
            }
        }
        out
    }

    /// Row and column sample of the expanded observations, as integers.
    /// Fails when a category value is not a non-negative integer.
    pub fn integer_margins(&self) -> Result<(Vec<u64>, Vec<u64>)> {
        let as_int = |v: f64| -> Result<u64> {
            if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(Error::InvalidTable(format!("category value {v} is not a count")))
            }
        };
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        for (x, y) in self.to_pairs() {
            xs.push(as_int(x)?);
            ys.push(as_int(y)?);
        }
        Ok((xs, ys))
    }
}
