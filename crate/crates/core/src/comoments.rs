//! Empirical LP co-means and penalised constraint selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_basis::LpBasis;
use crate::table::ContingencyTable;

/// A product-basis index `(j, k)`: `T_j` of X times `T_k` of Y, both 1-based.
pub type Term = (usize, usize);

/// Matrix of empirical LP co-means `(1/n) sum_i T_j(x_i) T_k(y_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoMomentTable {
    values: Vec<Vec<f64>>,
    n: usize,
}

impl CoMomentTable {
    /// Wraps precomputed co-means; rows index X orders, columns Y orders.
    pub fn from_values(values: Vec<Vec<f64>>, n: usize) -> Result<Self> {
        if values.is_empty() || values[0].is_empty() {
            return Err(Error::DimensionMismatch("empty co-moment table".into()));
        }
        let cols = values[0].len();
        if values.iter().any(|r| r.len() != cols) {
            return Err(Error::DimensionMismatch("ragged co-moment table".into()));
        }
        if n == 0 {
            return Err(Error::EmptySample);
        }
        Ok(Self { values, n })
    }

    /// Co-mean for the 1-based term `(j, k)`.
    pub fn get(&self, (j, k): Term) -> f64 {
        self.values[j - 1][k - 1]
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn x_degree(&self) -> usize {
        self.values.len()
    }

    pub fn y_degree(&self) -> usize {
        self.values[0].len()
    }

    pub fn n(&self) -> usize {
        self.n
    }
}

fn lookup(b: &LpBasis, v: f64) -> Result<usize> {
    b.marginal().index_of(v).ok_or(Error::OffSupport(v))
}

/// Co-means of paired observations.
pub fn comoments(bx: &LpBasis, by: &LpBasis, pairs: &[(f64, f64)]) -> Result<CoMomentTable> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let (m1, m2) = (bx.degree(), by.degree());
    let mut acc = vec![vec![0.0; m2]; m1];
    for &(x, y) in pairs {
        let kx = lookup(bx, x)?;
        let ky = lookup(by, y)?;
        for (j, row) in acc.iter_mut().enumerate() {
            let tx = bx.at(j + 1, kx);
            for (i, cell) in row.iter_mut().enumerate() {
                *cell += tx * by.at(i + 1, ky);
            }
        }
    }
    let n = pairs.len();
    acc.iter_mut().flatten().for_each(|v| *v /= n as f64);
    CoMomentTable::from_values(acc, n)
}

/// Co-means of the observations summarised by a contingency table. Row and
/// column values of the table must lie on the bases' supports.
pub fn comoments_table(bx: &LpBasis, by: &LpBasis, table: &ContingencyTable) -> Result<CoMomentTable> {
    let (m1, m2) = (bx.degree(), by.degree());
    let mut acc = vec![vec![0.0; m2]; m1];
    for (r, row) in table.counts().iter().enumerate() {
        for (c, &f) in row.iter().enumerate() {
            if f == 0 {
                continue;
            }
            let kx = lookup(bx, table.row_values()[r])?;
            let ky = lookup(by, table.col_values()[c])?;
            let w = f as f64;
            for (j, out) in acc.iter_mut().enumerate() {
                let tx = w * bx.at(j + 1, kx);
                for (i, cell) in out.iter_mut().enumerate() {
                    *cell += tx * by.at(i + 1, ky);
                }
            }
        }
    }
    let n = table.total() as usize;
    acc.iter_mut().flatten().for_each(|v| *v /= n as f64);
    CoMomentTable::from_values(acc, n)
}

/// Penalty constant for the ordered sum-of-squares selection rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    /// `gamma = 2`.
    Aic,
    /// `gamma = log n`.
    Bic,
    /// Fixed user-supplied `gamma`.
    Custom(f64),
    /// Keep every co-mean: the dense `m1 x m2` model.
    Dense,
}

impl Penalty {
    pub fn gamma(&self, n: usize) -> Option<f64> {
        match *self {
            Penalty::Aic => Some(2.0),
            Penalty::Bic => Some((n as f64).ln()),
            Penalty::Custom(g) => Some(g),
            Penalty::Dense => None,
        }
    }
}

/// Outcome of constraint selection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Selected terms, strongest co-mean first.
    pub chosen: Vec<Term>,
    /// `PenSum(q)` for `q = 1..=m1*m2`.
    pub pensum_trace: Vec<f64>,
    /// Penalty constant (0 for the dense model).
    pub gamma: f64,
}

/// All terms sorted by decreasing `|co-mean|`; ties go to the lower `j + k`,
/// then to the lower `j`.
pub fn ranked_terms(t: &CoMomentTable) -> Vec<Term> {
    let mut terms: Vec<Term> = (1..=t.x_degree())
        .flat_map(|j| (1..=t.y_degree()).map(move |k| (j, k)))
        .collect();
    terms.sort_by(|&a, &b| {
        t.get(b)
            .abs()
            .total_cmp(&t.get(a).abs())
            .then((a.0 + a.1).cmp(&(b.0 + b.1)))
            .then(a.0.cmp(&b.0))
    });
    terms
}

fn pensum_trace(t: &CoMomentTable, ranked: &[Term], gamma: f64) -> Vec<f64> {
    let n = t.n() as f64;
    let mut acc = 0.0;
    ranked
        .iter()
        .enumerate()
        .map(|(i, &term)| {
            acc += t.get(term).powi(2);
            acc - gamma / n * (i + 1) as f64
        })
        .collect()
}

/// Keeps the top `q*` co-means, where `q*` maximises
/// `PenSum(q) = (sum of top-q squared co-means) - gamma q / n`.
/// The first maximiser wins; a non-positive maximum selects nothing.
pub fn select(t: &CoMomentTable, gamma: f64) -> SelectionResult {
    let ranked = ranked_terms(t);
    let trace = pensum_trace(t, &ranked, gamma);
    let mut best: Option<(usize, f64)> = None;
    for (i, &v) in trace.iter().enumerate() {
        if best.is_none_or(|(_, b)| v > b) {
            best = Some((i, v));
        }
    }
    let q = match best {
        Some((i, v)) if v > 0.0 => i + 1,
        _ => 0,
    };
    SelectionResult {
        chosen: ranked[..q].to_vec(),
        pensum_trace: trace,
        gamma,
    }
}

/// Keeps every term (no penalisation).
pub fn select_all(t: &CoMomentTable) -> SelectionResult {
    let ranked = ranked_terms(t);
    let trace = pensum_trace(t, &ranked, 0.0);
    SelectionResult {
        chosen: ranked,
        pensum_trace: trace,
        gamma: 0.0,
    }
}

/// Applies `penalty` to `t`.
pub fn select_with(t: &CoMomentTable, penalty: Penalty) -> SelectionResult {
    match penalty.gamma(t.n()) {
        Some(g) => select(t, g),
        None => select_all(t),
    }
}
