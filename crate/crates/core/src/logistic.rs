//! Copula-logistic regression and LP feature matrices.
//!
//! For a binary response with base rate `mu`, a log-bilinear copula whose
//! coefficients on the response side are `theta_{j1}` gives
//!
//! ```text
//! logit mu(x) = logit(mu) + sum_j theta_{j1} / sqrt(mu (1 - mu)) T_j(x).
//! ```

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_basis::{max_degree_default, LpBasis};
use crate::marginals::Marginal;
use crate::maxent::{MaxEntCopulaModel, Side};

/// Which variable of a copula model is meant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variable {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CopulaLogisticModel {
    pub alpha0: f64,
    /// `alphas[j - 1]` multiplies `T_j` of the predictor.
    pub alphas: Vec<f64>,
    /// LP basis of the predictor.
    pub basis: LpBasis,
    /// Base rate of the upper response level.
    pub mu: f64,
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn sides(model: &MaxEntCopulaModel, binary: Variable) -> (&LpBasis, &LpBasis) {
    match binary {
        Variable::Y => (model.y_basis(), model.x_basis()),
        Variable::X => (model.x_basis(), model.y_basis()),
    }
}

fn binary_rate(b: &LpBasis, binary: Variable) -> Result<f64> {
    if b.support_len() != 2 || b.degree() != 1 {
        return Err(Error::NotBinary(format!(
            "{binary:?} has {} support points and LP degree {}",
            b.support_len(),
            b.degree()
        )));
    }
    Ok(b.marginal().probs()[1])
}

impl CopulaLogisticModel {
    /// Logistic form of a copula whose `binary` variable has two levels;
    /// the upper level is the positive class.
    pub fn from_copula(model: &MaxEntCopulaModel, binary: Variable) -> Result<Self> {
        let (bin, pred) = sides(model, binary);
        let mu = binary_rate(bin, binary)?;
        let scale = (mu * (1.0 - mu)).sqrt();
        let alphas = (1..=pred.degree())
            .map(|j| {
                let term = match binary {
                    Variable::Y => (j, 1),
                    Variable::X => (1, j),
                };
                model.coefficient(term) / scale
            })
            .collect();
        Ok(Self {
            alpha0: (mu / (1.0 - mu)).ln(),
            alphas,
            basis: pred.clone(),
            mu,
        })
    }

    /// Linear predictor at the predictor atom with index `k`.
    pub fn linear_predictor_at(&self, k: usize) -> f64 {
        self.alpha0
            + self
                .alphas
                .iter()
                .enumerate()
                .map(|(j, a)| a * self.basis.at(j + 1, k))
                .sum::<f64>()
    }

    /// Linear predictor at `x`, snapped to the nearest training atom.
    pub fn linear_predictor(&self, x: f64) -> f64 {
        self.linear_predictor_at(self.basis.marginal().nearest_index(x))
    }

    pub fn predict_proba_at(&self, k: usize) -> f64 {
        sigmoid(self.linear_predictor_at(k))
    }

    /// `P(response = upper level | x)`, snapping `x` to the nearest atom.
    pub fn predict_proba(&self, x: f64) -> f64 {
        sigmoid(self.linear_predictor(x))
    }
}

/// Class probability at predictor atom `k` computed through Bayes' rule from
/// the raw copula sections `d1 = cop(., 1)` and `d0 = cop(., 0)`.
pub fn ccd_route_probability(model: &MaxEntCopulaModel, binary: Variable, k: usize) -> Result<f64> {
    let (bin, pred) = sides(model, binary);
    let mu = binary_rate(bin, binary)?;
    if k >= pred.support_len() {
        return Err(Error::OutOfRange(format!(
            "atom index {k} outside 0..{}",
            pred.support_len()
        )));
    }
    let side = match binary {
        Variable::Y => Side::XGivenY,
        Variable::X => Side::YGivenX,
    };
    let levels = bin.marginal().atoms();
    let d0 = model.ccd_slice(side, levels[0])?.raw_at(k);
    let d1 = model.ccd_slice(side, levels[1])?.raw_at(k);
    Ok(mu * d1 / (mu * d1 + (1.0 - mu) * d0))
}

/// Basis description of one feature-matrix variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSchema {
    pub name: String,
    pub orders: usize,
    pub atoms: Vec<f64>,
    pub probs: Vec<f64>,
    /// `table[j - 1][k]` is `T_j` at `atoms[k]`.
    pub table: Vec<Vec<f64>>,
}

/// Column-wise stacked LP features `T_1..T_{m_j}(x_ij)` of every predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    /// Column names `"var:order"`.
    pub names: Vec<String>,
    /// One row per observation.
    pub rows: Vec<Vec<f64>>,
    pub schema: Vec<FeatureSchema>,
    /// Constant predictors that produced no columns.
    pub skipped: Vec<String>,
}

/// Builds the LP feature matrix with at most `max_order` columns per
/// predictor. Constant predictors are skipped with a warning.
pub fn feature_matrix(columns: &[(String, Vec<f64>)], max_order: usize) -> Result<FeatureMatrix> {
    if max_order == 0 {
        return Err(Error::OutOfRange("max_order must be at least 1".into()));
    }
    let n = columns.first().map_or(0, |c| c.1.len());
    if let Some((name, c)) = columns.iter().find(|c| c.1.len() != n) {
        return Err(Error::DimensionMismatch(format!(
            "column {name} has {} values, expected {n}",
            c.len()
        )));
    }
    let built = columns
        .par_iter()
        .map(|(name, xs)| -> Result<Option<(FeatureSchema, Vec<Vec<f64>>)>> {
            let m = Marginal::from_samples(xs)?;
            if m.len() < 2 {
                log::warn!("column {name} is constant; skipped");
                return Ok(None);
            }
            let degree = max_degree_default(&m, max_order);
            let b = LpBasis::build(m, degree)?;
            let idx: Vec<usize> = xs
                .iter()
                .map(|&x| b.marginal().index_of(x).ok_or(Error::OffSupport(x)))
                .collect::<Result<_>>()?;
            let cols = (1..=b.degree())
                .map(|j| idx.iter().map(|&k| b.at(j, k)).collect())
                .collect();
            let schema = FeatureSchema {
                name: name.clone(),
                orders: b.degree(),
                atoms: b.marginal().atoms().to_vec(),
                probs: b.marginal().probs().to_vec(),
                table: b.table().to_vec(),
            };
            Ok(Some((schema, cols)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut names = Vec::new();
    let mut schema = Vec::new();
    let mut skipped = Vec::new();
    let mut feature_cols: Vec<Vec<f64>> = Vec::new();
    for ((name, _), entry) in columns.iter().zip(built) {
        match entry {
            Some((s, cols)) => {
                names.extend((1..=s.orders).map(|j| format!("{name}:{j}")));
                feature_cols.extend(cols);
                schema.push(s);
            }
            None => skipped.push(name.clone()),
        }
    }
    let rows = (0..n).map(|i| feature_cols.iter().map(|c| c[i]).collect()).collect();
    Ok(FeatureMatrix {
        names,
        rows,
        schema,
        skipped,
    })
}

/// Scales LS-plot points `(alpha_1, alpha_2)` by the largest absolute value
/// on each axis.
pub fn ls_plot(points: &[(String, f64, f64)]) -> Vec<(String, f64, f64)> {
    let m1 = points.iter().fold(0.0f64, |m, p| m.max(p.1.abs()));
    let m2 = points.iter().fold(0.0f64, |m, p| m.max(p.2.abs()));
    let scale = |v: f64, m: f64| if m > 0.0 { v / m } else { 0.0 };
    points
        .iter()
        .map(|(n, a, b)| (n.clone(), scale(*a, m1), scale(*b, m2)))
        .collect()
}
