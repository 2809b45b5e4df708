//! Log-bilinear maximum-entropy copula.
//!
//! The copula density is
//!
//! ```text
//! cop(u, v) = exp( sum_{(j,k) in I} theta_jk S_j(u) S_k(v) ) / Z
//! ```
//!
//! Because every `S_j` is constant on the probability cells of its marginal,
//! `Z`, the model moments and every other integral over the unit square
//! reduce to finite sums over the `K_x x K_y` cell grid weighted by
//! `p_k q_l`. Fitting minimises the convex dual `log Z(theta) - theta . LP`
//! with a damped Newton method whose Hessian is the model covariance of the
//! selected sufficient statistics.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::comoments::{CoMomentTable, SelectionResult, Term};
use crate::error::{Error, Result};
use crate::lp_basis::LpBasis;
use crate::table::ContingencyTable;

/// Stopping rule for [`fit`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Convergence threshold on the max-norm of the gradient.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 200,
        }
    }
}

/// Diagnostics of a completed fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct FitReport {
    pub iterations: usize,
    pub grad_norm: f64,
    /// Iterations where the Hessian was singular and a gradient step was used.
    pub gradient_steps: usize,
    /// Iterations where the Hessian needed a ridge to factorise.
    pub regularized_steps: usize,
}

const ARMIJO_C: f64 = 1e-4;
const MAX_HALVINGS: usize = 60;

/// Which variable a conditional comparison density describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Density over X for a fixed value of Y.
    XGivenY,
    /// Density over Y for a fixed value of X.
    YGivenX,
}

/// Fitted (or explicitly specified) log-bilinear copula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxEntCopulaModel {
    bx: LpBasis,
    by: LpBasis,
    terms: Vec<Term>,
    theta: Vec<f64>,
    log_z: f64,
    report: FitReport,
}

/// Exponent `sum_t theta_t T_{j_t}(x_k) T_{k_t}(y_l)` on the full cell grid,
/// row-major in `(k, l)`.
fn exponent_grid(bx: &LpBasis, by: &LpBasis, terms: &[Term], theta: &[f64]) -> Vec<f64> {
    let (kx, ky) = (bx.support_len(), by.support_len());
    // Collapse the Y side first: b[j][l] = sum_{t: j_t = j} theta_t T_{k_t}(y_l).
    let mut b = vec![vec![0.0; ky]; bx.degree()];
    for (&(j, k), &th) in terms.iter().zip(theta) {
        for (dst, &t) in b[j - 1].iter_mut().zip(by.row(k)) {
            *dst += th * t;
        }
    }
    let active: Vec<usize> = (0..bx.degree())
        .filter(|&j| terms.iter().any(|t| t.0 == j + 1))
        .collect();
    let mut e = vec![0.0; kx * ky];
    for (r, row) in e.chunks_mut(ky).enumerate() {
        for &j in &active {
            let tx = bx.at(j + 1, r);
            for (dst, &bv) in row.iter_mut().zip(&b[j]) {
                *dst += tx * bv;
            }
        }
    }
    e
}

fn log_sum_weighted(bx: &LpBasis, by: &LpBasis, e: &[f64]) -> f64 {
    let ky = by.support_len();
    let shift = e.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (p, q) = (bx.marginal().probs(), by.marginal().probs());
    let mut s = 0.0;
    for (r, row) in e.chunks(ky).enumerate() {
        let inner: f64 = row.iter().zip(q).map(|(v, ql)| ql * (v - shift).exp()).sum();
        s += p[r] * inner;
    }
    shift + s.ln()
}

fn check_terms(bx: &LpBasis, by: &LpBasis, terms: &[Term], theta: &[f64]) -> Result<()> {
    if terms.len() != theta.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} terms but {} coefficients",
            terms.len(),
            theta.len()
        )));
    }
    for (i, &(j, k)) in terms.iter().enumerate() {
        if j == 0 || j > bx.degree() || k == 0 || k > by.degree() {
            return Err(Error::DimensionMismatch(format!(
                "term ({j}, {k}) outside the {}x{} basis",
                bx.degree(),
                by.degree()
            )));
        }
        if terms[..i].contains(&(j, k)) {
            return Err(Error::DimensionMismatch(format!("duplicate term ({j}, {k})")));
        }
    }
    if theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::OutOfRange("non-finite coefficient".into()));
    }
    Ok(())
}

/// `log Z(theta)`, summed exactly over the cell grid with a max shift.
pub fn log_partition(bx: &LpBasis, by: &LpBasis, terms: &[Term], theta: &[f64]) -> f64 {
    if terms.is_empty() {
        return 0.0;
    }
    log_sum_weighted(bx, by, &exponent_grid(bx, by, terms, theta))
}

/// Gradient of [`log_partition`] with respect to `theta`: the model means
/// of the selected sufficient statistics.
pub fn log_partition_gradient(bx: &LpBasis, by: &LpBasis, terms: &[Term], theta: &[f64]) -> Vec<f64> {
    if terms.is_empty() {
        return Vec::new();
    }
    moments(bx, by, terms, theta).mean
}

/// Model moments of the selected sufficient statistics.
struct Moments {
    log_z: f64,
    mean: Vec<f64>,
    cov: Vec<Vec<f64>>,
}

fn moments(bx: &LpBasis, by: &LpBasis, terms: &[Term], theta: &[f64]) -> Moments {
    let e = exponent_grid(bx, by, terms, theta);
    let log_z = log_sum_weighted(bx, by, &e);
    let (p, q) = (bx.marginal().probs(), by.marginal().probs());
    let ky = by.support_len();
    let m2 = by.degree();
    let nt = terms.len();

    let mut mean = vec![0.0; nt];
    let mut second = vec![vec![0.0; nt]; nt];
    let mut ymean = vec![0.0; m2];
    let mut ysecond = vec![vec![0.0; m2]; m2];
    for (r, row) in e.chunks(ky).enumerate() {
        // Y-side moments of the r-th row of cell weights.
        ymean.iter_mut().for_each(|v| *v = 0.0);
        ysecond.iter_mut().flatten().for_each(|v| *v = 0.0);
        for (l, v) in row.iter().enumerate() {
            let w = p[r] * q[l] * (v - log_z).exp();
            for a in 0..m2 {
                let ta = w * by.at(a + 1, l);
                ymean[a] += ta;
                for b in a..m2 {
                    ysecond[a][b] += ta * by.at(b + 1, l);
                }
            }
        }
        for (t, &(jt, kt)) in terms.iter().enumerate() {
            let xt = bx.at(jt, r);
            mean[t] += xt * ymean[kt - 1];
            for (u, &(ju, ku)) in terms.iter().enumerate().skip(t) {
                let (a, b) = if kt <= ku { (kt, ku) } else { (ku, kt) };
                second[t][u] += xt * bx.at(ju, r) * ysecond[a - 1][b - 1];
            }
        }
    }
    let mut cov = vec![vec![0.0; nt]; nt];
    for t in 0..nt {
        for u in t..nt {
            let c = second[t][u] - mean[t] * mean[u];
            cov[t][u] = c;
            cov[u][t] = c;
        }
    }
    Moments { log_z, mean, cov }
}

fn dual_objective(bx: &LpBasis, by: &LpBasis, terms: &[Term], theta: &[f64], target: &[f64]) -> f64 {
    log_partition(bx, by, terms, theta) - theta.iter().zip(target).map(|(a, b)| a * b).sum::<f64>()
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton direction, ridge-regularised when the covariance is near-singular;
/// `None` when even the ridge does not make it factorisable.
fn newton_direction(cov: &[Vec<f64>], grad: &[f64]) -> (Option<Vec<f64>>, bool) {
    let n = grad.len();
    let h = DMatrix::from_fn(n, n, |i, j| cov[i][j]);
    let rhs = DVector::from_iterator(n, grad.iter().map(|g| -g));
    let trace = h.trace();
    let max_diag = (0..n).fold(0.0f64, |m, i| m.max(h[(i, i)]));
    if let Some(ch) = h.clone().cholesky() {
        let min_pivot = ch.l_dirty().diagonal().iter().fold(f64::INFINITY, |m, &x| m.min(x));
        if min_pivot * min_pivot > 1e-12 * max_diag {
            return (Some(ch.solve(&rhs).iter().copied().collect()), false);
        }
    }
    if trace > 0.0 {
        let ridge = 1e-10 * trace;
        let reg = &h + DMatrix::identity(n, n) * ridge;
        if let Some(ch) = reg.cholesky() {
            return (Some(ch.solve(&rhs).iter().copied().collect()), true);
        }
    }
    (None, true)
}

/// Fits the coefficients of the selected terms by matching the model moments
/// to the empirical co-means. An empty selection gives the uniform copula.
pub fn fit(t: &CoMomentTable, sel: &SelectionResult, bx: &LpBasis, by: &LpBasis) -> Result<MaxEntCopulaModel> {
    fit_with(t, sel, bx, by, FitOptions::default())
}

pub fn fit_with(
    t: &CoMomentTable,
    sel: &SelectionResult,
    bx: &LpBasis,
    by: &LpBasis,
    opts: FitOptions,
) -> Result<MaxEntCopulaModel> {
    if t.x_degree() != bx.degree() || t.y_degree() != by.degree() {
        return Err(Error::DimensionMismatch(format!(
            "co-moment table is {}x{} but bases have degrees {} and {}",
            t.x_degree(),
            t.y_degree(),
            bx.degree(),
            by.degree()
        )));
    }
    let terms = sel.chosen.clone();
    check_terms(bx, by, &terms, &vec![0.0; terms.len()])?;
    let target: Vec<f64> = terms.iter().map(|&term| t.get(term)).collect();
    let mut theta = vec![0.0; terms.len()];
    let mut report = FitReport::default();
    if terms.is_empty() {
        return MaxEntCopulaModel::new(bx.clone(), by.clone(), terms, theta, 0.0, report);
    }

    let mut iter = 0;
    loop {
        let m = moments(bx, by, &terms, &theta);
        let grad: Vec<f64> = m.mean.iter().zip(&target).map(|(a, b)| a - b).collect();
        let gnorm = max_abs(&grad);
        report.iterations = iter;
        report.grad_norm = gnorm;
        log::trace!("maxent iteration {iter}: |grad| = {gnorm:e}");
        if gnorm < opts.tol {
            break;
        }
        if iter >= opts.max_iter {
            return Err(Error::NonConvergence {
                iterations: iter,
                grad_norm: gnorm,
            });
        }
        iter += 1;

        let (dir, regularized) = newton_direction(&m.cov, &grad);
        if regularized {
            report.regularized_steps += 1;
        }
        let dir = dir.unwrap_or_else(|| {
            report.gradient_steps += 1;
            grad.iter().map(|g| -g).collect()
        });
        let slope: f64 = grad.iter().zip(&dir).map(|(g, d)| g * d).sum();
        let f0 = m.log_z - theta.iter().zip(&target).map(|(a, b)| a * b).sum::<f64>();

        // Once the predicted decrease is below the rounding level of the
        // objective, Armijo cannot tell steps apart; use the gradient instead.
        let flat = -slope <= 1e-12 * (1.0 + f0.abs());
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let trial: Vec<f64> = theta.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            let ok = if flat {
                let tm = moments(bx, by, &terms, &trial);
                let tg = tm
                    .mean
                    .iter()
                    .zip(&target)
                    .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                tg < gnorm
            } else {
                let f = dual_objective(bx, by, &terms, &trial, &target);
                f.is_finite() && f <= f0 + ARMIJO_C * step * slope
            };
            if ok {
                accepted = Some(trial);
                break;
            }
            step *= 0.5;
        }
        theta = match accepted {
            Some(next) => next,
            None => {
                return Err(Error::NonConvergence {
                    iterations: iter,
                    grad_norm: gnorm,
                })
            }
        };
    }
    let log_z = log_partition(bx, by, &terms, &theta);
    MaxEntCopulaModel::new(bx.clone(), by.clone(), terms, theta, log_z, report)
}

/// A slice of the copula at a fixed value of the conditioning variable,
/// i.e. a conditional comparison density over the other variable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcdSlice {
    pub side: Side,
    /// Atom index of the conditioning value.
    pub condition_index: usize,
    /// Coefficient of `T_j` of the free variable, for `j = 1..=m`.
    pub coefficients: Vec<f64>,
    /// Model log-partition; the raw slice is `exp(sum c_j T_j - log_z)`.
    pub log_z: f64,
    /// Log normaliser that makes the slice integrate to one under the free
    /// variable's marginal.
    pub log_norm: f64,
    exponents: Vec<f64>,
}

impl CcdSlice {
    /// Constant in the raw (copula-section) form, i.e. `-log Z`.
    pub fn raw_constant(&self) -> f64 {
        -self.log_z
    }

    /// Constant of the renormalised conditional comparison density.
    pub fn normalized_constant(&self) -> f64 {
        -self.log_norm
    }

    /// Raw copula section at free atom `k`.
    pub fn raw_at(&self, k: usize) -> f64 {
        (self.exponents[k] - self.log_z).exp()
    }

    /// Renormalised conditional comparison density at free atom `k`.
    pub fn at(&self, k: usize) -> f64 {
        (self.exponents[k] - self.log_norm).exp()
    }

    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }
}

impl MaxEntCopulaModel {
    fn new(bx: LpBasis, by: LpBasis, terms: Vec<Term>, theta: Vec<f64>, log_z: f64, report: FitReport) -> Result<Self> {
        check_terms(&bx, &by, &terms, &theta)?;
        Ok(Self {
            bx,
            by,
            terms,
            theta,
            log_z,
            report,
        })
    }

    /// Model with the given coefficients; `log Z` is computed.
    pub fn from_parts(bx: LpBasis, by: LpBasis, terms: Vec<Term>, theta: Vec<f64>) -> Result<Self> {
        check_terms(&bx, &by, &terms, &theta)?;
        let log_z = log_partition(&bx, &by, &terms, &theta);
        Self::new(bx, by, terms, theta, log_z, FitReport::default())
    }

    /// Model with a previously computed `log Z`, e.g. when reloading a saved
    /// fit. The value must agree with a fresh evaluation to 1e-9.
    pub fn from_saved(
        bx: LpBasis,
        by: LpBasis,
        terms: Vec<Term>,
        theta: Vec<f64>,
        log_z: f64,
        report: FitReport,
    ) -> Result<Self> {
        check_terms(&bx, &by, &terms, &theta)?;
        let fresh = log_partition(&bx, &by, &terms, &theta);
        if !((fresh - log_z).abs() <= 1e-9) {
            return Err(Error::OutOfRange(format!(
                "stored log-partition {log_z} disagrees with recomputed {fresh}"
            )));
        }
        Self::new(bx, by, terms, theta, log_z, report)
    }

    /// The independence (uniform) copula.
    pub fn uniform(bx: LpBasis, by: LpBasis) -> Self {
        Self {
            bx,
            by,
            terms: Vec::new(),
            theta: Vec::new(),
            log_z: 0.0,
            report: FitReport::default(),
        }
    }

    pub fn x_basis(&self) -> &LpBasis {
        &self.bx
    }

    pub fn y_basis(&self) -> &LpBasis {
        &self.by
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Coefficient of term `(j, k)`, zero when not selected.
    pub fn coefficient(&self, term: Term) -> f64 {
        self.terms
            .iter()
            .position(|&t| t == term)
            .map_or(0.0, |i| self.theta[i])
    }

    pub fn log_z(&self) -> f64 {
        self.log_z
    }

    pub fn report(&self) -> &FitReport {
        &self.report
    }

    pub fn is_uniform(&self) -> bool {
        self.terms.is_empty()
    }

    /// Dense `m1 x m2` coefficient matrix with zeros for unselected terms.
    pub fn theta_matrix(&self) -> Vec<Vec<f64>> {
        let mut m = vec![vec![0.0; self.by.degree()]; self.bx.degree()];
        for (&(j, k), &th) in self.terms.iter().zip(&self.theta) {
            m[j - 1][k - 1] = th;
        }
        m
    }

    /// Exponent (before subtracting `log Z`) at cell `(k, l)`.
    pub fn exponent_at(&self, k: usize, l: usize) -> f64 {
        self.terms
            .iter()
            .zip(&self.theta)
            .map(|(&(j, i), th)| th * self.bx.at(j, k) * self.by.at(i, l))
            .sum()
    }

    /// Copula density on the cell of atoms `(k, l)`.
    pub fn density_cell(&self, k: usize, l: usize) -> f64 {
        (self.exponent_at(k, l) - self.log_z).exp()
    }

    /// Copula density at `(u, v)` in the open unit square.
    pub fn density(&self, u: f64, v: f64) -> Result<f64> {
        let k = self.bx.marginal().cell_index(u)?;
        let l = self.by.marginal().cell_index(v)?;
        Ok(self.density_cell(k, l))
    }

    /// Copula density over the whole cell grid (`K_x x K_y`).
    pub fn density_grid(&self) -> Vec<Vec<f64>> {
        let ky = self.by.support_len();
        exponent_grid(&self.bx, &self.by, &self.terms, &self.theta)
            .chunks(ky)
            .map(|row| row.iter().map(|e| (e - self.log_z).exp()).collect())
            .collect()
    }

    /// Joint cell probabilities `p_k q_l cop(k, l)`; they sum to one.
    pub fn smooth_grid(&self) -> Vec<Vec<f64>> {
        let (p, q) = (self.bx.marginal().probs(), self.by.marginal().probs());
        self.density_grid()
            .into_iter()
            .zip(p)
            .map(|(row, pk)| row.into_iter().zip(q).map(|(c, ql)| pk * ql * c).collect())
            .collect()
    }

    /// Model expectations `E[S_j(U) S_k(V)]` of the selected terms.
    pub fn expected_comoments(&self) -> Vec<f64> {
        if self.terms.is_empty() {
            return Vec::new();
        }
        moments(&self.bx, &self.by, &self.terms, &self.theta).mean
    }

    /// Conditional comparison density at `condition_value` of the
    /// conditioning variable.
    pub fn ccd_slice(&self, side: Side, condition_value: f64) -> Result<CcdSlice> {
        let (free, cond) = match side {
            Side::XGivenY => (&self.bx, &self.by),
            Side::YGivenX => (&self.by, &self.bx),
        };
        let c = cond
            .marginal()
            .index_of(condition_value)
            .ok_or(Error::OffSupport(condition_value))?;
        let mut coefficients = vec![0.0; free.degree()];
        for (&(j, k), &th) in self.terms.iter().zip(&self.theta) {
            let (fj, ck) = match side {
                Side::XGivenY => (j, k),
                Side::YGivenX => (k, j),
            };
            coefficients[fj - 1] += th * cond.at(ck, c);
        }
        let exponents: Vec<f64> = (0..free.support_len())
            .map(|a| {
                coefficients
                    .iter()
                    .enumerate()
                    .map(|(j, cj)| cj * free.at(j + 1, a))
                    .sum()
            })
            .collect();
        let shift = exponents.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let s: f64 = exponents
            .iter()
            .zip(free.marginal().probs())
            .map(|(e, p)| p * (e - shift).exp())
            .sum();
        Ok(CcdSlice {
            side,
            condition_index: c,
            coefficients,
            log_z: self.log_z,
            log_norm: shift + s.ln(),
            exponents,
        })
    }

    /// Smoothed cell probabilities `g1(k) g2(l) cop(G1(k), G2(l))` for the
    /// cells of `table`. Categories with no observations that fall outside
    /// the model support get probability zero.
    ///
    /// With empirical marginals built from the table the result sums to one.
    /// With parametric marginals it is the restriction of [`Self::smooth_grid`]
    /// to the observed categories.
    pub fn smooth_cells(&self, table: &ContingencyTable) -> Result<Vec<Vec<f64>>> {
        let locate = |b: &LpBasis, values: &[f64], totals: &[u64], what: &str| -> Result<Vec<Option<usize>>> {
            values
                .iter()
                .zip(totals)
                .map(|(&v, &n)| match b.marginal().index_of(v) {
                    Some(i) => Ok(Some(i)),
                    None if n == 0 => Ok(None),
                    None => Err(Error::DimensionMismatch(format!(
                        "{what} category {v} is not on the model support"
                    ))),
                })
                .collect()
        };
        let rows = locate(&self.bx, table.row_values(), &table.row_totals(), "row")?;
        let cols = locate(&self.by, table.col_values(), &table.col_totals(), "column")?;
        let (p, q) = (self.bx.marginal().probs(), self.by.marginal().probs());
        Ok(rows
            .iter()
            .map(|r| {
                cols.iter()
                    .map(|c| match (r, c) {
                        (Some(k), Some(l)) => p[*k] * q[*l] * self.density_cell(*k, *l),
                        _ => 0.0,
                    })
                    .collect()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::comoments::{comoments_table, select};
    use crate::marginals::{Marginal, MarginalKind};

    fn basis(probs: &[f64], degree: usize) -> LpBasis {
        let atoms = (0..probs.len()).map(|i| i as f64).collect();
        let m = Marginal::from_parts(atoms, probs.to_vec(), MarginalKind::Tabulated).unwrap();
        LpBasis::build(m, degree).unwrap()
    }

    #[test]
    fn zero_theta_has_zero_log_partition() {
        let bx = basis(&[0.2, 0.3, 0.5], 2);
        let by = basis(&[0.6, 0.4], 1);
        assert_eq!(log_partition(&bx, &by, &[(1, 1), (2, 1)], &[0.0, 0.0]), 0.0);
        assert_eq!(log_partition(&bx, &by, &[], &[]), 0.0);
    }

    #[test]
    fn binary_log_partition_four_cells() {
        let (p, q) = (0.3, 0.65);
        let bx = basis(&[1.0 - p, p], 1);
        let by = basis(&[1.0 - q, q], 1);
        let c = 0.7;
        let tx = [-p / (p * (1.0 - p)).sqrt(), (1.0 - p) / (p * (1.0 - p)).sqrt()];
        let ty = [-q / (q * (1.0 - q)).sqrt(), (1.0 - q) / (q * (1.0 - q)).sqrt()];
        let wx = [1.0 - p, p];
        let wy = [1.0 - q, q];
        let mut z = 0.0;
        for a in 0..2 {
            for b in 0..2 {
                z += wx[a] * wy[b] * (c * tx[a] * ty[b]).exp();
            }
        }
        assert!((log_partition(&bx, &by, &[(1, 1)], &[c]) - z.ln()).abs() < 1e-14);
    }

    #[test]
    fn density_odds_ratio_identity() {
        let bx = basis(&[0.4, 0.6], 1);
        let by = basis(&[0.7, 0.3], 1);
        let m = MaxEntCopulaModel::from_parts(bx.clone(), by.clone(), vec![(1, 1)], vec![0.45]).unwrap();
        let ratio = m.density_cell(1, 1) * m.density_cell(0, 0) / (m.density_cell(0, 1) * m.density_cell(1, 0));
        let dx = bx.at(1, 1) - bx.at(1, 0);
        let dy = by.at(1, 1) - by.at(1, 0);
        assert!((ratio - (0.45 * dx * dy).exp()).abs() < 1e-12);
    }

    #[test]
    fn uniform_model_is_flat() {
        let m = MaxEntCopulaModel::uniform(basis(&[0.5, 0.5], 1), basis(&[0.2, 0.8], 1));
        assert_eq!(m.density(0.3, 0.9).unwrap(), 1.0);
        assert!(m.density(0.0, 0.5).is_err());
        let s = m.ccd_slice(Side::XGivenY, 1.0).unwrap();
        assert!(s.coefficients.iter().all(|&c| c == 0.0));
        assert!((s.at(0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fit_matches_moments() {
        let table = ContingencyTable::new(vec![vec![10, 4, 1], vec![5, 9, 6], vec![1, 5, 12]]).unwrap();
        let bx = LpBasis::build(table.row_marginal().unwrap(), 2).unwrap();
        let by = LpBasis::build(table.col_marginal().unwrap(), 2).unwrap();
        let t = comoments_table(&bx, &by, &table).unwrap();
        let sel = select(&t, 2.0);
        assert!(!sel.chosen.is_empty());
        let m = fit(&t, &sel, &bx, &by).unwrap();
        for (e, &term) in m.expected_comoments().iter().zip(m.terms()) {
            assert!((e - t.get(term)).abs() < 1e-6);
        }
        let total: f64 = m.smooth_grid().iter().flatten().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn empty_selection_gives_uniform_fit() {
        let bx = basis(&[0.5, 0.5], 1);
        let t = CoMomentTable::from_values(vec![vec![0.0]], 10).unwrap();
        let sel = select(&t, 2.0);
        let m = fit(&t, &sel, &bx, &bx).unwrap();
        assert!(m.is_uniform());
        assert_eq!(m.log_z(), 0.0);
    }

    #[test]
    fn unreachable_moments_fail_to_converge() {
        // |T_1(x) T_1(y)| <= 1 for a fair coin pair, so 1.2 is out of reach.
        let bx = basis(&[0.5, 0.5], 1);
        let t = CoMomentTable::from_values(vec![vec![1.2]], 10).unwrap();
        let sel = select(&t, 2.0);
        match fit(&t, &sel, &bx, &bx) {
            Err(Error::NonConvergence { grad_norm, .. }) => assert!(grad_norm > 0.0),
            other => panic!("expected non-convergence, got {other:?}"),
        }
    }

    #[test]
    fn ccd_slice_orientation() {
        let bx = basis(&[0.2, 0.3, 0.5], 2);
        let by = basis(&[0.6, 0.4], 1);
        let m = MaxEntCopulaModel::from_parts(bx.clone(), by.clone(), vec![(1, 1), (2, 1)], vec![0.3, -0.2]).unwrap();
        let s = m.ccd_slice(Side::XGivenY, 1.0).unwrap();
        assert!((s.coefficients[0] - 0.3 * by.at(1, 1)).abs() < 1e-15);
        assert!((s.coefficients[1] + 0.2 * by.at(1, 1)).abs() < 1e-15);
        for k in 0..3 {
            assert!((s.raw_at(k) - m.density_cell(k, 1)).abs() < 1e-14);
        }
        let mass: f64 = (0..3).map(|k| s.at(k) * bx.marginal().probs()[k]).sum();
        assert!((mass - 1.0).abs() < 1e-14);

        let s = m.ccd_slice(Side::YGivenX, 2.0).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.coefficients[0] - (0.3 * bx.at(1, 2) - 0.2 * bx.at(2, 2))).abs() < 1e-15);
        assert!(m.ccd_slice(Side::YGivenX, 5.0).is_err());
    }

    #[test]
    fn saved_log_partition_is_checked() {
        let bx = basis(&[0.4, 0.6], 1);
        let m = MaxEntCopulaModel::from_parts(bx.clone(), bx.clone(), vec![(1, 1)], vec![0.2]).unwrap();
        assert!(MaxEntCopulaModel::from_saved(
            bx.clone(),
            bx.clone(),
            vec![(1, 1)],
            vec![0.2],
            m.log_z(),
            FitReport::default()
        )
        .is_ok());
        assert!(
            MaxEntCopulaModel::from_saved(bx.clone(), bx, vec![(1, 1)], vec![0.2], 0.5, FitReport::default()).is_err()
        );
    }
}
