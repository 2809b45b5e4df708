//! Goodman row-column association form of a copula, odds ratios and
//! logratio biplots.
//!
//! The coefficient matrix `Theta` of a log-bilinear copula is decomposed as
//! `U diag(mu) V'`. Each component gives row scores `phi_c = sum_j U_jc T_j`
//! and column scores `psi_c = sum_k V_kc T_k`, orthonormal under the
//! respective marginals, and
//!
//! ```text
//! log cop(k, l) = mu_0 + sum_c mu_c phi_c(k) psi_c(l).
//! ```

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp_basis::LpBasis;
use crate::marginals::Marginal;
use crate::maxent::MaxEntCopulaModel;
use crate::table::ContingencyTable;

/// Components with an association strength below this are dropped.
const MU_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogLinearModel {
    /// Association strengths, descending.
    pub mu: Vec<f64>,
    /// `row_scores[c][k]` is `phi_c` at the k-th row atom.
    pub row_scores: Vec<Vec<f64>>,
    /// `col_scores[c][l]` is `psi_c` at the l-th column atom.
    pub col_scores: Vec<Vec<f64>>,
    /// Constant term; equals `-log Z` for a log-bilinear copula.
    pub mu0: f64,
    /// Row main effects `mu^R_k` of `log cop`; zero for a log-bilinear copula.
    pub row_effects: Vec<f64>,
    /// Column main effects `mu^C_l`.
    pub col_effects: Vec<f64>,
    pub row_marginal: Marginal,
    pub col_marginal: Marginal,
}

impl LogLinearModel {
    /// Number of association components retained.
    pub fn rank(&self) -> usize {
        self.mu.len()
    }

    /// `log cop` at row atom `k`, column atom `l`.
    pub fn log_copula(&self, k: usize, l: usize) -> f64 {
        self.mu0
            + self.row_effects[k]
            + self.col_effects[l]
            + self
                .mu
                .iter()
                .zip(self.row_scores.iter().zip(&self.col_scores))
                .map(|(m, (phi, psi))| m * phi[k] * psi[l])
                .sum::<f64>()
    }
}

/// Decomposes `theta` (`m1 x m2`) on the given bases.
fn decompose(theta: &[Vec<f64>], bx: &LpBasis, by: &LpBasis, mu0: f64) -> LogLinearModel {
    let (m1, m2) = (bx.degree(), by.degree());
    let mat = DMatrix::from_fn(m1, m2, |i, j| theta[i][j]);
    let svd = mat.svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let vt = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));

    let mut mu = Vec::new();
    let mut row_scores = Vec::new();
    let mut col_scores = Vec::new();
    for c in order {
        let s = svd.singular_values[c];
        if s < MU_FLOOR {
            continue;
        }
        let mut left: Vec<f64> = (0..m1).map(|j| u[(j, c)]).collect();
        let mut right: Vec<f64> = (0..m2).map(|k| vt[(c, k)]).collect();
        // Sign convention: first non-negligible entry of the left vector is positive.
        if left.iter().find(|x| x.abs() > 1e-12).is_some_and(|&x| x < 0.0) {
            left.iter_mut().for_each(|x| *x = -*x);
            right.iter_mut().for_each(|x| *x = -*x);
        }
        let scores = |b: &LpBasis, w: &[f64]| -> Vec<f64> {
            (0..b.support_len())
                .map(|a| w.iter().enumerate().map(|(j, wj)| wj * b.at(j + 1, a)).sum())
                .collect()
        };
        mu.push(s);
        row_scores.push(scores(bx, &left));
        col_scores.push(scores(by, &right));
    }
    LogLinearModel {
        mu,
        row_scores,
        col_scores,
        mu0,
        row_effects: vec![0.0; bx.support_len()],
        col_effects: vec![0.0; by.support_len()],
        row_marginal: bx.marginal().clone(),
        col_marginal: by.marginal().clone(),
    }
}

/// Log-linear form of a fitted copula.
pub fn to_loglinear(model: &MaxEntCopulaModel) -> LogLinearModel {
    decompose(&model.theta_matrix(), model.x_basis(), model.y_basis(), -model.log_z())
}

fn require_positive(table: &ContingencyTable) -> Result<()> {
    if table.counts().iter().flatten().any(|&c| c == 0) {
        return Err(Error::ZeroCell);
    }
    Ok(())
}

/// Saturated log-linear form computed directly from the observed cell
/// proportions, with full-rank LP bases. Row and column main effects of
/// `log cop` are kept so that [`LogLinearModel::log_copula`] is exact.
/// Requires every cell to be positive.
pub fn plugin_loglinear(table: &ContingencyTable) -> Result<LogLinearModel> {
    require_positive(table)?;
    let (mx, my) = (table.row_marginal()?, table.col_marginal()?);
    if mx.len() < 2 || my.len() < 2 {
        return Err(Error::InvalidTable("need at least two rows and two columns".into()));
    }
    let (p, q) = (mx.probs().to_vec(), my.probs().to_vec());
    let bx = LpBasis::build(mx, p.len() - 1)?;
    let by = LpBasis::build(my, q.len() - 1)?;
    let props = table.proportions();
    let log_cop: Vec<Vec<f64>> = props
        .iter()
        .enumerate()
        .map(|(k, row)| row.iter().enumerate().map(|(l, f)| (f / (p[k] * q[l])).ln()).collect())
        .collect();
    let mut mu0 = 0.0;
    let mut theta = vec![vec![0.0; by.degree()]; bx.degree()];
    for (k, row) in log_cop.iter().enumerate() {
        for (l, &lc) in row.iter().enumerate() {
            let w = p[k] * q[l] * lc;
            mu0 += w;
            for (j, out) in theta.iter_mut().enumerate() {
                let tx = w * bx.at(j + 1, k);
                for (i, cell) in out.iter_mut().enumerate() {
                    *cell += tx * by.at(i + 1, l);
                }
            }
        }
    }
    let mut ll = decompose(&theta, &bx, &by, mu0);
    ll.row_effects = log_cop
        .iter()
        .map(|row| row.iter().zip(&q).map(|(lc, ql)| ql * lc).sum::<f64>() - mu0)
        .collect();
    ll.col_effects = (0..q.len())
        .map(|l| log_cop.iter().zip(&p).map(|(row, pk)| pk * row[l]).sum::<f64>() - mu0)
        .collect();
    Ok(ll)
}

fn support_indices(m: &Marginal, values: &[f64], what: &str) -> Result<Vec<usize>> {
    values
        .iter()
        .map(|&v| {
            m.index_of(v)
                .ok_or_else(|| Error::DimensionMismatch(format!("{what} category {v} is not on the score support")))
        })
        .collect()
}

/// Plug-in intrinsic association
/// `mu_c = sum_{k,l} log(p~_kl) p~_{k+} p~_{+l} phi_c(k) psi_c(l)` for every
/// component of `scores`. Undefined when a cell is empty.
pub fn intrinsic_association(table: &ContingencyTable, scores: &LogLinearModel) -> Result<Vec<f64>> {
    require_positive(table)?;
    let rows = support_indices(&scores.row_marginal, table.row_values(), "row")?;
    let cols = support_indices(&scores.col_marginal, table.col_values(), "column")?;
    let n = table.total() as f64;
    let pr: Vec<f64> = table.row_totals().iter().map(|&f| f as f64 / n).collect();
    let pc: Vec<f64> = table.col_totals().iter().map(|&f| f as f64 / n).collect();
    let props = table.proportions();
    Ok(scores
        .row_scores
        .iter()
        .zip(&scores.col_scores)
        .map(|(phi, psi)| {
            let mut s = 0.0;
            for (r, &k) in rows.iter().enumerate() {
                for (c, &l) in cols.iter().enumerate() {
                    s += props[r][c].ln() * pr[r] * pc[c] * phi[k] * psi[l];
                }
            }
            s
        })
        .collect())
}

/// Log odds ratio `sum_c mu_c (phi_c(k) - phi_c(k2)) (psi_c(l) - psi_c(l2))`
/// between row atoms `k`, `k2` and column atoms `l`, `l2`. Exact for the
/// full-rank form of the copula.
pub fn log_odds_ratio(ll: &LogLinearModel, k: usize, k2: usize, l: usize, l2: usize) -> Result<f64> {
    let (kx, ky) = (ll.row_marginal.len(), ll.col_marginal.len());
    if k.max(k2) >= kx || l.max(l2) >= ky {
        return Err(Error::OutOfRange(format!(
            "cell indices ({k}, {k2}) x ({l}, {l2}) outside the {kx}x{ky} grid"
        )));
    }
    Ok(ll
        .mu
        .iter()
        .zip(ll.row_scores.iter().zip(&ll.col_scores))
        .map(|(m, (phi, psi))| m * (phi[k] - phi[k2]) * (psi[l] - psi[l2]))
        .sum())
}

/// Logratio biplot coordinates: row point `k` is `(mu_1 phi_1(k), mu_2 phi_2(k))`,
/// column point `l` is `(mu_1 psi_1(l), mu_2 psi_2(l))`. A missing second
/// component is padded with zeros.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Biplot {
    pub rows: Vec<[f64; 2]>,
    pub cols: Vec<[f64; 2]>,
    /// Association strengths of the two plotted components (zero if absent).
    pub mu: [f64; 2],
}

pub fn biplot_coordinates(ll: &LogLinearModel) -> Biplot {
    let mu = [0, 1].map(|c| ll.mu.get(c).copied().unwrap_or(0.0));
    let coord = |scores: &[Vec<f64>], c: usize, a: usize| scores.get(c).map_or(0.0, |s| s[a]);
    let rows = (0..ll.row_marginal.len())
        .map(|k| [0, 1].map(|c| mu[c] * coord(&ll.row_scores, c, k)))
        .collect();
    let cols = (0..ll.col_marginal.len())
        .map(|l| [0, 1].map(|c| mu[c] * coord(&ll.col_scores, c, l)))
        .collect();
    Biplot { rows, cols, mu }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets;
    use crate::marginals::MarginalKind;

    fn basis(probs: &[f64], degree: usize) -> LpBasis {
        let atoms = (0..probs.len()).map(|i| i as f64).collect();
        LpBasis::build(
            Marginal::from_parts(atoms, probs.to_vec(), MarginalKind::Tabulated).unwrap(),
            degree,
        )
        .unwrap()
    }

    fn weighted(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
        w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
    }

    #[test]
    fn reconstructs_theta_and_scores_are_orthonormal() {
        let bx = basis(&[0.1, 0.2, 0.3, 0.25, 0.15], 3);
        let by = basis(&[0.3, 0.3, 0.4], 2);
        let model = MaxEntCopulaModel::from_parts(
            bx.clone(),
            by.clone(),
            vec![(1, 1), (2, 1), (1, 2), (3, 2)],
            vec![0.4, -0.2, 0.1, 0.05],
        )
        .unwrap();
        let ll = to_loglinear(&model);
        assert_eq!(ll.rank(), 2);
        assert!(ll.mu[0] >= ll.mu[1]);
        for k in 0..5 {
            for l in 0..3 {
                let direct = model.exponent_at(k, l) - model.log_z();
                assert!((ll.log_copula(k, l) - direct).abs() < 1e-12);
            }
        }
        let (p, q) = (bx.marginal().probs(), by.marginal().probs());
        for a in 0..2 {
            for b in 0..2 {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((weighted(p, &ll.row_scores[a], &ll.row_scores[b]) - want).abs() < 1e-12);
                assert!((weighted(q, &ll.col_scores[a], &ll.col_scores[b]) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rank_one_single_term() {
        let bx = basis(&[0.5, 0.5], 1);
        let by = basis(&[0.4, 0.6], 1);
        let model = MaxEntCopulaModel::from_parts(bx, by, vec![(1, 1)], vec![-0.3]).unwrap();
        let ll = to_loglinear(&model);
        assert_eq!(ll.rank(), 1);
        assert!((ll.mu[0] - 0.3).abs() < 1e-14);
        // Left vector is +1, so the sign moves to the column scores.
        assert!(ll.row_scores[0][1] > 0.0);
        assert!((ll.mu0 + model.log_z()).abs() < 1e-15);
        let bp = biplot_coordinates(&ll);
        assert!(bp.rows.iter().all(|r| r[1] == 0.0));
        assert_eq!(bp.mu[1], 0.0);
    }

    #[test]
    fn uniform_model_has_no_components() {
        let model = MaxEntCopulaModel::uniform(basis(&[0.5, 0.5], 1), basis(&[0.2, 0.8], 1));
        let ll = to_loglinear(&model);
        assert_eq!(ll.rank(), 0);
        assert_eq!(ll.mu0, 0.0);
    }

    #[test]
    fn zero_cells_block_plugin_quantities() {
        let t = datasets::shunter();
        assert_eq!(plugin_loglinear(&t), Err(Error::ZeroCell));
        let model = MaxEntCopulaModel::uniform(
            LpBasis::build(t.row_marginal().unwrap(), 1).unwrap(),
            LpBasis::build(t.col_marginal().unwrap(), 1).unwrap(),
        );
        assert_eq!(intrinsic_association(&t, &to_loglinear(&model)), Err(Error::ZeroCell));
    }

    #[test]
    fn plugin_saturated_reproduces_log_copula() {
        let t = ContingencyTable::new(vec![vec![5, 3, 2], vec![4, 6, 1], vec![1, 2, 7]]).unwrap();
        let ll = plugin_loglinear(&t).unwrap();
        let props = t.proportions();
        let (p, q) = (ll.row_marginal.probs().to_vec(), ll.col_marginal.probs().to_vec());
        for k in 0..3 {
            for l in 0..3 {
                let want = (props[k][l] / (p[k] * q[l])).ln();
                assert!((ll.log_copula(k, l) - want).abs() < 1e-10);
            }
        }
        // On the saturated scores the plug-in association is the singular value.
        for (k, k2, l, l2) in [(0, 1, 0, 1), (0, 2, 1, 2), (2, 1, 0, 2)] {
            let direct = (props[k][l] * props[k2][l2] / (props[k][l2] * props[k2][l])).ln();
            assert!((log_odds_ratio(&ll, k, k2, l, l2).unwrap() - direct).abs() < 1e-10);
        }
        let lambda = intrinsic_association(&t, &ll).unwrap();
        for (a, b) in lambda.iter().zip(&ll.mu) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn odds_ratio_index_checks() {
        let model =
            MaxEntCopulaModel::from_parts(basis(&[0.5, 0.5], 1), basis(&[0.2, 0.8], 1), vec![(1, 1)], vec![0.4])
                .unwrap();
        let ll = to_loglinear(&model);
        assert_eq!(log_odds_ratio(&ll, 0, 0, 0, 1).unwrap(), 0.0);
        let direct =
            model.exponent_at(0, 0) + model.exponent_at(1, 1) - model.exponent_at(0, 1) - model.exponent_at(1, 0);
        assert!((log_odds_ratio(&ll, 0, 1, 0, 1).unwrap() - direct).abs() < 1e-12);
        assert!(log_odds_ratio(&ll, 0, 2, 0, 1).is_err());
    }
}
