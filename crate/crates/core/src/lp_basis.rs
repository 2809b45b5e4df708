//! Orthonormal LP polynomials of the mid-distribution transform.
//!
//! The first basis function is the standardised mid-distribution transform;
//! higher orders come from Gram-Schmidt orthonormalisation of its powers
//! under the marginal's own measure. The basis is stored as a table of
//! evaluations on the support atoms, so every downstream integral over the
//! unit square is an exact weighted sum over probability cells.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::marginals::Marginal;

/// Highest LP order used by default for marginals with a rich support.
pub const DEFAULT_DEGREE_CAP: usize = 4;

/// Post-projection norm (relative to the pre-projection norm) below which a
/// power of `T_1` is considered linearly dependent on lower orders.
const DEGENERACY_TOL: f64 = 1e-10;

/// LP basis `T_1..T_m` evaluated on the atoms of a marginal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BasisRepr", into = "BasisRepr")]
pub struct LpBasis {
    marginal: Marginal,
    degree: usize,
    /// `table[j - 1][k]` holds `T_j(atom_k)`.
    table: Vec<Vec<f64>>,
}

/// The table is a pure function of the marginal, so only the inputs persist.
#[derive(Serialize, Deserialize)]
struct BasisRepr {
    marginal: Marginal,
    degree: usize,
}

impl TryFrom<BasisRepr> for LpBasis {
    type Error = Error;

    fn try_from(r: BasisRepr) -> Result<Self> {
        LpBasis::build(r.marginal, r.degree)
    }
}

impl From<LpBasis> for BasisRepr {
    fn from(b: LpBasis) -> Self {
        BasisRepr {
            marginal: b.marginal,
            degree: b.degree,
        }
    }
}

fn weighted_dot(w: &[f64], a: &[f64], b: &[f64]) -> f64 {
    w.iter().zip(a).zip(b).map(|((w, a), b)| w * a * b).sum()
}

fn weighted_mean(w: &[f64], a: &[f64]) -> f64 {
    w.iter().zip(a).map(|(w, a)| w * a).sum()
}

impl LpBasis {
    /// Builds `T_1..T_degree` for `marginal`.
    pub fn build(marginal: Marginal, degree: usize) -> Result<Self> {
        let k = marginal.len();
        if degree == 0 {
            return Err(Error::OutOfRange("basis degree must be at least 1".into()));
        }
        if degree + 1 > k {
            return Err(Error::BasisOrderTooLarge {
                requested: degree,
                max: k - 1,
            });
        }
        let p = marginal.probs();
        let p3: f64 = p.iter().map(|q| q * q * q).sum();
        let scale = 12f64.sqrt() / (1.0 - p3).sqrt();
        let t1: Vec<f64> = marginal.mid_values().iter().map(|f| scale * (f - 0.5)).collect();

        let mut table = vec![t1.clone()];
        for order in 2..=degree {
            let mut v: Vec<f64> = t1.iter().map(|t| t.powi(order as i32)).collect();
            let initial = weighted_dot(p, &v, &v).sqrt();
            // Modified Gram-Schmidt against the constant and lower orders,
            // followed by one re-orthogonalisation pass.
            for _ in 0..2 {
                let c = weighted_mean(p, &v);
                v.iter_mut().for_each(|x| *x -= c);
                for prev in &table {
                    let c = weighted_dot(p, &v, prev);
                    v.iter_mut().zip(prev).for_each(|(x, t)| *x -= c * t);
                }
            }
            let norm = weighted_dot(p, &v, &v).sqrt();
            if !(norm > DEGENERACY_TOL * initial) {
                return Err(Error::DegenerateBasis(order));
            }
            v.iter_mut().for_each(|x| *x /= norm);
            table.push(v);
        }
        Ok(Self {
            marginal,
            degree,
            table,
        })
    }

    pub fn marginal(&self) -> &Marginal {
        &self.marginal
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of support atoms.
    pub fn support_len(&self) -> usize {
        self.marginal.len()
    }

    /// Evaluations of `T_j` on every atom (`j` is 1-based).
    pub fn row(&self, j: usize) -> &[f64] {
        &self.table[j - 1]
    }

    pub fn table(&self) -> &[Vec<f64>] {
        &self.table
    }

    /// `T_j` at the atom with index `k`.
    pub fn at(&self, j: usize, k: usize) -> f64 {
        self.table[j - 1][k]
    }

    fn check_order(&self, j: usize) -> Result<()> {
        if j == 0 || j > self.degree {
            return Err(Error::OutOfRange(format!(
                "basis order {j} outside 1..={}",
                self.degree
            )));
        }
        Ok(())
    }

    /// `T_j(x)` for a support value `x`.
    pub fn eval(&self, j: usize, x: f64) -> Result<f64> {
        self.check_order(j)?;
        let k = self.marginal.index_of(x).ok_or(Error::OffSupport(x))?;
        Ok(self.table[j - 1][k])
    }

    /// Unit-domain basis `S_j(u) = T_j(Q(u))`, piecewise constant on cells.
    pub fn eval_u(&self, j: usize, u: f64) -> Result<f64> {
        self.check_order(j)?;
        let k = self.marginal.cell_index(u)?;
        Ok(self.table[j - 1][k])
    }
}

/// Default LP order for a marginal: `min(K - 1, cap)`.
pub fn max_degree_default(marginal: &Marginal, cap: usize) -> usize {
    cap.max(1).min(marginal.len().saturating_sub(1))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marginals::MarginalKind;

    fn bernoulli(p: f64) -> Marginal {
        Marginal::from_parts(vec![0.0, 1.0], vec![1.0 - p, p], MarginalKind::Tabulated).unwrap()
    }

    #[test]
    fn fair_coin_first_order() {
        let b = LpBasis::build(bernoulli(0.5), 1).unwrap();
        assert!((b.at(1, 0) + 1.0).abs() < 1e-15);
        assert!((b.at(1, 1) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bernoulli_matches_standardised_indicator() {
        for &p in &[0.1, 0.389, 0.5, 0.93] {
            let b = LpBasis::build(bernoulli(p), 1).unwrap();
            let sd = (p * (1.0 - p)).sqrt();
            assert!((b.at(1, 0) - (0.0 - p) / sd).abs() < 1e-12);
            assert!((b.at(1, 1) - (1.0 - p) / sd).abs() < 1e-12);
        }
    }

    #[test]
    fn distinct_samples_first_order_closed_form() {
        let xs: Vec<f64> = (0..9).map(|i| (i as f64).powi(3) - 4.0).collect();
        let n = xs.len() as f64;
        let b = LpBasis::build(Marginal::from_samples(&xs).unwrap(), 3).unwrap();
        for i in 0..xs.len() {
            let expect = 12f64.sqrt() * ((i as f64 + 0.5) / n - 0.5) / (1.0 - 1.0 / (n * n)).sqrt();
            assert!((b.at(1, i) - expect).abs() < 1e-13);
        }
    }

    #[test]
    fn unit_domain_lookup() {
        let b = LpBasis::build(bernoulli(0.389), 1).unwrap();
        let s = b.eval_u(1, 0.9).unwrap();
        assert!((s - ((1.0 - 0.389) / 0.389f64).sqrt()).abs() < 1e-12);
        assert_eq!(b.eval_u(1, 0.2).unwrap(), b.at(1, 0));
        assert!(b.eval_u(1, 1.0).is_err());
        assert!(b.eval_u(2, 0.5).is_err());

        let m = Marginal::from_samples(&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0]).unwrap();
        let b = LpBasis::build(m, 3).unwrap();
        for k in 0..b.support_len() {
            let (lo, hi) = b.marginal().cell_bounds(k);
            for j in 1..=3 {
                assert_eq!(b.eval_u(j, 0.5 * (lo + hi)).unwrap(), b.at(j, k));
            }
        }
    }

    #[test]
    fn order_limits() {
        let m = Marginal::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(
            LpBasis::build(m.clone(), 3),
            Err(Error::BasisOrderTooLarge { requested: 3, max: 2 })
        );
        assert!(LpBasis::build(m.clone(), 2).is_ok());
        assert!(LpBasis::build(m, 0).is_err());
    }

    #[test]
    fn default_degree() {
        assert_eq!(max_degree_default(&bernoulli(0.3), 4), 1);
        let three = Marginal::from_samples(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(max_degree_default(&three, 4), 2);
        let many: Vec<f64> = (0..157).map(f64::from).collect();
        assert_eq!(max_degree_default(&Marginal::from_samples(&many).unwrap(), 4), 4);
    }

    #[test]
    fn eval_on_support_values() {
        let m = Marginal::from_samples(&[0.5, 1.5, 2.5]).unwrap();
        let b = LpBasis::build(m, 2).unwrap();
        assert_eq!(b.eval(2, 1.5).unwrap(), b.at(2, 1));
        assert_eq!(b.eval(1, 2.0), Err(Error::OffSupport(2.0)));
    }
}
