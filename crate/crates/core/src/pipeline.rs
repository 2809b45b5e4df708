//! End-to-end fitting: marginals, bases, co-means, selection and the
//! maximum-entropy solve, driven by one [`FitConfig`].

use serde::{Deserialize, Serialize};

use crate::comoments::{comoments, comoments_table, select_with, CoMomentTable, Penalty, SelectionResult};
use crate::error::{Error, Result};
use crate::lp_basis::{max_degree_default, LpBasis, DEFAULT_DEGREE_CAP};
use crate::marginals::{fit_negbin, truncate_parametric_covering, Marginal, DEFAULT_TRUNCATION_EPS};
use crate::maxent::{fit_with, FitOptions, MaxEntCopulaModel};
use crate::table::ContingencyTable;

/// How marginal measures (and hence LP bases) are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum MarginalMode {
    /// Empirical LP bases from the observed data.
    Empirical,
    /// Negative binomial MLE per variable, truncated at `eps` tail mass.
    NegBin { eps: f64 },
}

impl MarginalMode {
    pub fn negbin() -> Self {
        MarginalMode::NegBin {
            eps: DEFAULT_TRUNCATION_EPS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub penalty: Penalty,
    /// Cap on the LP order of each variable.
    pub max_order: usize,
    pub marginals: MarginalMode,
    pub solver: FitOptions,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            penalty: Penalty::Aic,
            max_order: DEFAULT_DEGREE_CAP,
            marginals: MarginalMode::Empirical,
            solver: FitOptions::default(),
        }
    }
}

/// A fitted copula together with the statistics it was fitted from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FittedCopula {
    pub model: MaxEntCopulaModel,
    pub comoments: CoMomentTable,
    pub selection: SelectionResult,
}

fn as_counts(values: &[f64]) -> Result<Vec<u64>> {
    values
        .iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 && v < u64::MAX as f64 {
                Ok(v as u64)
            } else {
                Err(Error::InvalidMarginal(format!(
                    "negative binomial marginal needs non-negative integers, got {v}"
                )))
            }
        })
        .collect()
}

fn parametric_marginal(sample: &[u64], eps: f64) -> Result<Marginal> {
    let params = fit_negbin(sample)?;
    let top = sample.iter().copied().max().unwrap_or(0);
    truncate_parametric_covering(params, eps, top)
}

fn basis_for(marginal: Marginal, cap: usize) -> Result<LpBasis> {
    let degree = max_degree_default(&marginal, cap);
    if degree == 0 {
        return Err(Error::InvalidMarginal("variable is constant".into()));
    }
    LpBasis::build(marginal, degree)
}

/// LP bases for both variables of a paired sample.
pub fn bases_for_pairs(pairs: &[(f64, f64)], cfg: &FitConfig) -> Result<(LpBasis, LpBasis)> {
    if pairs.is_empty() {
        return Err(Error::EmptySample);
    }
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let (mx, my) = match cfg.marginals {
        MarginalMode::Empirical => (Marginal::from_samples(&xs)?, Marginal::from_samples(&ys)?),
        MarginalMode::NegBin { eps } => (
            parametric_marginal(&as_counts(&xs)?, eps)?,
            parametric_marginal(&as_counts(&ys)?, eps)?,
        ),
    };
    Ok((basis_for(mx, cfg.max_order)?, basis_for(my, cfg.max_order)?))
}

/// LP bases for the row and column variables of a table.
pub fn bases_for_table(table: &ContingencyTable, cfg: &FitConfig) -> Result<(LpBasis, LpBasis)> {
    let (mx, my) = match cfg.marginals {
        MarginalMode::Empirical => (table.row_marginal()?, table.col_marginal()?),
        MarginalMode::NegBin { eps } => {
            let (xs, ys) = table.integer_margins()?;
            (parametric_marginal(&xs, eps)?, parametric_marginal(&ys, eps)?)
        }
    };
    Ok((basis_for(mx, cfg.max_order)?, basis_for(my, cfg.max_order)?))
}

/// Selection and fit for co-means computed on the given bases.
pub fn fit_comoments(t: CoMomentTable, bx: &LpBasis, by: &LpBasis, cfg: &FitConfig) -> Result<FittedCopula> {
    let selection = select_with(&t, cfg.penalty);
    let model = fit_with(&t, &selection, bx, by, cfg.solver)?;
    Ok(FittedCopula {
        model,
        comoments: t,
        selection,
    })
}

/// Fits a copula to raw paired observations.
pub fn fit_pairs(pairs: &[(f64, f64)], cfg: &FitConfig) -> Result<FittedCopula> {
    let (bx, by) = bases_for_pairs(pairs, cfg)?;
    let t = comoments(&bx, &by, pairs)?;
    fit_comoments(t, &bx, &by, cfg)
}

/// Fits a copula to a contingency table.
pub fn fit_table(table: &ContingencyTable, cfg: &FitConfig) -> Result<FittedCopula> {
    let (bx, by) = bases_for_table(table, cfg)?;
    let t = comoments_table(&bx, &by, table)?;
    fit_comoments(t, &bx, &by, cfg)
}
