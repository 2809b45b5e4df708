//! Mutual information, G² and smooth-G² independence tests, permutation
//! p-values and feature-importance scoring.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::comoments::comoments;
use crate::error::{Error, Result};
use crate::maxent::MaxEntCopulaModel;
use crate::pipeline::{bases_for_pairs, fit_comoments, fit_pairs, fit_table, FitConfig, FittedCopula};
use crate::table::ContingencyTable;

/// Smallest number of permutations accepted by [`mi_permutation_pvalue`].
pub const MIN_PERMUTATIONS: usize = 99;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TestMethod {
    #[serde(rename = "G2")]
    G2,
    #[serde(rename = "smoothG2")]
    SmoothG2,
    #[serde(rename = "MI-permutation")]
    MiPermutation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    /// Effective degrees of freedom (the number of permutations for
    /// [`TestMethod::MiPermutation`] is reported separately).
    pub df: usize,
    pub p_value: f64,
    pub method: TestMethod,
    pub n: usize,
    /// Number of permutation replicates, when applicable.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub permutations: Option<usize>,
}

/// Model mutual information `sum_t theta_t E_theta[s_t] - log Z`.
pub fn mutual_information(model: &MaxEntCopulaModel) -> f64 {
    if model.is_uniform() {
        return 0.0;
    }
    let lin: f64 = model
        .theta()
        .iter()
        .zip(model.expected_comoments())
        .map(|(t, e)| t * e)
        .sum();
    lin - model.log_z()
}

/// Raw plug-in mutual information of a table; empty cells contribute 0.
pub fn empirical_mi(t: &ContingencyTable) -> f64 {
    let n = t.total() as f64;
    let (rows, cols) = (t.row_totals(), t.col_totals());
    let mut s = 0.0;
    for (k, row) in t.counts().iter().enumerate() {
        for (l, &f) in row.iter().enumerate() {
            if f > 0 {
                let f = f as f64;
                s += f / n * (f * n / (rows[k] as f64 * cols[l] as f64)).ln();
            }
        }
    }
    s
}

/// Upper tail of the chi-square distribution with `df` degrees of freedom.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 || df == 0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(df as f64 / 2.0, x / 2.0)
}

fn report(statistic: f64, df: usize, method: TestMethod, n: usize) -> TestReport {
    let p_value = if df == 0 { 1.0 } else { chi_square_sf(statistic, df) };
    TestReport {
        statistic,
        df,
        p_value: p_value.clamp(0.0, 1.0),
        method,
        n,
        permutations: None,
    }
}

/// Classical likelihood-ratio test of independence, `G² = 2n MI~`, on
/// `(I-1)(J-1)` degrees of freedom.
pub fn g2_test(t: &ContingencyTable) -> TestReport {
    let n = t.total() as usize;
    let df = (t.n_rows() - 1) * (t.n_cols() - 1);
    report(2.0 * n as f64 * empirical_mi(t), df, TestMethod::G2, n)
}

/// Smoothed G² from the MaxEnt copula: `2n MI` on `|I|` degrees of freedom.
pub fn smooth_g2_test(t: &ContingencyTable, cfg: &FitConfig) -> Result<TestReport> {
    Ok(smooth_g2_fitted(&fit_table(t, cfg)?))
}

/// Smoothed G² of an existing fit, with `n` taken from its co-mean table.
pub fn smooth_g2_fitted(fit: &FittedCopula) -> TestReport {
    let n = fit.comoments.n();
    let df = fit.model.terms().len();
    let stat = if df == 0 {
        0.0
    } else {
        2.0 * n as f64 * mutual_information(&fit.model)
    };
    report(stat, df, TestMethod::SmoothG2, n)
}

/// Permutation test of independence based on the model mutual information.
///
/// Replicate `b` permutes the Y column with a ChaCha8 generator seeded by
/// `seed` on stream `b`, so results do not depend on thread scheduling.
pub fn mi_permutation_pvalue(pairs: &[(f64, f64)], cfg: &FitConfig, b: usize, seed: u64) -> Result<TestReport> {
    if b < MIN_PERMUTATIONS {
        return Err(Error::OutOfRange(format!(
            "need at least {MIN_PERMUTATIONS} permutations, got {b}"
        )));
    }
    // Permuting Y leaves both marginals, hence both bases, unchanged.
    let (bx, by) = bases_for_pairs(pairs, cfg)?;
    let observed = mutual_information(&fit_comoments(comoments(&bx, &by, pairs)?, &bx, &by, cfg)?.model);
    let xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let exceed = (0..b)
        .into_par_iter()
        .map(|rep| -> Result<usize> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(rep as u64);
            let mut perm = ys.clone();
            perm.shuffle(&mut rng);
            let shuffled: Vec<(f64, f64)> = xs.iter().copied().zip(perm).collect();
            let fit = fit_comoments(comoments(&bx, &by, &shuffled)?, &bx, &by, cfg)?;
            Ok(usize::from(mutual_information(&fit.model) >= observed))
        })
        .try_reduce(|| 0, |a, c| Ok(a + c))?;
    Ok(TestReport {
        statistic: observed,
        df: 0,
        p_value: (1 + exceed) as f64 / (b + 1) as f64,
        method: TestMethod::MiPermutation,
        n: pairs.len(),
        permutations: Some(b),
    })
}

/// Dependence of a response on one predictor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub mi: f64,
    /// Smooth-G² statistic `2n MI`.
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Scores every predictor by its MaxEnt mutual information with `y`,
/// strongest first. Constant predictors score zero.
pub fn feature_importance(columns: &[(String, Vec<f64>)], y: &[f64], cfg: &FitConfig) -> Result<Vec<FeatureScore>> {
    let mut scores = columns
        .par_iter()
        .map(|(name, xs)| -> Result<FeatureScore> {
            if xs.len() != y.len() {
                return Err(Error::DimensionMismatch(format!(
                    "predictor {name} has {} values but the response has {}",
                    xs.len(),
                    y.len()
                )));
            }
            let n = xs.len();
            if xs.iter().all(|&v| v == xs[0]) {
                log::warn!("predictor {name} is constant; scored as independent");
                return Ok(FeatureScore {
                    name: name.clone(),
                    mi: 0.0,
                    statistic: 0.0,
                    df: 0,
                    p_value: 1.0,
                });
            }
            let pairs: Vec<(f64, f64)> = xs.iter().copied().zip(y.iter().copied()).collect();
            let fit = fit_pairs(&pairs, cfg)?;
            let mi = mutual_information(&fit.model);
            let df = fit.model.terms().len();
            let r = report(
                if df == 0 { 0.0 } else { 2.0 * n as f64 * mi },
                df,
                TestMethod::SmoothG2,
                n,
            );
            Ok(FeatureScore {
                name: name.clone(),
                mi,
                statistic: r.statistic,
                df,
                p_value: r.p_value,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| b.mi.total_cmp(&a.mi));
    Ok(scores)
}
