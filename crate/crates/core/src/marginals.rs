//! One-dimensional marginal distributions on a finite ordered support.
//!
//! A [`Marginal`] is the measure against which LP bases are orthonormal. It is
//! either learned from data (empirical or tabulated counts) or obtained by
//! truncating a parametric negative binomial law to a finite support.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default upper-tail mass discarded when truncating a parametric marginal.
pub const DEFAULT_TRUNCATION_EPS: f64 = 1e-8;

/// Relative tolerance used to pool nearly identical real values into one atom.
const POOL_RTOL: f64 = 1e-12;
const SUM_TOL: f64 = 1e-12;
const MAX_TRUNCATED_SUPPORT: usize = 10_000_000;

/// Mean/dispersion parameterisation of the negative binomial law, with
/// variance `mu + mu^2 / phi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NegBinomialParams {
    pub mu: f64,
    pub phi: f64,
}

impl NegBinomialParams {
    pub fn new(mu: f64, phi: f64) -> Result<Self> {
        if !(mu > 0.0 && mu.is_finite() && phi > 0.0 && phi.is_finite()) {
            return Err(Error::OutOfRange(format!(
                "negative binomial needs mu > 0 and phi > 0, got ({mu}, {phi})"
            )));
        }
        Ok(Self { mu, phi })
    }

    pub fn variance(&self) -> f64 {
        self.mu + self.mu * self.mu / self.phi
    }

    pub fn log_pmf(&self, k: u64) -> f64 {
        let (mu, phi) = (self.mu, self.phi);
        let mut acc = 0.0;
        for i in 0..k {
            acc += (phi + i as f64).ln() - ((i + 1) as f64).ln();
        }
        acc + k as f64 * (mu / (mu + phi)).ln() + phi * (phi / (mu + phi)).ln()
    }

    pub fn pmf(&self, k: u64) -> f64 {
        self.log_pmf(k).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case")]
pub enum ParametricFamily {
    NegBinomial(NegBinomialParams),
}

/// Where a marginal's masses came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalKind {
    /// Relative frequencies of `n` raw observations.
    Empirical { n: usize },
    /// Normalised category counts, e.g. the margin of a contingency table.
    Tabulated,
    /// A parametric law truncated to a finite support.
    Parametric {
        family: ParametricFamily,
        truncation_eps: f64,
    },
}

/// A discrete probability measure on strictly increasing atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MarginalRepr", into = "MarginalRepr")]
pub struct Marginal {
    atoms: Vec<f64>,
    probs: Vec<f64>,
    cdf: Vec<f64>,
    kind: MarginalKind,
}

#[derive(Serialize, Deserialize)]
struct MarginalRepr {
    #[serde(flatten)]
    kind: MarginalKind,
    atoms: Vec<f64>,
    probs: Vec<f64>,
}

impl TryFrom<MarginalRepr> for Marginal {
    type Error = Error;

    fn try_from(r: MarginalRepr) -> Result<Self> {
        Marginal::from_parts(r.atoms, r.probs, r.kind)
    }
}

impl From<Marginal> for MarginalRepr {
    fn from(m: Marginal) -> Self {
        MarginalRepr {
            kind: m.kind,
            atoms: m.atoms,
            probs: m.probs,
        }
    }
}

fn same_value(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= POOL_RTOL * a.abs().max(b.abs())
}

impl Marginal {
    /// Validates and assembles a marginal from explicit atoms and masses.
    pub fn from_parts(atoms: Vec<f64>, probs: Vec<f64>, kind: MarginalKind) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::EmptySample);
        }
        if atoms.len() != probs.len() {
            return Err(Error::InvalidMarginal(format!(
                "{} atoms but {} probabilities",
                atoms.len(),
                probs.len()
            )));
        }
        if atoms.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidMarginal("non-finite atom".into()));
        }
        if atoms.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidMarginal("atoms must be strictly increasing".into()));
        }
        if probs.iter().any(|p| !(*p > 0.0 && p.is_finite())) {
            return Err(Error::InvalidMarginal("probabilities must be strictly positive".into()));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::InvalidMarginal(format!("probabilities sum to {total}")));
        }
        let mut cdf = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for p in &probs {
            acc += p;
            cdf.push(acc);
        }
        Ok(Self {
            atoms,
            probs,
            cdf,
            kind,
        })
    }

    /// Empirical measure of a sample. Ties (exact, or within a 1e-12 relative
    /// tolerance) are pooled into a single atom.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptySample);
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidMarginal("non-finite sample value".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let mut atoms: Vec<f64> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        for v in sorted {
            match atoms.last() {
                Some(&a) if same_value(a, v) => *counts.last_mut().unwrap() += 1,
                _ => {
                    atoms.push(v);
                    counts.push(1);
                }
            }
        }
        let probs = counts.iter().map(|&c| c as f64 / n as f64).collect();
        Self::from_parts(atoms, probs, MarginalKind::Empirical { n })
    }

    /// Tabulated measure from category values and counts. Categories with a
    /// zero count carry no mass and are dropped.
    pub fn from_counts(values: &[f64], counts: &[u64]) -> Result<Self> {
        if values.len() != counts.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} values but {} counts",
                values.len(),
                counts.len()
            )));
        }
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return Err(Error::EmptySample);
        }
        let (atoms, probs) = values
            .iter()
            .zip(counts)
            .filter(|(_, &c)| c > 0)
            .map(|(&v, &c)| (v, c as f64 / total as f64))
            .unzip();
        Self::from_parts(atoms, probs, MarginalKind::Tabulated)
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Right-closed cdf evaluated at each atom.
    pub fn cdf(&self) -> &[f64] {
        &self.cdf
    }

    pub fn kind(&self) -> &MarginalKind {
        &self.kind
    }

    /// Number of support atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.probs).map(|(a, p)| a * p).sum()
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.atoms
            .iter()
            .zip(&self.probs)
            .map(|(a, p)| p * (a - m) * (a - m))
            .sum()
    }

    /// Position of `x` among the atoms, using the pooling tolerance.
    pub fn index_of(&self, x: f64) -> Option<usize> {
        let i = self.atoms.partition_point(|&a| a < x);
        [i.checked_sub(1), Some(i)]
            .into_iter()
            .flatten()
            .find(|&k| k < self.atoms.len() && same_value(self.atoms[k], x))
    }

    /// Atom closest to `x`; ties go to the lower atom.
    pub fn nearest_index(&self, x: f64) -> usize {
        let i = self.atoms.partition_point(|&a| a < x);
        if i == 0 {
            return 0;
        }
        if i == self.atoms.len() {
            return i - 1;
        }
        if (x - self.atoms[i - 1]) <= (self.atoms[i] - x) {
            i - 1
        } else {
            i
        }
    }

    /// Index of the probability cell containing `u`, i.e. the atom `Q(u)`.
    pub fn cell_index(&self, u: f64) -> Result<usize> {
        if !(u > 0.0 && u < 1.0) {
            return Err(Error::OutOfRange(format!("u = {u} is outside (0, 1)")));
        }
        let k = self.cdf.partition_point(|&c| c < u);
        Ok(k.min(self.atoms.len() - 1))
    }

    /// Lower and upper edge of the k-th probability cell in the unit interval.
    pub fn cell_bounds(&self, k: usize) -> (f64, f64) {
        let lo = if k == 0 { 0.0 } else { self.cdf[k - 1] };
        let hi = if k + 1 == self.len() { 1.0 } else { self.cdf[k] };
        (lo, hi)
    }

    /// Mid-distribution transform `F(x) - p(x)/2` at every atom.
    pub fn mid_values(&self) -> Vec<f64> {
        let mut prev = 0.0;
        self.probs
            .iter()
            .map(|&p| {
                let mid = prev + 0.5 * p;
                prev += p;
                mid
            })
            .collect()
    }

    /// Mid-distribution transform at the support value `x`.
    pub fn mid_distribution(&self, x: f64) -> Result<f64> {
        let k = self.index_of(x).ok_or(Error::OffSupport(x))?;
        Ok(self.mid_values()[k])
    }
}

/// Negative binomial law truncated to `0..=K`, where `K` is the smallest
/// integer whose upper tail mass falls below `eps`. Masses are renormalised.
pub fn truncate_parametric(params: NegBinomialParams, eps: f64) -> Result<Marginal> {
    truncate_parametric_covering(params, eps, 0)
}

/// As [`truncate_parametric`], but the support always reaches `min_atom`, so
/// every observed count stays on the support.
pub fn truncate_parametric_covering(params: NegBinomialParams, eps: f64, min_atom: u64) -> Result<Marginal> {
    if !(eps > 0.0 && eps < 1e-4) {
        return Err(Error::OutOfRange(format!(
            "truncation eps must lie in (0, 1e-4), got {eps}"
        )));
    }
    let NegBinomialParams { mu, phi } = params;
    let ratio = mu / (mu + phi);
    let mut p = (phi * (phi / (mu + phi)).ln()).exp();
    let mut probs = Vec::new();
    let mut cum = 0.0;
    let mut k = 0usize;
    loop {
        if p > 0.0 {
            probs.push(p);
        } else {
            // Mass underflowed before the tail did; nothing left to add.
            if (k as u64) < min_atom {
                return Err(Error::OutOfRange(format!(
                    "negative binomial mass underflows before reaching {min_atom}"
                )));
            }
            break;
        }
        cum += p;
        if 1.0 - cum < eps && k as u64 >= min_atom {
            break;
        }
        p *= (k as f64 + phi) / (k as f64 + 1.0) * ratio;
        k += 1;
        if k > MAX_TRUNCATED_SUPPORT {
            return Err(Error::OutOfRange(format!(
                "negative binomial support exceeds {MAX_TRUNCATED_SUPPORT} atoms"
            )));
        }
    }
    let total: f64 = probs.iter().sum();
    probs.iter_mut().for_each(|q| *q /= total);
    // Push the rounding residue onto the largest mass so the plain sum is 1.
    let residue = 1.0 - probs.iter().sum::<f64>();
    if let Some(big) = probs.iter_mut().max_by(|a, b| a.total_cmp(b)) {
        *big += residue;
    }
    let atoms = (0..probs.len()).map(|i| i as f64).collect();
    Marginal::from_parts(
        atoms,
        probs,
        MarginalKind::Parametric {
            family: ParametricFamily::NegBinomial(params),
            truncation_eps: eps,
        },
    )
}

/// Sufficient statistics of an integer sample for the profile likelihood.
struct CountProfile {
    n: f64,
    mean: f64,
    counts: BTreeMap<u64, u64>,
}

impl CountProfile {
    /// Profile log-likelihood in phi (mu fixed at the sample mean), up to a
    /// constant that does not depend on phi.
    fn loglik(&self, phi: f64) -> f64 {
        let mu = self.mean;
        let mut acc = 0.0;
        let mut partial = 0.0;
        let mut next = 0u64;
        for (&y, &c) in &self.counts {
            while next < y {
                partial += (phi + next as f64).ln();
                next += 1;
            }
            acc += c as f64 * partial;
        }
        acc + self.n * self.mean * (mu / (mu + phi)).ln() + self.n * phi * (phi / (mu + phi)).ln()
    }

    /// First and second derivative of the profile log-likelihood.
    fn score(&self, phi: f64) -> (f64, f64) {
        let mu = self.mean;
        let (mut s1, mut s2) = (0.0, 0.0);
        let (mut p1, mut p2) = (0.0, 0.0);
        let mut next = 0u64;
        for (&y, &c) in &self.counts {
            while next < y {
                let r = 1.0 / (phi + next as f64);
                p1 += r;
                p2 += r * r;
                next += 1;
            }
            s1 += c as f64 * p1;
            s2 += c as f64 * p2;
        }
        let d1 = s1 + self.n * (phi / (mu + phi)).ln();
        let d2 = -s2 + self.n * (1.0 / phi - 1.0 / (mu + phi));
        (d1, d2)
    }
}

const PHI_LO: f64 = 1e-3;
const PHI_HI: f64 = 1e6;

/// Maximum-likelihood negative binomial fit. The mean estimate is the sample
/// mean; phi maximises the profile likelihood on a log-scale bracket
/// `[1e-3, 1e6]` by golden-section search followed by Newton polishing.
pub fn fit_negbin(values: &[u64]) -> Result<NegBinomialParams> {
    if values.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_insert(0u64) += 1;
    }
    if counts.len() < 2 {
        return Err(Error::InvalidMarginal(
            "negative binomial fit needs at least two distinct values".into(),
        ));
    }
    let n = values.len() as f64;
    let mean = values.iter().map(|&v| v as f64).sum::<f64>() / n;
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / n;
    if var <= mean {
        return Err(Error::NegBinDiverges);
    }
    let profile = CountProfile { n, mean, counts };

    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (PHI_LO.ln(), PHI_HI.ln());
    let mut c = b - golden * (b - a);
    let mut d = a + golden * (b - a);
    let mut fc = profile.loglik(c.exp());
    let mut fd = profile.loglik(d.exp());
    while b - a > 1e-10 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - golden * (b - a);
            fc = profile.loglik(c.exp());
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + golden * (b - a);
            fd = profile.loglik(d.exp());
        }
    }
    let mut phi = (0.5 * (a + b)).exp();
    if phi >= PHI_HI * (1.0 - 1e-6) {
        return Err(Error::NegBinDiverges);
    }
    for _ in 0..20 {
        let (g, h) = profile.score(phi);
        if !(h < 0.0) {
            break;
        }
        let next = phi - g / h;
        if !(next > PHI_LO && next < PHI_HI) {
            break;
        }
        let done = (next - phi).abs() <= 1e-14 * phi;
        phi = next;
        if done {
            break;
        }
    }
    NegBinomialParams::new(mean, phi)
}
