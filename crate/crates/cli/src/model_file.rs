//! Versioned JSON persistence of fitted models.

use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lpcop_core::{FitConfig, FitReport, LpBasis, Marginal, MaxEntCopulaModel};
use serde::{Deserialize, Serialize};

pub const FORMAT: &str = "lpcop-model/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub input: String,
    pub input_sha256: String,
    pub input_format: String,
    pub config: FitConfig,
    pub seed: Option<u64>,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariableFile {
    pub name: String,
    pub degree: usize,
    pub marginal: Marginal,
}

/// On-disk form of a [`MaxEntCopulaModel`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub x: VariableFile,
    pub y: VariableFile,
    pub terms: Vec<[usize; 2]>,
    pub theta: Vec<f64>,
    pub log_z: f64,
    pub fit: FitReport,
    pub provenance: Provenance,
}

impl ModelFile {
    pub fn new(model: &MaxEntCopulaModel, names: [String; 2], provenance: Provenance) -> Self {
        let var = |b: &LpBasis, name: String| VariableFile {
            name,
            degree: b.degree(),
            marginal: b.marginal().clone(),
        };
        let [nx, ny] = names;
        Self {
            format: FORMAT.to_string(),
            x: var(model.x_basis(), nx),
            y: var(model.y_basis(), ny),
            terms: model.terms().iter().map(|&(j, k)| [j, k]).collect(),
            theta: model.theta().to_vec(),
            log_z: model.log_z(),
            fit: model.report().clone(),
            provenance,
        }
    }

    /// Rebuilds the model; the stored `log Z` is kept so densities reproduce exactly.
    pub fn to_model(&self) -> Result<MaxEntCopulaModel> {
        if self.format != FORMAT {
            bail!("unsupported model format {:?}, expected {FORMAT:?}", self.format);
        }
        let bx = LpBasis::build(self.x.marginal.clone(), self.x.degree)?;
        let by = LpBasis::build(self.y.marginal.clone(), self.y.degree)?;
        let terms = self.terms.iter().map(|t| (t[0], t[1])).collect();
        Ok(MaxEntCopulaModel::from_saved(
            bx,
            by,
            terms,
            self.theta.clone(),
            self.log_z,
            self.fit.clone(),
        )?)
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("{}: not a valid model file", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use lpcop_core::{datasets, fit_table};

    fn provenance() -> Provenance {
        Provenance {
            input: "hellman.csv".into(),
            input_sha256: "00".into(),
            input_format: "table".into(),
            config: FitConfig::default(),
            seed: None,
            version: "test".into(),
        }
    }

    #[test]
    fn round_trip_is_bit_identical() {
        let fit = fit_table(&datasets::hellman(), &FitConfig::default()).unwrap();
        let file = ModelFile::new(&fit.model, ["X".into(), "Y".into()], provenance());
        let back: ModelFile = serde_json::from_str(&file.to_json().unwrap()).unwrap();
        assert_eq!(back, file);
        let m = back.to_model().unwrap();
        for (a, b) in m
            .density_grid()
            .iter()
            .flatten()
            .zip(fit.model.density_grid().iter().flatten())
        {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn keys_keep_declaration_order() {
        let fit = fit_table(&datasets::hellman(), &FitConfig::default()).unwrap();
        let json = ModelFile::new(&fit.model, ["X".into(), "Y".into()], provenance())
            .to_json()
            .unwrap();
        let pos = |k: &str| json.find(&format!("\"{k}\"")).unwrap();
        assert!(pos("format") < pos("x") && pos("x") < pos("theta") && pos("theta") < pos("provenance"));
    }

    #[test]
    fn tampered_log_z_is_rejected() {
        let fit = fit_table(&datasets::hellman(), &FitConfig::default()).unwrap();
        let mut file = ModelFile::new(&fit.model, ["X".into(), "Y".into()], provenance());
        file.log_z += 1e-3;
        assert!(file.to_model().is_err());
        file.log_z -= 1e-3;
        file.format = "lpcop-model/0".into();
        assert!(file.to_model().is_err());
    }
}
