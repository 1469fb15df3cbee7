//! Run configuration: one strict JSON document, overridden by flags.

use coulomb_qpt::ep::{CensusOptions, Region};
use coulomb_qpt::scaling::ScanPolicy;
use coulomb_qpt::spectral::{linspace, Method, RefinePolicy};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    Ibm { boson_number: u32 },
    Generic { h0: PathBuf, v: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub start: f64,
    pub end: f64,
    pub points: usize,
}

impl GridConfig {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.end, self.points)
    }
}

impl std::str::FromStr for GridConfig {
    type Err = String;

    /// `start:end:points`
    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid must be start:end:points, got {s:?}"));
        }
        let f = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
        Ok(Self {
            start: f(parts[0])?,
            end: f(parts[1])?,
            points: parts[2].trim().parse().map_err(|e| format!("{:?}: {e}", parts[2]))?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QStudyConfig {
    #[serde(rename = "N_list")]
    pub n_list: Vec<u32>,
    pub x: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig2Config {
    #[serde(rename = "N")]
    pub boson_number: Option<u32>,
    pub x_targets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fig3Config {
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<u32>>,
    pub x_targets: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ApproachConfig {
    #[serde(rename = "N_list")]
    pub n_list: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScalingConfig {
    pub fig2: Option<Fig2Config>,
    pub fig3: Option<Fig3Config>,
    pub ep_approach: Option<ApproachConfig>,
    pub scan: Option<ScanPolicy>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LineModelConfig {
    pub p_list: Option<Vec<f64>>,
    pub mu_max: Option<f64>,
    /// Charge distance for the single-charge consistency file.
    pub single_charge_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifyConfig {
    pub random_families: Option<usize>,
    pub census_families: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    pub out: Option<PathBuf>,
    pub threads: Option<usize>,
    pub seed: Option<u64>,
    pub grid: Option<GridConfig>,
    pub levels: Option<Vec<usize>>,
    pub x_targets: Option<Vec<f64>>,
    pub method: Option<Method>,
    pub refine: Option<RefinePolicy>,
    pub q_study: Option<QStudyConfig>,
    pub region: Option<Region>,
    pub census: Option<CensusOptions>,
    pub factorization_levels: Option<Vec<usize>>,
    pub scaling: Option<ScalingConfig>,
    pub linemodel: Option<LineModelConfig>,
    pub verify: Option<VerifyConfig>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| format!("{}: {e}", path.display()))
    }

    /// Tolerances and grids must be positive and well formed.
    pub fn validate(&self) -> Result<(), String> {
        if let Some(g) = &self.grid {
            if g.points < 3 || !(g.end > g.start) {
                return Err(format!("grid needs start < end and at least 3 points, got {g:?}"));
            }
        }
        if self.threads == Some(0) {
            return Err("threads must be at least 1".into());
        }
        let e = |r: coulomb_qpt::Result<()>| r.map_err(|e| e.to_string());
        if let Some(r) = &self.refine {
            e(r.validate())?;
        }
        if let Some(r) = &self.region {
            e(r.validate())?;
        }
        if let Some(c) = &self.census {
            e(c.validate())?;
        }
        if let Some(s) = self.scaling.as_ref().and_then(|s| s.scan.as_ref()) {
            e(s.validate())?;
        }
        if let Some(m) = self.linemodel.as_ref().and_then(|l| l.mu_max) {
            if !(m > 0.0) {
                return Err(format!("mu_max must be positive, got {m}"));
            }
        }
        Ok(())
    }
}
