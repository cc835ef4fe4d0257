//! Experiment configuration: one JSON file per experiment, merged over the
//! catalog defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use phid::bernstein::BernsteinSpec;
use phid::geometry::Point;
use phid::{PhidError, Result};

use crate::specs::{parse_phi, DomainSpec};

/// Knobs of the catalog checks.  Every field has a default, so a config
/// file only lists what it changes.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct Params {
    pub s_values: Vec<f64>,
    pub pairs: usize,
    pub per_stratum: usize,
    pub n_modes_refined: usize,
    pub slope_ray_points: usize,
    pub slope_ray_floor: f64,
    pub profile_ray_points: usize,
    pub profile_ray_floor: f64,
    pub profile_angles: usize,
    pub trace_widths: Vec<f64>,
    pub fv_radial: usize,
    pub fv_angular: usize,
    pub fv_grading: f64,
    pub fv_levels: usize,
    pub fv_coarse: (usize, usize),
    pub kato_samples: usize,
    pub maxprinciple_samples: usize,
    pub mc_paths: usize,
    pub mc_points: Vec<Point>,
}

impl Default for Params {
    fn default() -> Self {
        Self {
            s_values: vec![0.3, 0.5, 0.7],
            pairs: 10,
            per_stratum: 40,
            n_modes_refined: 900,
            slope_ray_points: 12,
            slope_ray_floor: 3e-3,
            profile_ray_points: 10,
            profile_ray_floor: 3e-4,
            profile_angles: 96,
            trace_widths: vec![0.2, 0.1, 0.06],
            fv_radial: 64,
            fv_angular: 128,
            fv_grading: 2.0,
            fv_levels: 3,
            fv_coarse: (32, 64),
            kato_samples: 20,
            maxprinciple_samples: 50,
            mc_paths: 100_000,
            mc_points: vec![[0.3, 0.0], [0.0, 0.0], [-0.2, 0.5]],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    #[serde(default = "default_phi")]
    pub phi: String,
    #[serde(default = "default_domain")]
    pub domain: String,
    #[serde(default = "default_modes")]
    pub n_modes: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: BTreeMap<String, f64>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cache_dir: Option<PathBuf>,
}

fn default_phi() -> String {
    "stable:0.5".into()
}

fn default_domain() -> String {
    "disk".into()
}

fn default_modes() -> usize {
    400
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(text).map_err(|e| PhidError::Invalid(format!("config: {e}")))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self) -> Result<()> {
        self.phi_spec()?;
        self.domain_spec()?;
        if self.n_modes == 0 {
            return Err(PhidError::Invalid("n_modes must be positive".into()));
        }
        Ok(())
    }

    pub fn phi_spec(&self) -> Result<BernsteinSpec> {
        parse_phi(&self.phi)
    }

    pub fn domain_spec(&self) -> Result<DomainSpec> {
        DomainSpec::parse(&self.domain)
    }

    /// Tolerance `key`, falling back to `default` when not configured.
    pub fn tol(&self, key: &str, default: f64) -> f64 {
        self.tolerances.get(key).copied().unwrap_or(default)
    }

    /// Applies `KEY=VALUE` overrides from the command line.
    pub fn override_tolerances(&mut self, pairs: &[String]) -> Result<()> {
        for p in pairs {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| PhidError::Invalid(format!("tolerance override '{p}' is not KEY=VALUE")))?;
            let v: f64 = v.parse().map_err(|_| PhidError::Invalid(format!("tolerance '{v}' is not a number")))?;
            self.tolerances.insert(k.to_string(), v);
        }
        Ok(())
    }
}
