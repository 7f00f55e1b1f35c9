//! Experiment configuration files.

use anyhow::{bail, Context, Result};
use floatbody::admissible::{logconcave_params, AdmissibleParams};
use floatbody::geometry::NetMode;
use floatbody::marginal::SampleDistributionSpec;
use floatbody::mechanism::SampleSizeConstants;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub distribution: SampleDistributionSpec,
    /// Rows to generate when no data file is given.
    pub n: usize,
    #[serde(default = "default_q")]
    pub q: f64,
    #[serde(default = "one")]
    pub epsilon: f64,
    #[serde(default = "tenth")]
    pub alpha: f64,
    #[serde(default = "tenth")]
    pub beta: f64,
    pub net: NetMode,
    #[serde(default)]
    pub constants: Constants,
    /// Overrides the log-concave defaults.
    #[serde(default)]
    pub params: Option<AdmissibleParams>,
    /// Headerless CSV of rows; generated from `distribution` when absent.
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Point to project for the `project` command.
    #[serde(default)]
    pub point: Option<Vec<f64>>,
    #[serde(default = "default_trials")]
    pub trials: usize,
    #[serde(default = "default_steiner")]
    pub steiner_directions: usize,
    #[serde(default)]
    pub langevin: LangevinSection,
    #[serde(default)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Constants {
    #[serde(default = "default_cw")]
    pub c_w: f64,
    #[serde(default = "default_ceta")]
    pub c_eta: f64,
    #[serde(default = "default_ck")]
    pub c_k: f64,
    #[serde(default)]
    pub sample_size: SampleSizeConstants,
}

impl Default for Constants {
    fn default() -> Self {
        Constants { c_w: default_cw(), c_eta: default_ceta(), c_k: default_ck(), sample_size: SampleSizeConstants::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinSection {
    /// Step count; calibrated from `alpha` when absent.
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default = "default_chains")]
    pub chains: usize,
    /// Rows per disjoint batch; the strict sample-size plan is used when absent.
    #[serde(default)]
    pub rows_per_batch: Option<usize>,
}

impl Default for LangevinSection {
    fn default() -> Self {
        LangevinSection { k: None, eta: None, chains: default_chains(), rows_per_batch: None }
    }
}

fn default_q() -> f64 {
    0.75
}
fn one() -> f64 {
    1.0
}
fn tenth() -> f64 {
    0.1
}
fn default_trials() -> usize {
    20
}
fn default_steiner() -> usize {
    2048
}
fn default_cw() -> f64 {
    floatbody::typical::DEFAULT_C_W
}
fn default_ceta() -> f64 {
    floatbody::langevin::DEFAULT_C_ETA
}
fn default_ck() -> f64 {
    floatbody::langevin::DEFAULT_C_K
}
fn default_chains() -> usize {
    16
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| {
            anyhow::anyhow!("{}: line {} column {}: {e}", path.display(), e.line(), e.column())
        })?;
        let mut cfg = cfg;
        if let (Some(data), Some(dir)) = (&cfg.data, path.parent()) {
            if data.is_relative() {
                cfg.data = Some(dir.join(data));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.distribution.dim == 0 {
            bail!("distribution.dim must be positive");
        }
        if !(self.q > 0.5 && self.q < 1.0) {
            bail!("q must lie in (1/2, 1), got {}", self.q);
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            bail!("epsilon must be positive and finite");
        }
        if !(self.alpha > 0.0) {
            bail!("alpha must be positive");
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            bail!("beta must lie in (0, 1)");
        }
        if self.trials == 0 || self.steiner_directions == 0 || self.langevin.chains == 0 {
            bail!("trials, steiner_directions and langevin.chains must be positive");
        }
        if let Some(p) = &self.params {
            if p.dim() != self.distribution.dim {
                bail!("params.center has dimension {}, distribution has {}", p.dim(), self.distribution.dim);
            }
            p.validate().context("params")?;
        }
        if let Some(x) = &self.point {
            if x.len() != self.distribution.dim {
                bail!("point has dimension {}, distribution has {}", x.len(), self.distribution.dim);
            }
        }
        Ok(())
    }

    pub fn params(&self, n: usize) -> Result<AdmissibleParams> {
        match &self.params {
            Some(p) => Ok(p.clone()),
            None => Ok(logconcave_params(self.q, self.distribution.dim, n)?),
        }
    }

    /// FNV-1a over the canonical JSON encoding.
    pub fn digest(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serialises");
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100_0000_01b3);
        }
        format!("{h:016x}")
    }
}
