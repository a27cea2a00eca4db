use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::acquisition::AcquisitionSpec;
use crate::direct::OptBudget;
use crate::error::{Error, Result};
use crate::gp::HyperBounds;
use crate::objectives::ObjectiveSpec;
use crate::weights::WeightDistribution;

pub const DEFAULT_N_INIT: usize = 10;
pub const DEFAULT_REFIT_EVERY: usize = 10;

fn default_n_init() -> usize {
    DEFAULT_N_INIT
}

fn default_refit_every() -> usize {
    DEFAULT_REFIT_EVERY
}

/// Everything needed to reproduce one run.
///
/// `output` is where the log goes; it is not part of the config hash, so a log can be
/// moved or resumed from another directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub objective: ObjectiveSpec,
    /// Loop evaluations after the initial design.
    pub budget: usize,
    #[serde(default = "default_n_init")]
    pub n_init: usize,
    pub acquisition: AcquisitionSpec,
    pub weights: WeightDistribution,
    pub seed: u64,
    #[serde(default = "default_refit_every")]
    pub refit_every: usize,
    #[serde(default)]
    pub acq_opt: OptBudget,
    #[serde(default)]
    pub hyper_bounds: HyperBounds,
    #[serde(default, skip_serializing)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn num_objectives(&self) -> usize {
        self.objective.num_objectives()
    }

    pub fn dim(&self) -> usize {
        self.objective.dim()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.num_objectives();
        if k == 0 || self.dim() == 0 {
            return Err(Error::Config(
                "objective needs at least one output and one input".into(),
            ));
        }
        if self.refit_every == 0 {
            return Err(Error::Config("refit_every must be at least 1".into()));
        }
        if let Some(noise) = &self.objective.noise_std {
            if noise.len() != k || noise.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
                return Err(Error::Config(format!(
                    "noise_std must hold {k} nonnegative values, got {noise:?}"
                )));
            }
        }
        self.acquisition.validate(k)?;
        self.weights.validate(k)?;
        self.acq_opt.validate()?;
        self.hyper_bounds.validate()?;
        Ok(())
    }

    /// Canonical JSON form, as stored in the log header.
    pub fn canonical_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    /// Hex SHA-256 of the canonical JSON.
    pub fn hash(&self) -> Result<String> {
        Ok(hex::encode(Sha256::digest(
            self.canonical_json()?.as_bytes(),
        )))
    }

    /// The hash with the seed zeroed: runs that differ only in seed share it.
    pub fn fingerprint(&self) -> Result<String> {
        let mut c = self.clone();
        c.seed = 0;
        c.hash()
    }
}
