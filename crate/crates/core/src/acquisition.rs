//! Scalarized Thompson-sampling and UCB acquisitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{PosteriorSummary, SpectralSample};
use crate::scalarize::{linear_unchecked, tchebychev_unchecked, ReferencePoint, Scalarization};

pub const DEFAULT_BETA_COEFFICIENT: f64 = 0.125;
pub const DEFAULT_NUM_FEATURES: usize = 512;

/// `beta_t = c * ln(2t + 1)`, `t` counted from 1 over post-initialization steps.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BetaSchedule {
    pub coefficient: f64,
}

impl Default for BetaSchedule {
    fn default() -> Self {
        BetaSchedule {
            coefficient: DEFAULT_BETA_COEFFICIENT,
        }
    }
}

impl BetaSchedule {
    pub fn value(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(Error::Contract(
                "beta schedule is indexed from t = 1".into(),
            ));
        }
        Ok(self.coefficient * (2.0 * t as f64 + 1.0).ln())
    }
}

pub fn beta_value(schedule: &BetaSchedule, t: usize) -> Result<f64> {
    schedule.value(t)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Ts,
    Ucb,
    /// Uniform random search baseline; ignores the surrogate.
    Random,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Ts => "ts",
            Method::Ucb => "ucb",
            Method::Random => "random",
        }
    }
}

fn default_num_features() -> usize {
    DEFAULT_NUM_FEATURES
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcquisitionSpec {
    pub method: Method,
    pub scalarization: Scalarization,
    #[serde(default, rename = "beta_coefficient")]
    pub beta: BetaSchedule,
    /// Tchebychev anchor in raw objective units. When absent the running minimum of the
    /// observations is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferencePoint>,
    /// Random Fourier features per Thompson-sampling draw.
    #[serde(default = "default_num_features")]
    pub num_features: usize,
}

impl AcquisitionSpec {
    pub fn new(method: Method, scalarization: Scalarization) -> Self {
        AcquisitionSpec {
            method,
            scalarization,
            beta: BetaSchedule::default(),
            reference: None,
            num_features: DEFAULT_NUM_FEATURES,
        }
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if !(self.beta.coefficient.is_finite() && self.beta.coefficient > 0.0) {
            return Err(Error::Config(format!(
                "beta coefficient must be positive, got {}",
                self.beta.coefficient
            )));
        }
        if self.num_features == 0 {
            return Err(Error::Config("num_features must be at least 1".into()));
        }
        if let Some(z) = &self.reference {
            z.validate()?;
            if z.0.len() != k {
                return Err(Error::Config(format!(
                    "reference point has {} entries, problem has {k} objectives",
                    z.0.len()
                )));
            }
        }
        Ok(())
    }
}

/// `sum_k l_k mu_k + sqrt(beta) * sqrt(sum_k l_k^2 sigma_k^2)`
pub fn ucb_linear(lambda: &[f64], posteriors: &[PosteriorSummary], beta: f64) -> f64 {
    debug_assert_eq!(lambda.len(), posteriors.len());
    let mean: f64 = lambda.iter().zip(posteriors).map(|(l, p)| l * p.mean).sum();
    let var: f64 = lambda
        .iter()
        .zip(posteriors)
        .map(|(l, p)| l * l * p.std * p.std)
        .sum();
    mean + beta.sqrt() * var.sqrt()
}

/// `min_k l_k (mu_k + sqrt(beta) sigma_k - z_k)`
pub fn ucb_tchebychev(
    lambda: &[f64],
    posteriors: &[PosteriorSummary],
    beta: f64,
    z: &[f64],
) -> f64 {
    debug_assert_eq!(lambda.len(), posteriors.len());
    let root = beta.sqrt();
    lambda
        .iter()
        .zip(posteriors)
        .zip(z)
        .map(|((l, p), z)| l * (p.mean + root * p.std - z))
        .fold(f64::INFINITY, f64::min)
}

/// Scalarization of one function draw per objective at `x`.
pub fn ts_acquisition(
    lambda: &[f64],
    samples: &[SpectralSample],
    kind: Scalarization,
    z: &[f64],
    x: &[f64],
) -> f64 {
    let values: Vec<f64> = samples.iter().map(|s| s.eval(x)).collect();
    match kind {
        Scalarization::Linear => linear_unchecked(lambda, &values),
        Scalarization::Tchebychev => tchebychev_unchecked(lambda, &values, z),
    }
}
