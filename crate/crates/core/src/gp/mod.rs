//! Squared-exponential Gaussian-process regression, one model per objective.
//!
//! Targets are centered on their median before inference and the offset is
//! added back on every query. The Gram matrix is factorized as
//! `K + (noise_var + jitter) I`, with jitter escalating from `1e-6 * scale`
//! to `1e-3 * scale` before giving up.

mod hyper;
mod linalg;
mod spectral;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub(crate) use linalg::Cholesky;

pub use hyper::{fit_hyperparams, FitOutcome, HyperBounds};
pub use spectral::{draw_prior_sample, draw_spectral_sample, SpectralSample};

/// Floor applied to the posterior variance before taking the square root.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Hyperparameters of the squared-exponential kernel
/// `s * exp(-sum_i (x_i - x'_i)^2 / (2 bw_i^2))` plus observation noise.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    pub scale: f64,
    pub bandwidths: Vec<f64>,
    pub noise_var: f64,
}

impl KernelParams {
    pub fn new(scale: f64, bandwidths: Vec<f64>, noise_var: f64) -> Result<Self> {
        let params = KernelParams {
            scale,
            bandwidths,
            noise_var,
        };
        params.validate()?;
        Ok(params)
    }

    pub fn isotropic(dim: usize, scale: f64, bandwidth: f64, noise_var: f64) -> Result<Self> {
        Self::new(scale, vec![bandwidth; dim], noise_var)
    }

    pub fn dim(&self) -> usize {
        self.bandwidths.len()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.scale.is_finite() && self.scale > 0.0) {
            return Err(Error::Domain(format!(
                "kernel scale must be positive, got {}",
                self.scale
            )));
        }
        if self.bandwidths.is_empty() {
            return Err(Error::Domain("kernel needs at least one bandwidth".into()));
        }
        if let Some(bw) = self
            .bandwidths
            .iter()
            .find(|b| !(b.is_finite() && **b > 0.0))
        {
            return Err(Error::Domain(format!(
                "bandwidths must be positive, got {bw}"
            )));
        }
        if !(self.noise_var.is_finite() && self.noise_var >= 0.0) {
            return Err(Error::Domain(format!(
                "noise variance must be nonnegative, got {}",
                self.noise_var
            )));
        }
        Ok(())
    }

    /// `1 / (2 bw_i^2)` per dimension.
    pub(crate) fn inverse_two_bw2(&self) -> Vec<f64> {
        self.bandwidths.iter().map(|b| 0.5 / (b * b)).collect()
    }
}

#[inline]
pub(crate) fn se_kernel(scale: f64, inv_two_bw2: &[f64], x1: &[f64], x2: &[f64]) -> f64 {
    let mut acc = 0.0;
    for ((a, b), w) in x1.iter().zip(x2).zip(inv_two_bw2) {
        let diff = a - b;
        acc += diff * diff * w;
    }
    scale * (-acc).exp()
}

fn check_dim(params: &KernelParams, x: &[f64]) -> Result<()> {
    if x.len() != params.dim() {
        return Err(Error::Contract(format!(
            "point has dimension {}, kernel expects {}",
            x.len(),
            params.dim()
        )));
    }
    Ok(())
}

pub fn kernel_eval(params: &KernelParams, x1: &[f64], x2: &[f64]) -> Result<f64> {
    check_dim(params, x1)?;
    check_dim(params, x2)?;
    Ok(se_kernel(params.scale, &params.inverse_two_bw2(), x1, x2))
}

/// Median with the usual midpoint convention for even counts; 0 for no data.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mid = sorted.len() / 2;
    if sorted.len() % 2 == 1 {
        sorted[mid]
    } else {
        0.5 * (sorted[mid - 1] + sorted[mid])
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PosteriorSummary {
    pub mean: f64,
    pub std: f64,
}

/// A fitted GP for one objective. Immutable once built.
#[derive(Clone, Debug)]
pub struct GpModel {
    params: KernelParams,
    inv_two_bw2: Vec<f64>,
    inputs: Vec<Vec<f64>>,
    targets: Vec<f64>,
    mean_offset: f64,
    factor: Option<Cholesky>,
    jitter: f64,
    alpha: Vec<f64>,
}

/// Row-major Gram matrix `[k(x_i, x_j)]`.
pub(crate) fn gram(params: &KernelParams, inputs: &[Vec<f64>]) -> Vec<f64> {
    let n = inputs.len();
    let w = params.inverse_two_bw2();
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let v = se_kernel(params.scale, &w, &inputs[i], &inputs[j]);
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    k
}

impl GpModel {
    /// Builds the model: median-centers the targets, factorizes the noisy Gram matrix and
    /// solves for the weight vector used by the posterior mean.
    pub fn fit(params: KernelParams, inputs: Vec<Vec<f64>>, targets: Vec<f64>) -> Result<Self> {
        params.validate()?;
        if inputs.len() != targets.len() {
            return Err(Error::Contract(format!(
                "{} inputs but {} targets",
                inputs.len(),
                targets.len()
            )));
        }
        for x in &inputs {
            check_dim(&params, x)?;
            if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::Contract(format!("input {x:?} lies outside [0,1]^d")));
            }
        }
        if let Some(y) = targets.iter().find(|y| !y.is_finite()) {
            return Err(Error::Numeric(format!("non-finite target {y}")));
        }
        let inv_two_bw2 = params.inverse_two_bw2();
        let mean_offset = median(&targets);
        if inputs.is_empty() {
            return Ok(GpModel {
                params,
                inv_two_bw2,
                inputs,
                targets,
                mean_offset,
                factor: None,
                jitter: 0.0,
                alpha: Vec::new(),
            });
        }
        let n = inputs.len();
        let k = gram(&params, &inputs);
        let (factor, jitter) = Cholesky::factor_with_jitter(&k, n, params.noise_var, params.scale)
            .ok_or_else(|| {
                Error::Numeric(format!(
                    "Gram matrix of {n} points not positive definite at maximum jitter"
                ))
            })?;
        let mut alpha: Vec<f64> = targets.iter().map(|y| y - mean_offset).collect();
        factor.solve_in_place(&mut alpha);
        Ok(GpModel {
            params,
            inv_two_bw2,
            inputs,
            targets,
            mean_offset,
            factor: Some(factor),
            jitter,
            alpha,
        })
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn mean_offset(&self) -> f64 {
        self.mean_offset
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// Jitter added on top of `noise_var` for the factorization to succeed.
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// `noise_var + jitter`, the diagonal actually added to the Gram matrix.
    pub fn effective_noise(&self) -> f64 {
        self.params.noise_var + self.jitter
    }

    /// Dense copy of the lower-triangular factor, if any.
    pub fn factor_dense(&self) -> Option<Vec<Vec<f64>>> {
        self.factor.as_ref().map(|f| {
            (0..f.dim())
                .map(|i| {
                    (0..f.dim())
                        .map(|j| if j <= i { f.at(i, j) } else { 0.0 })
                        .collect()
                })
                .collect()
        })
    }

    pub fn posterior(&self, x: &[f64]) -> Result<PosteriorSummary> {
        check_dim(&self.params, x)?;
        let mut scratch = Vec::with_capacity(self.len());
        Ok(self.posterior_with(x, &mut scratch))
    }

    /// Posterior query reusing `scratch` for the cross-covariance vector. No dimension check.
    pub(crate) fn posterior_with(&self, x: &[f64], scratch: &mut Vec<f64>) -> PosteriorSummary {
        let prior_var = self.params.scale;
        let Some(factor) = &self.factor else {
            return PosteriorSummary {
                mean: self.mean_offset,
                std: prior_var.max(VARIANCE_FLOOR).sqrt(),
            };
        };
        scratch.clear();
        scratch.extend(
            self.inputs
                .iter()
                .map(|xi| se_kernel(self.params.scale, &self.inv_two_bw2, x, xi)),
        );
        let mean = self.mean_offset
            + scratch
                .iter()
                .zip(&self.alpha)
                .map(|(k, a)| k * a)
                .sum::<f64>();
        factor.solve_lower_in_place(scratch);
        let reduction: f64 = scratch.iter().map(|v| v * v).sum();
        let var = prior_var - reduction;
        PosteriorSummary {
            mean,
            std: var.max(VARIANCE_FLOOR).sqrt(),
        }
    }
}

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;

/// Log marginal likelihood of the median-centered targets under `params`.
pub fn log_marginal_likelihood(
    params: &KernelParams,
    inputs: &[Vec<f64>],
    targets: &[f64],
) -> Result<f64> {
    if inputs.is_empty() {
        return Err(Error::Contract(
            "marginal likelihood needs at least one observation".into(),
        ));
    }
    let model = GpModel::fit(params.clone(), inputs.to_vec(), targets.to_vec())?;
    Ok(model.log_marginal_likelihood())
}

impl GpModel {
    /// Log marginal likelihood of this model's own data. Zero for an empty model.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let Some(factor) = &self.factor else {
            return 0.0;
        };
        let data_fit: f64 = self
            .targets
            .iter()
            .zip(&self.alpha)
            .map(|(y, a)| (y - self.mean_offset) * a)
            .sum();
        -0.5 * data_fit - 0.5 * factor.log_det() - self.len() as f64 * HALF_LN_2PI
    }
}
