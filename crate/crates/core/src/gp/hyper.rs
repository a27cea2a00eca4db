//! Marginal-likelihood hyperparameter search.
//!
//! Multistart coordinate-wise golden-section search in log-parameter space.
//! The first start is always the bounds-clamped default, the rest are drawn
//! log-uniformly inside the bounds.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::linalg::Cholesky;
use super::{log_marginal_likelihood, median, KernelParams, HALF_LN_2PI};
use crate::error::{Error, Result};

pub const NUM_STARTS: usize = 8;
const GOLDEN: f64 = 0.618_033_988_749_894_8;

/// (full-range iterations, local half-width in log space, local iterations)
const SWEEPS: [(Option<f64>, usize); 2] = [(None, 10), (Some(0.5), 8)];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HyperBounds {
    pub bandwidth: (f64, f64),
    pub scale: (f64, f64),
    pub noise_var: (f64, f64),
}

impl Default for HyperBounds {
    fn default() -> Self {
        HyperBounds {
            bandwidth: (0.01, 10.0),
            scale: (1e-3, 100.0),
            noise_var: (1e-6, 1.0),
        }
    }
}

fn sample_variance(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

impl HyperBounds {
    /// Rescales the scale and noise ranges by the empirical target variance, so that
    /// objectives with large raw ranges stay inside the search box. Bandwidths are unchanged.
    pub fn scaled_to_targets(&self, targets: &[f64]) -> Self {
        let var = sample_variance(targets);
        if !(var.is_finite() && var > 0.0) {
            return self.clone();
        }
        HyperBounds {
            bandwidth: self.bandwidth,
            scale: (self.scale.0 * var, self.scale.1 * var),
            noise_var: (self.noise_var.0 * var, self.noise_var.1 * var),
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, (lo, hi)) in [
            ("bandwidth", self.bandwidth),
            ("scale", self.scale),
            ("noise_var", self.noise_var),
        ] {
            if !(lo > 0.0 && lo <= hi && hi.is_finite()) {
                return Err(Error::Config(format!(
                    "hyperparameter bounds for {name} must satisfy 0 < lo <= hi, got ({lo}, {hi})"
                )));
            }
        }
        Ok(())
    }

    /// Starting point: bandwidth 0.5, scale at the target variance, noise at 1% of it.
    pub fn default_params(&self, dim: usize, targets: &[f64]) -> KernelParams {
        let var = sample_variance(targets);
        let scale = if var.is_finite() && var > 0.0 {
            var
        } else {
            1.0
        };
        let scale = scale.clamp(self.scale.0, self.scale.1);
        KernelParams {
            scale,
            bandwidths: vec![0.5f64.clamp(self.bandwidth.0, self.bandwidth.1); dim],
            noise_var: (1e-2 * scale).clamp(self.noise_var.0, self.noise_var.1),
        }
    }

    fn log_box(&self, dim: usize) -> Vec<(f64, f64)> {
        let mut b = vec![(self.bandwidth.0.ln(), self.bandwidth.1.ln()); dim];
        b.push((self.scale.0.ln(), self.scale.1.ln()));
        b.push((self.noise_var.0.ln(), self.noise_var.1.ln()));
        b
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitOutcome {
    pub params: KernelParams,
    pub log_marginal_likelihood: f64,
    /// Set when the targets carried no signal and the defaults were returned untouched.
    pub degenerate: bool,
}

fn to_log(params: &KernelParams) -> Vec<f64> {
    let mut t: Vec<f64> = params.bandwidths.iter().map(|b| b.ln()).collect();
    t.push(params.scale.ln());
    t.push(params.noise_var.ln());
    t
}

fn from_log(theta: &[f64]) -> KernelParams {
    let d = theta.len() - 2;
    KernelParams {
        bandwidths: theta[..d].iter().map(|v| v.exp()).collect(),
        scale: theta[d].exp(),
        noise_var: theta[d + 1].exp(),
    }
}

/// Precomputed pairwise squared differences so each likelihood evaluation only
/// pays for the exponentials and the factorization.
struct LikelihoodProblem {
    n: usize,
    d: usize,
    sqdiff: Vec<f64>,
    centered: Vec<f64>,
    gram: Vec<f64>,
    work: Vec<f64>,
}

impl LikelihoodProblem {
    fn new(inputs: &[Vec<f64>], targets: &[f64]) -> Self {
        let n = inputs.len();
        let d = inputs[0].len();
        let mut sqdiff = Vec::with_capacity(n * n.saturating_sub(1) / 2 * d);
        for i in 0..n {
            for j in 0..i {
                for k in 0..d {
                    let diff = inputs[i][k] - inputs[j][k];
                    sqdiff.push(diff * diff);
                }
            }
        }
        let offset = median(targets);
        LikelihoodProblem {
            n,
            d,
            sqdiff,
            centered: targets.iter().map(|y| y - offset).collect(),
            gram: vec![0.0; n * n],
            work: vec![0.0; n],
        }
    }

    fn eval(&mut self, theta: &[f64]) -> f64 {
        let (n, d) = (self.n, self.d);
        let params = from_log(theta);
        let w = params.inverse_two_bw2();
        let mut p = 0;
        for i in 0..n {
            for j in 0..i {
                let mut acc = 0.0;
                for k in 0..d {
                    acc += self.sqdiff[p + k] * w[k];
                }
                p += d;
                self.gram[i * n + j] = params.scale * (-acc).exp();
            }
            self.gram[i * n + i] = params.scale;
        }
        let Some((factor, _)) =
            Cholesky::factor_with_jitter(&self.gram, n, params.noise_var, params.scale)
        else {
            return f64::NEG_INFINITY;
        };
        self.work.copy_from_slice(&self.centered);
        factor.solve_in_place(&mut self.work);
        let fit: f64 = self
            .centered
            .iter()
            .zip(&self.work)
            .map(|(a, b)| a * b)
            .sum();
        let v = -0.5 * fit - 0.5 * factor.log_det() - n as f64 * HALF_LN_2PI;
        if v.is_finite() {
            v
        } else {
            f64::NEG_INFINITY
        }
    }
}

/// Golden-section maximization of `f` on `[lo, hi]`; returns the best point evaluated.
fn golden_max(mut f: impl FnMut(f64) -> f64, lo: f64, hi: f64, iters: usize) -> (f64, f64) {
    let (mut a, mut b) = (lo, hi);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    let mut best = if fd > fc { (d, fd) } else { (c, fc) };
    for _ in 0..iters {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = f(c);
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = f(d);
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    best
}

fn coordinate_search(
    problem: &mut LikelihoodProblem,
    start: Vec<f64>,
    log_box: &[(f64, f64)],
) -> (Vec<f64>, f64) {
    let mut theta = start;
    let mut best = problem.eval(&theta);
    for (half_width, iters) in SWEEPS {
        for i in 0..theta.len() {
            let (lo, hi) = match half_width {
                None => log_box[i],
                Some(h) => (
                    (theta[i] - h).max(log_box[i].0),
                    (theta[i] + h).min(log_box[i].1),
                ),
            };
            if hi - lo <= 0.0 {
                continue;
            }
            let mut trial = theta.clone();
            let (xi, vi) = golden_max(
                |v| {
                    trial[i] = v;
                    problem.eval(&trial)
                },
                lo,
                hi,
                iters,
            );
            if vi > best {
                theta[i] = xi;
                best = vi;
            }
        }
    }
    (theta, best)
}

/// Fits kernel hyperparameters to `(inputs, targets)` by maximizing the marginal likelihood
/// inside `bounds`. Constant targets return the clamped defaults with `degenerate` set.
pub fn fit_hyperparams<R: Rng + ?Sized>(
    inputs: &[Vec<f64>],
    targets: &[f64],
    bounds: &HyperBounds,
    rng: &mut R,
) -> Result<FitOutcome> {
    if inputs.len() < 2 || inputs.len() != targets.len() {
        return Err(Error::Contract(format!(
            "hyperparameter fit needs >= 2 paired observations, got {} inputs and {} targets",
            inputs.len(),
            targets.len()
        )));
    }
    bounds.validate()?;
    let dim = inputs[0].len();
    let defaults = bounds.default_params(dim, targets);
    let spread = targets.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - targets.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(spread > 0.0) {
        let lml = log_marginal_likelihood(&defaults, inputs, targets)?;
        return Ok(FitOutcome {
            params: defaults,
            log_marginal_likelihood: lml,
            degenerate: true,
        });
    }

    let log_box = bounds.log_box(dim);
    let mut problem = LikelihoodProblem::new(inputs, targets);
    let mut starts = vec![to_log(&defaults)];
    for _ in 1..NUM_STARTS {
        starts.push(
            log_box
                .iter()
                .map(|(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
                .collect(),
        );
    }

    let mut best: Option<(Vec<f64>, f64)> = None;
    for start in starts {
        let (theta, value) = coordinate_search(&mut problem, start, &log_box);
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((theta, value));
        }
    }
    let (theta, _) = best.expect("at least one start");
    let mut params = from_log(&theta);
    params.scale = params.scale.clamp(bounds.scale.0, bounds.scale.1);
    params.noise_var = params
        .noise_var
        .clamp(bounds.noise_var.0, bounds.noise_var.1);
    for b in &mut params.bandwidths {
        *b = b.clamp(bounds.bandwidth.0, bounds.bandwidth.1);
    }
    let lml = log_marginal_likelihood(&params, inputs, targets)?;
    Ok(FitOutcome {
        params,
        log_marginal_likelihood: lml,
        degenerate: false,
    })
}
