//! Random Fourier feature approximations of GP function draws.
//!
//! The SE kernel has a Gaussian spectral density with per-dimension standard
//! deviation `1 / bw_i`, so `sqrt(2s/M) * cos(w.x + b)` features give an
//! unbiased finite-rank approximation of the kernel. Posterior draws condition
//! the feature weights on the data by a pathwise update:
//! `w = w0 + Phi^T (Phi Phi^T + noise I)^-1 (y - Phi w0 - eps)`,
//! which is an exact sample of the feature-space posterior.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::linalg::Cholesky;
use super::{GpModel, KernelParams};
use crate::error::{Error, Result};

/// One function draw, evaluable anywhere: `offset + sum_j a_j cos(w_j . x + b_j)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    dim: usize,
    frequencies: Vec<f64>,
    phases: Vec<f64>,
    amplitudes: Vec<f64>,
    offset: f64,
}

impl SpectralSample {
    pub fn num_features(&self) -> usize {
        self.phases.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Row-major `M x d` frequency matrix.
    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn amplitudes(&self) -> &[f64] {
        &self.amplitudes
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim);
        let mut acc = 0.0;
        for ((w, b), a) in self
            .frequencies
            .chunks_exact(self.dim)
            .zip(&self.phases)
            .zip(&self.amplitudes)
        {
            let mut arg = *b;
            for (wi, xi) in w.iter().zip(x) {
                arg += wi * xi;
            }
            acc += a * arg.cos();
        }
        self.offset + acc
    }
}

struct Features {
    dim: usize,
    frequencies: Vec<f64>,
    phases: Vec<f64>,
    norm: f64,
}

impl Features {
    fn draw<R: Rng + ?Sized>(params: &KernelParams, m: usize, rng: &mut R) -> Self {
        let dim = params.dim();
        let mut frequencies = Vec::with_capacity(m * dim);
        for _ in 0..m {
            for bw in &params.bandwidths {
                let z: f64 = rng.sample(StandardNormal);
                frequencies.push(z / bw);
            }
        }
        let phases = (0..m).map(|_| rng.random::<f64>() * TAU).collect();
        Features {
            dim,
            frequencies,
            phases,
            norm: (2.0 * params.scale / m as f64).sqrt(),
        }
    }

    fn row(&self, x: &[f64], out: &mut [f64]) {
        for ((o, w), b) in out
            .iter_mut()
            .zip(self.frequencies.chunks_exact(self.dim))
            .zip(&self.phases)
        {
            let arg = b + w.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>();
            *o = self.norm * arg.cos();
        }
    }

    fn into_sample(self, weights: &[f64], offset: f64) -> SpectralSample {
        SpectralSample {
            dim: self.dim,
            amplitudes: weights.iter().map(|w| w * self.norm).collect(),
            frequencies: self.frequencies,
            phases: self.phases,
            offset,
        }
    }
}

fn normals<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

/// A draw from the zero-data prior `GP(offset, k)`.
pub fn draw_prior_sample<R: Rng + ?Sized>(
    params: &KernelParams,
    offset: f64,
    num_features: usize,
    rng: &mut R,
) -> SpectralSample {
    let features = Features::draw(params, num_features.max(1), rng);
    let w = normals(features.phases.len(), rng);
    features.into_sample(&w, offset)
}

/// An approximate posterior function draw from `model` using `num_features` features.
pub fn draw_spectral_sample<R: Rng + ?Sized>(
    model: &GpModel,
    num_features: usize,
    rng: &mut R,
) -> Result<SpectralSample> {
    if num_features == 0 {
        return Err(Error::Contract(
            "spectral sample needs at least one feature".into(),
        ));
    }
    let params = model.params();
    let offset = model.mean_offset();
    let features = Features::draw(params, num_features, rng);
    let mut weights = normals(num_features, rng);
    if model.is_empty() {
        return Ok(features.into_sample(&weights, offset));
    }

    let n = model.len();
    let m = num_features;
    let noise = model.effective_noise();
    let mut phi = vec![0.0; n * m];
    for (x, row) in model.inputs().iter().zip(phi.chunks_exact_mut(m)) {
        features.row(x, row);
    }
    let mut dual = vec![0.0; n * n];
    for i in 0..n {
        let ri = &phi[i * m..(i + 1) * m];
        for j in 0..=i {
            let rj = &phi[j * m..(j + 1) * m];
            dual[i * n + j] = ri.iter().zip(rj).map(|(a, b)| a * b).sum();
        }
    }
    let factor = Cholesky::factor_shifted(&dual, n, noise)
        .or_else(|| Cholesky::factor_with_jitter(&dual, n, noise, params.scale).map(|(f, _)| f))
        .ok_or_else(|| Error::Numeric("feature-space Gram matrix not positive definite".into()))?;

    let noise_std = noise.sqrt();
    let mut residual: Vec<f64> = Vec::with_capacity(n);
    for (i, y) in model.targets().iter().enumerate() {
        let row = &phi[i * m..(i + 1) * m];
        let prior_value: f64 = row.iter().zip(&weights).map(|(a, b)| a * b).sum();
        let eps: f64 = rng.sample::<f64, _>(StandardNormal) * noise_std;
        residual.push(y - offset - prior_value - eps);
    }
    factor.solve_in_place(&mut residual);
    for (i, beta) in residual.iter().enumerate() {
        let row = &phi[i * m..(i + 1) * m];
        for (w, p) in weights.iter_mut().zip(row) {
            *w += p * beta;
        }
    }
    Ok(features.into_sample(&weights, offset))
}
