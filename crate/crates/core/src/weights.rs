//! Preference distributions over the weight simplex.
//!
//! Every sampler output has all coordinates `>= MIN_WEIGHT`, so the
//! reciprocal transform for the Tchebychev scalarization is always defined.

use rand::Rng;
use rand_distr::{Exp1, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalarize::{transform_weights, Scalarization, WeightVector};

pub const MIN_WEIGHT: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightDistribution {
    /// `lambda = u / |u|_1` with `u_k ~ Unif[a_k, b_k]`, boxes in normalized objective units.
    BoundingBox {
        boxes: Vec<[f64; 2]>,
    },
    /// `Dir(1, ..., 1)`.
    FlatDirichlet,
    /// `|w| / |w|_1` with `w ~ N(0, I)`.
    SphereUniform,
    Fixed {
        lambda: WeightVector,
    },
    /// Two objectives: `u ~ Unif(lo, hi)` and `lambda = [u, 1] / (u + 1)` with `u` placed at `index`.
    RatioUniform {
        lo: f64,
        hi: f64,
        #[serde(default)]
        index: usize,
    },
}

/// Raises every coordinate to at least `MIN_WEIGHT` and renormalizes the remaining mass.
fn clamp_min_weight(mut w: Vec<f64>) -> Vec<f64> {
    let k = w.len();
    let mut pinned = vec![false; k];
    // Each pass pins at least one more coordinate or stops, so K passes suffice.
    for _ in 0..k {
        let mut changed = false;
        for i in 0..k {
            if !pinned[i] && w[i] < MIN_WEIGHT {
                pinned[i] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
        let free_mass: f64 = (0..k).filter(|i| !pinned[*i]).map(|i| w[i]).sum();
        let target = 1.0 - MIN_WEIGHT * pinned.iter().filter(|p| **p).count() as f64;
        for i in 0..k {
            if pinned[i] {
                w[i] = MIN_WEIGHT;
            } else if free_mass > 0.0 {
                w[i] *= target / free_mass;
            }
        }
    }
    w
}

fn finish(raw: Vec<f64>) -> Result<WeightVector> {
    let normalized = WeightVector::normalized(raw)?;
    if normalized.min_weight() >= MIN_WEIGHT {
        return Ok(normalized);
    }
    WeightVector::new(clamp_min_weight(normalized.into()))
}

impl WeightDistribution {
    /// Checks the distribution against the number of objectives `k`.
    pub fn validate(&self, k: usize) -> Result<()> {
        let mismatch = |got: usize| {
            Err(Error::Config(format!(
                "weight distribution describes {got} objectives, problem has {k}"
            )))
        };
        match self {
            WeightDistribution::BoundingBox { boxes } => {
                if boxes.len() != k {
                    return mismatch(boxes.len());
                }
                for [a, b] in boxes {
                    if !(a.is_finite() && b.is_finite() && a <= b) {
                        return Err(Error::Config(format!(
                            "bounding box [{a}, {b}] must satisfy a <= b"
                        )));
                    }
                }
                if boxes.iter().all(|[_, b]| *b <= 0.0) {
                    return Err(Error::Config(
                        "bounding boxes admit only the all-zero weight vector".into(),
                    ));
                }
            }
            WeightDistribution::FlatDirichlet | WeightDistribution::SphereUniform => {}
            WeightDistribution::Fixed { lambda } => {
                if lambda.len() != k {
                    return mismatch(lambda.len());
                }
            }
            WeightDistribution::RatioUniform { lo, hi, index } => {
                if k != 2 {
                    return mismatch(2);
                }
                if !(0.0 <= *lo && lo < hi && hi.is_finite()) {
                    return Err(Error::Config(format!(
                        "ratio distribution needs 0 <= lo < hi, got ({lo}, {hi})"
                    )));
                }
                if *index > 1 {
                    return Err(Error::Config(format!(
                        "ratio index must be 0 or 1, got {index}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Clamps negative box bounds to zero, logging a warning when anything changed.
    pub fn sanitized(self) -> Self {
        match self {
            WeightDistribution::BoundingBox { boxes } => {
                let clamped: Vec<[f64; 2]> = boxes
                    .iter()
                    .map(|[a, b]| [a.max(0.0), b.max(0.0)])
                    .collect();
                if clamped != boxes {
                    log::warn!(
                        "bounding boxes {boxes:?} have negative bounds; clamped to {clamped:?}"
                    );
                }
                WeightDistribution::BoundingBox { boxes: clamped }
            }
            other => other,
        }
    }

    /// Draws one weight vector for a `k`-objective problem.
    pub fn sample<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<WeightVector> {
        self.validate(k)?;
        let raw: Vec<f64> = match self {
            WeightDistribution::BoundingBox { boxes } => boxes
                .iter()
                .map(|[a, b]| {
                    let (a, b) = (a.max(0.0), b.max(0.0));
                    if b > a {
                        a + (b - a) * rng.random::<f64>()
                    } else {
                        a
                    }
                })
                .collect(),
            WeightDistribution::FlatDirichlet => {
                (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect()
            }
            WeightDistribution::SphereUniform => (0..k)
                .map(|_| rng.sample::<f64, _>(StandardNormal).abs())
                .collect(),
            WeightDistribution::Fixed { lambda } => lambda.to_vec(),
            WeightDistribution::RatioUniform { lo, hi, index } => {
                let u = lo + (hi - lo) * rng.random::<f64>();
                let mut v = vec![1.0 / (u + 1.0); 2];
                v[*index] = u / (u + 1.0);
                v
            }
        };
        if raw.iter().all(|v| *v == 0.0) {
            return Err(Error::Config(
                "bounding box draw produced the zero vector".into(),
            ));
        }
        finish(raw)
    }

    /// A representative central weight: normalized box midpoints, the ratio at the
    /// interval midpoint, uniform weights for the flat laws.
    pub fn center(&self, k: usize) -> Result<WeightVector> {
        self.validate(k)?;
        let raw = match self {
            WeightDistribution::BoundingBox { boxes } => boxes
                .iter()
                .map(|[a, b]| 0.5 * (a.max(0.0) + b.max(0.0)))
                .collect(),
            WeightDistribution::FlatDirichlet | WeightDistribution::SphereUniform => {
                return Ok(WeightVector::uniform(k))
            }
            WeightDistribution::Fixed { lambda } => return Ok(lambda.clone()),
            WeightDistribution::RatioUniform { lo, hi, index } => {
                let u = 0.5 * (lo + hi);
                let mut v = vec![1.0 / (u + 1.0); 2];
                v[*index] = u / (u + 1.0);
                v
            }
        };
        finish(raw)
    }
}

pub fn sample_weight<R: Rng + ?Sized>(
    dist: &WeightDistribution,
    k: usize,
    rng: &mut R,
) -> Result<WeightVector> {
    dist.sample(k, rng)
}

/// A sample as used by the acquisition: unchanged for linear, reciprocal-transformed
/// for Tchebychev.
pub fn weights_for_scalarization<R: Rng + ?Sized>(
    dist: &WeightDistribution,
    kind: Scalarization,
    k: usize,
    rng: &mut R,
) -> Result<WeightVector> {
    let lambda = dist.sample(k, rng)?;
    match kind {
        Scalarization::Linear => Ok(lambda),
        Scalarization::Tchebychev => transform_weights(&lambda),
    }
}
