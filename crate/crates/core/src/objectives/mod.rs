//! Benchmark objectives and the external black-box protocol.
//!
//! Everything is maximized. Minimization benchmarks (Branin) are negated here.

mod subprocess;

use std::f64::consts::PI;
use std::sync::OnceLock;
use std::time::Duration;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::{draw_prior_sample, KernelParams, SpectralSample};
use crate::rng;

pub use subprocess::SubprocessObjective;

/// Probe size used to estimate ranges of objectives without declared ranges.
pub const RANGE_PROBE_POINTS: usize = 100_000;
const RANGE_PROBE_SEED: u64 = 0x5eed_0f_5a5e;
/// Default observation noise as a fraction of each objective's range.
pub const DEFAULT_NOISE_FRACTION: f64 = 0.01;
pub const RANDOM_GP_BANDWIDTH: f64 = 0.2;
pub const RANDOM_GP_FEATURES: usize = 512;
pub const DEFAULT_SUBPROCESS_TIMEOUT: Duration = Duration::from_secs(300);

/// Evaluates all `K` objectives at one point.
pub trait ObjectiveFn: Send + Sync {
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>>;
}

impl<F> ObjectiveFn for F
where
    F: Fn(&[f64]) -> Vec<f64> + Send + Sync,
{
    fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self(x))
    }
}

/// `K` objectives over `[0,1]^d` with optional Gaussian observation noise.
pub struct ObjectiveSet {
    name: String,
    num_objectives: usize,
    dim: usize,
    func: Box<dyn ObjectiveFn>,
    noise_stds: Vec<f64>,
    known_ranges: Option<Vec<(f64, f64)>>,
    black_box: bool,
    probed: OnceLock<Vec<(f64, f64)>>,
}

impl std::fmt::Debug for ObjectiveSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ObjectiveSet")
            .field("name", &self.name)
            .field("num_objectives", &self.num_objectives)
            .field("dim", &self.dim)
            .field("noise_stds", &self.noise_stds)
            .field("known_ranges", &self.known_ranges)
            .finish()
    }
}

impl ObjectiveSet {
    pub fn new(
        name: impl Into<String>,
        num_objectives: usize,
        dim: usize,
        func: Box<dyn ObjectiveFn>,
    ) -> Self {
        ObjectiveSet {
            name: name.into(),
            num_objectives,
            dim,
            func,
            noise_stds: vec![0.0; num_objectives],
            known_ranges: None,
            black_box: false,
            probed: OnceLock::new(),
        }
    }

    pub fn with_known_ranges(mut self, ranges: Vec<(f64, f64)>) -> Self {
        self.known_ranges = Some(ranges);
        self
    }

    pub fn with_noise(mut self, stds: Vec<f64>) -> Result<Self> {
        if stds.len() != self.num_objectives || stds.iter().any(|s| !(s.is_finite() && *s >= 0.0)) {
            return Err(Error::Config(format!(
                "noise stds {stds:?} must be {} nonnegative values",
                self.num_objectives
            )));
        }
        self.noise_stds = stds;
        Ok(self)
    }

    /// Sets noise to `fraction` of each objective's range.
    pub fn with_relative_noise(self, fraction: f64) -> Result<Self> {
        let stds = self
            .ranges()?
            .iter()
            .map(|(lo, hi)| fraction * (hi - lo))
            .collect();
        self.with_noise(stds)
    }

    fn black_box(mut self) -> Self {
        self.black_box = true;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn num_objectives(&self) -> usize {
        self.num_objectives
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn noise_stds(&self) -> &[f64] {
        &self.noise_stds
    }

    pub fn known_ranges(&self) -> Option<&[(f64, f64)]> {
        self.known_ranges.as_deref()
    }

    /// True when the objective lives outside this process and has no usable ground truth.
    pub fn is_black_box(&self) -> bool {
        self.black_box
    }

    /// Noise-free objective values.
    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim {
            return Err(Error::Contract(format!(
                "point has dimension {}, objective expects {}",
                x.len(),
                self.dim
            )));
        }
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Contract(format!("point {x:?} lies outside [0,1]^d")));
        }
        let y = self.func.evaluate(x)?;
        if y.len() != self.num_objectives {
            return Err(Error::Objective(format!(
                "{} returned {} values, expected {}",
                self.name,
                y.len(),
                self.num_objectives
            )));
        }
        if let Some(v) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::Objective(format!(
                "{} returned non-finite {v} at {x:?}",
                self.name
            )));
        }
        Ok(y)
    }

    /// Objective values plus iid `N(0, noise_k^2)` per objective.
    pub fn evaluate_noisy<R: Rng + ?Sized>(&self, x: &[f64], rng: &mut R) -> Result<Vec<f64>> {
        let mut y = self.evaluate(x)?;
        for (v, s) in y.iter_mut().zip(&self.noise_stds) {
            let z: f64 = rng.sample(StandardNormal);
            if *s > 0.0 {
                *v += s * z;
            }
        }
        Ok(y)
    }

    /// Declared ranges, or min/max over a fixed uniform probe of `RANGE_PROBE_POINTS` points.
    pub fn ranges(&self) -> Result<Vec<(f64, f64)>> {
        if let Some(r) = &self.known_ranges {
            return Ok(r.clone());
        }
        if self.black_box {
            return Err(Error::Unsupported(format!(
                "{} is a black-box objective without declared ranges",
                self.name
            )));
        }
        if let Some(r) = self.probed.get() {
            return Ok(r.clone());
        }
        let mut rng = rng::stream(RANGE_PROBE_SEED, "range-probe", &[]);
        let mut ranges = vec![(f64::INFINITY, f64::NEG_INFINITY); self.num_objectives];
        let mut x = vec![0.0; self.dim];
        for _ in 0..RANGE_PROBE_POINTS {
            x.iter_mut().for_each(|v| *v = rng.random());
            for (r, v) in ranges.iter_mut().zip(self.evaluate(&x)?) {
                r.0 = r.0.min(v);
                r.1 = r.1.max(v);
            }
        }
        Ok(self.probed.get_or_init(|| ranges).clone())
    }
}

pub fn circle(x: f64, y: f64) -> [f64; 2] {
    [x * y, y * (1.0 - x * x).max(0.0).sqrt()]
}

/// Standard Branin on `[-5, 10] x [0, 15]`, minimum 0.397887.
pub fn branin(x1: f64, x2: f64) -> f64 {
    let b = 5.1 / (4.0 * PI * PI);
    let c = 5.0 / PI;
    let t = 1.0 / (8.0 * PI);
    (x2 - b * x1 * x1 + c * x1 - 6.0).powi(2) + 10.0 * (1.0 - t) * x1.cos() + 10.0
}

/// Branin with both inputs rescaled from `[0,1]`.
pub fn branin_unit(u1: f64, u2: f64) -> f64 {
    branin(-5.0 + 15.0 * u1, 15.0 * u2)
}

/// Currin exponential function on `[0,1]^2`.
pub fn currin_exp(x1: f64, x2: f64) -> f64 {
    let factor = if x2 > 0.0 {
        1.0 - (-0.5 / x2).exp()
    } else {
        1.0
    };
    let num = 2300.0 * x1.powi(3) + 1900.0 * x1 * x1 + 2092.0 * x1 + 60.0;
    let den = 100.0 * x1.powi(3) + 500.0 * x1 * x1 + 4.0 * x1 + 20.0;
    factor * num / den
}

/// Known minimum of the standard Branin function.
pub const BRANIN_MIN: f64 = 0.397_887_357_729_738;

/// The quarter-circle pair `f1 = xy`, `f2 = y sqrt(1 - x^2)` on `[0,1]^2`.
pub fn circle_pair() -> ObjectiveSet {
    ObjectiveSet::new(
        "circle",
        2,
        2,
        Box::new(|x: &[f64]| circle(x[0], x[1]).to_vec()),
    )
    .with_known_ranges(vec![(0.0, 1.0), (0.0, 1.0)])
}

/// Negated Branin-4 and CurrinExp-4, each the average of the 2-d function over the
/// coordinate pairs `(x1, x2)` and `(x3, x4)`.
pub fn branin_currin_4d() -> ObjectiveSet {
    ObjectiveSet::new(
        "branin_currin",
        2,
        4,
        Box::new(|x: &[f64]| {
            vec![
                -0.5 * (branin_unit(x[0], x[1]) + branin_unit(x[2], x[3])),
                0.5 * (currin_exp(x[0], x[1]) + currin_exp(x[2], x[3])),
            ]
        }),
    )
}

/// The prior draw used for objective `index` of `random_gp_objectives(.., seed)`.
pub fn random_gp_draw(dim: usize, seed: u64, index: usize) -> SpectralSample {
    let params = KernelParams {
        scale: 1.0,
        bandwidths: vec![RANDOM_GP_BANDWIDTH; dim],
        noise_var: 0.0,
    };
    let mut rng = rng::stream(seed, "random-gp", &[index as u64]);
    draw_prior_sample(&params, 0.0, RANDOM_GP_FEATURES, &mut rng)
}

/// `k` independent SE-kernel GP prior draws (bandwidth 0.2, scale 1) on `[0,1]^d`.
pub fn random_gp_objectives(k: usize, dim: usize, seed: u64) -> Result<ObjectiveSet> {
    if k == 0 || dim == 0 {
        return Err(Error::Config("random GP objectives need K, d >= 1".into()));
    }
    let draws: Vec<SpectralSample> = (0..k).map(|i| random_gp_draw(dim, seed, i)).collect();
    Ok(ObjectiveSet::new(
        format!("random_gp_{k}x{dim}"),
        k,
        dim,
        Box::new(move |x: &[f64]| draws.iter().map(|s| s.eval(x)).collect()),
    ))
}

pub fn subprocess_objective(
    command: &str,
    k: usize,
    dim: usize,
    timeout: Duration,
) -> ObjectiveSet {
    ObjectiveSet::new(
        format!("subprocess:{command}"),
        k,
        dim,
        Box::new(SubprocessObjective::new(command, k, dim, timeout)),
    )
    .black_box()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ObjectiveKind {
    Circle,
    BraninCurrin,
    RandomGp {
        num_objectives: usize,
        dim: usize,
        seed: u64,
    },
    Subprocess {
        command: String,
        num_objectives: usize,
        dim: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        timeout_secs: Option<f64>,
    },
}

/// Objective section of an experiment config.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    #[serde(flatten)]
    pub kind: ObjectiveKind,
    /// Per-objective noise stds. Defaults to 1% of each range for built-ins, 0 for subprocesses.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_std: Option<Vec<f64>>,
}

impl ObjectiveSpec {
    pub fn new(kind: ObjectiveKind) -> Self {
        ObjectiveSpec {
            kind,
            noise_std: None,
        }
    }

    pub fn num_objectives(&self) -> usize {
        match &self.kind {
            ObjectiveKind::Circle | ObjectiveKind::BraninCurrin => 2,
            ObjectiveKind::RandomGp { num_objectives, .. }
            | ObjectiveKind::Subprocess { num_objectives, .. } => *num_objectives,
        }
    }

    pub fn dim(&self) -> usize {
        match &self.kind {
            ObjectiveKind::Circle => 2,
            ObjectiveKind::BraninCurrin => 4,
            ObjectiveKind::RandomGp { dim, .. } | ObjectiveKind::Subprocess { dim, .. } => *dim,
        }
    }

    /// Builds the objective without noise.
    pub fn build_clean(&self) -> Result<ObjectiveSet> {
        match &self.kind {
            ObjectiveKind::Circle => Ok(circle_pair()),
            ObjectiveKind::BraninCurrin => Ok(branin_currin_4d()),
            ObjectiveKind::RandomGp {
                num_objectives,
                dim,
                seed,
            } => random_gp_objectives(*num_objectives, *dim, *seed),
            ObjectiveKind::Subprocess {
                command,
                num_objectives,
                dim,
                timeout_secs,
            } => {
                if *num_objectives == 0 || *dim == 0 {
                    return Err(Error::Config("subprocess objective needs K, d >= 1".into()));
                }
                let timeout = match timeout_secs {
                    Some(s) if s.is_finite() && *s > 0.0 => Duration::from_secs_f64(*s),
                    Some(s) => {
                        return Err(Error::Config(format!(
                            "timeout_secs must be positive, got {s}"
                        )))
                    }
                    None => DEFAULT_SUBPROCESS_TIMEOUT,
                };
                Ok(subprocess_objective(
                    command,
                    *num_objectives,
                    *dim,
                    timeout,
                ))
            }
        }
    }

    /// Builds the objective with the configured (or default) observation noise.
    pub fn build(&self) -> Result<ObjectiveSet> {
        let set = self.build_clean()?;
        match &self.noise_std {
            Some(stds) => set.with_noise(stds.clone()),
            None if set.is_black_box() => Ok(set),
            None => set.with_relative_noise(DEFAULT_NOISE_FRACTION),
        }
    }
}
