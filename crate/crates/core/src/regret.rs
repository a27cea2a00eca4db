//! Preference-aware regret of a logged run against the true objectives.
//!
//! Everything is computed in normalized objective space, where each objective is
//! mapped affinely onto `[0, 1]`. Instantaneous regret uses the weight vector the
//! run actually drew at each step; the simple-regret proxy
//! `-(1/L) sum_j max_{s <= t} g(lambda_j, x_s)` uses `L` fixed Monte-Carlo draws
//! from the preference distribution, shared by every run being compared.

use std::io::Write;
use std::path::Path;

use rand::Rng;

use crate::direct::{self, OptBudget};
use crate::engine::{EvaluationRecord, LogContents, Phase};
use crate::error::{Error, Result};
use crate::objectives::ObjectiveSet;
use crate::rng;
use crate::scalarize::{
    linear_unchecked, tchebychev_unchecked, transform_weights, Scalarization, WeightVector,
};
use crate::weights::{weights_for_scalarization, WeightDistribution};

pub const ORACLE_EVALS: usize = 10_000;
pub const ORACLE_PROBE_POINTS: usize = 100_000;
/// Padding added on each side of probed ranges, as a fraction of the range.
pub const PROBE_MARGIN: f64 = 0.01;
/// Regret values above `-CLAMP_TOL` are clamped to zero.
pub const CLAMP_TOL: f64 = 1e-9;
const ORACLE_PROBE_SEED: u64 = 0x5eed_0f_0a1c;

/// Per-objective affine map onto `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct ObjectiveNormalizer {
    ranges: Vec<(f64, f64)>,
}

impl ObjectiveNormalizer {
    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        if ranges.is_empty() {
            return Err(Error::Contract(
                "normalizer needs at least one range".into(),
            ));
        }
        if let Some((lo, hi)) = ranges
            .iter()
            .find(|(lo, hi)| !(hi > lo && lo.is_finite() && hi.is_finite()))
        {
            return Err(Error::Domain(format!(
                "objective range ({lo}, {hi}) is empty"
            )));
        }
        Ok(ObjectiveNormalizer { ranges })
    }

    /// Declared ranges when the objective has them, otherwise the probed min/max
    /// padded by [`PROBE_MARGIN`] on both sides.
    pub fn for_objective(objective: &ObjectiveSet) -> Result<Self> {
        if let Some(known) = objective.known_ranges() {
            return Self::new(known.to_vec());
        }
        let ranges = objective
            .ranges()?
            .into_iter()
            .map(|(lo, hi)| {
                let pad = if hi > lo {
                    PROBE_MARGIN * (hi - lo)
                } else {
                    0.5
                };
                (lo - pad, hi + pad)
            })
            .collect();
        Self::new(ranges)
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn len(&self) -> usize {
        self.ranges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranges.is_empty()
    }

    pub fn normalize(&self, y: &[f64]) -> Vec<f64> {
        y.iter()
            .zip(&self.ranges)
            .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
            .collect()
    }

    pub fn denormalize(&self, u: &[f64]) -> Vec<f64> {
        u.iter()
            .zip(&self.ranges)
            .map(|(v, (lo, hi))| lo + v * (hi - lo))
            .collect()
    }
}

fn scalarized(kind: Scalarization, lambda: &[f64], f: &[f64], z: &[f64]) -> f64 {
    match kind {
        Scalarization::Linear => linear_unchecked(lambda, f),
        Scalarization::Tchebychev => tchebychev_unchecked(lambda, f, z),
    }
}

/// The true objective together with its normalizer and a cached random probe.
pub struct RegretContext<'a> {
    objective: &'a ObjectiveSet,
    normalizer: ObjectiveNormalizer,
    /// Normalized true values at the probe points, row per point.
    probe: Vec<Vec<f64>>,
    oracle_budget: OptBudget,
}

impl<'a> RegretContext<'a> {
    pub fn new(objective: &'a ObjectiveSet) -> Result<Self> {
        let normalizer = ObjectiveNormalizer::for_objective(objective)?;
        Self::with_normalizer(objective, normalizer)
    }

    pub fn with_normalizer(
        objective: &'a ObjectiveSet,
        normalizer: ObjectiveNormalizer,
    ) -> Result<Self> {
        if objective.is_black_box() {
            return Err(Error::Unsupported(format!(
                "regret needs the true function, {} is a black box",
                objective.name()
            )));
        }
        if normalizer.len() != objective.num_objectives() {
            return Err(Error::Contract(
                "normalizer and objective disagree on K".into(),
            ));
        }
        let mut r = rng::stream(ORACLE_PROBE_SEED, "regret-probe", &[]);
        let mut x = vec![0.0; objective.dim()];
        let mut probe = Vec::with_capacity(ORACLE_PROBE_POINTS);
        for _ in 0..ORACLE_PROBE_POINTS {
            x.iter_mut().for_each(|v| *v = r.random());
            probe.push(normalizer.normalize(&objective.evaluate(&x)?));
        }
        Ok(RegretContext {
            objective,
            normalizer,
            probe,
            oracle_budget: OptBudget::with_evals(ORACLE_EVALS),
        })
    }

    pub fn normalizer(&self) -> &ObjectiveNormalizer {
        &self.normalizer
    }

    /// Normalized noise-free values at `x`.
    pub fn true_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.normalizer.normalize(&self.objective.evaluate(x)?))
    }

    /// Reference point in normalized units: the configured raw anchor mapped through
    /// the normalizer, or the origin (the normalized minimum).
    pub fn reference(&self, raw: Option<&[f64]>) -> Vec<f64> {
        match raw {
            Some(z) => self.normalizer.normalize(z),
            None => vec![0.0; self.normalizer.len()],
        }
    }

    /// `max_x g(lambda, f(x))` in normalized space: DIRECT with a large budget,
    /// never below the best probe point.
    pub fn oracle_max(&self, lambda: &[f64], kind: Scalarization, z: &[f64]) -> Result<f64> {
        let probe_max = self
            .probe
            .iter()
            .map(|f| scalarized(kind, lambda, f, z))
            .fold(f64::NEG_INFINITY, f64::max);
        let mut failure = None;
        let result = direct::maximize(
            self.objective.dim(),
            |x| match self.true_values(x) {
                Ok(f) => scalarized(kind, lambda, &f, z),
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            &self.oracle_budget,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        let found = result?.value_best;
        if found < probe_max - 1e-3 {
            log::warn!("oracle search ({found}) fell short of the probe maximum ({probe_max})");
        }
        Ok(found.max(probe_max))
    }
}

/// The weight vector a record was scored with, expressed for `kind`.
fn record_lambda(
    record: &EvaluationRecord,
    logged: Scalarization,
    kind: Scalarization,
) -> Result<WeightVector> {
    let lambda = record.lambda.as_ref().ok_or_else(|| {
        Error::Contract(format!("loop record {} carries no weight vector", record.t))
    })?;
    if logged == kind {
        Ok(lambda.clone())
    } else {
        transform_weights(lambda)
    }
}

/// `r_t = max_x g(lambda_t, x) - g(lambda_t, x_t)` for every loop record.
pub fn instantaneous_regret(
    ctx: &RegretContext<'_>,
    records: &[EvaluationRecord],
    logged: Scalarization,
    kind: Scalarization,
    z: &[f64],
) -> Result<Vec<f64>> {
    records
        .iter()
        .filter(|r| r.phase == Phase::Loop)
        .map(|r| {
            let lambda = record_lambda(r, logged, kind)?;
            let best = ctx.oracle_max(&lambda, kind, z)?;
            let got = scalarized(kind, &lambda, &ctx.true_values(&r.x)?, z);
            let gap = best - got;
            if gap < -CLAMP_TOL {
                log::warn!("negative regret {gap} at t = {}", r.t);
            }
            Ok(if gap.abs() <= CLAMP_TOL { 0.0 } else { gap })
        })
        .collect()
}

pub fn cumulative(instantaneous: &[f64]) -> Vec<f64> {
    instantaneous
        .iter()
        .scan(0.0, |acc, r| {
            *acc += r;
            Some(*acc)
        })
        .collect()
}

/// `L` weight draws for the simple-regret proxy, deterministic in `seed`.
pub fn monte_carlo_weights(
    dist: &WeightDistribution,
    kind: Scalarization,
    k: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<WeightVector>> {
    if count == 0 {
        return Err(Error::Contract(
            "Monte-Carlo weight count must be at least 1".into(),
        ));
    }
    let dist = dist.clone().sanitized();
    let mut r = rng::stream(seed, "regret-weights", &[]);
    (0..count)
        .map(|_| weights_for_scalarization(&dist, kind, k, &mut r))
        .collect()
}

/// `-(1/L) sum_j max_{s <= t} g(lambda_j, f_s)` for each prefix of `values`.
pub fn sr_proxy_curve(
    values: &[Vec<f64>],
    weights: &[WeightVector],
    kind: Scalarization,
    z: &[f64],
) -> Result<Vec<f64>> {
    if weights.is_empty() {
        return Err(Error::Contract(
            "simple regret proxy needs at least one weight draw".into(),
        ));
    }
    let mut best = vec![f64::NEG_INFINITY; weights.len()];
    let scale = 1.0 / weights.len() as f64;
    Ok(values
        .iter()
        .map(|f| {
            let mut total = 0.0;
            for (b, w) in best.iter_mut().zip(weights) {
                *b = b.max(scalarized(kind, w, f, z));
                total += *b;
            }
            -total * scale
        })
        .collect())
}

/// Regret of one run, indexed by loop step `T = 1..=budget`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegretReport {
    pub instantaneous: Vec<f64>,
    pub cumulative: Vec<f64>,
    /// Proxy after the initial design plus `T` loop evaluations.
    pub sr_proxy: Vec<f64>,
    pub mc_draws: usize,
    /// Config hash with the seed zeroed; reports are only aggregated across equal ones.
    pub fingerprint: String,
    pub seed: u64,
}

pub fn regret_report(
    ctx: &RegretContext<'_>,
    log: &LogContents,
    kind: Scalarization,
    mc_weights: &[WeightVector],
) -> Result<RegretReport> {
    let config = &log.header.config;
    if log.records.len() != config.n_init + config.budget {
        return Err(Error::Contract(format!(
            "run has {} of {} records; regret needs a complete log",
            log.records.len(),
            config.n_init + config.budget
        )));
    }
    let z = ctx.reference(
        config
            .acquisition
            .reference
            .as_ref()
            .map(|z| z.0.as_slice()),
    );
    let instantaneous = instantaneous_regret(
        ctx,
        &log.records,
        config.acquisition.scalarization,
        kind,
        &z,
    )?;
    let values = log
        .records
        .iter()
        .map(|r| ctx.true_values(&r.x))
        .collect::<Result<Vec<_>>>()?;
    let curve = sr_proxy_curve(&values, mc_weights, kind, &z)?;
    let sr_proxy = curve[config.n_init..].to_vec();
    Ok(RegretReport {
        cumulative: cumulative(&instantaneous),
        instantaneous,
        sr_proxy,
        mc_draws: mc_weights.len(),
        fingerprint: config.fingerprint()?,
        seed: config.seed,
    })
}

/// One row of the aggregated regret table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegretRow {
    pub t: usize,
    pub sr_proxy_mean: f64,
    pub sr_proxy_std: f64,
    pub cum_regret_mean: f64,
    pub cum_regret_std: f64,
    pub cum_regret_over_t: f64,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Seed-averaged Bayes regret: per-`T` mean and sample std across runs.
pub fn bayes_regret_estimate(reports: &[RegretReport]) -> Result<Vec<RegretRow>> {
    let Some(first) = reports.first() else {
        return Err(Error::Contract("no runs to aggregate".into()));
    };
    if let Some(other) = reports.iter().find(|r| r.fingerprint != first.fingerprint) {
        return Err(Error::Config(format!(
            "runs differ in more than the seed (config {} vs {})",
            first.fingerprint, other.fingerprint
        )));
    }
    if reports
        .iter()
        .any(|r| r.cumulative.len() != first.cumulative.len())
    {
        return Err(Error::Config("runs have different budgets".into()));
    }
    Ok((0..first.cumulative.len())
        .map(|i| {
            let cum: Vec<f64> = reports.iter().map(|r| r.cumulative[i]).collect();
            let sr: Vec<f64> = reports.iter().map(|r| r.sr_proxy[i]).collect();
            let (cum_regret_mean, cum_regret_std) = mean_std(&cum);
            let (sr_proxy_mean, sr_proxy_std) = mean_std(&sr);
            RegretRow {
                t: i + 1,
                sr_proxy_mean,
                sr_proxy_std,
                cum_regret_mean,
                cum_regret_std,
                cum_regret_over_t: cum_regret_mean / (i + 1) as f64,
            }
        })
        .collect())
}

pub const CSV_HEADER: &str =
    "T,sr_proxy_mean,sr_proxy_std,cum_regret_mean,cum_regret_std,cum_regret_over_T";

pub fn write_csv(path: &Path, rows: &[RegretRow]) -> Result<()> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.t,
            r.sr_proxy_mean,
            r.sr_proxy_std,
            r.cum_regret_mean,
            r.cum_regret_std,
            r.cum_regret_over_t
        ));
    }
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
