//! The optimization loop: initial design, then per step sample a weight vector,
//! maximize the scalarized acquisition, evaluate all objectives and update the
//! surrogates. Every step is appended to a JSON-lines log as it completes, and a
//! run can be resumed from its log alone.
//!
//! Random decisions are drawn from [`crate::rng::stream`] keyed by the step they
//! belong to, so a resumed run replays exactly without saved generator state.

mod config;
mod log;

use std::path::Path;
use std::time::Instant;

use rand::Rng;

pub use self::config::{ExperimentConfig, DEFAULT_N_INIT, DEFAULT_REFIT_EVERY};
pub use self::log::{
    fits_path, read_log, read_sidecar, timing_path, EvaluationRecord, FitRecord, JsonlWriter,
    LogContents, LogHeader, Phase, TimingRecord, LOG_VERSION,
};

use crate::acquisition::{ucb_linear, ucb_tchebychev, Method};
use crate::direct;
use crate::error::{Error, Result};
use crate::gp::{draw_spectral_sample, fit_hyperparams, GpModel, KernelParams, PosteriorSummary};
use crate::objectives::ObjectiveSet;
use crate::rng;
use crate::scalarize::{linear_unchecked, tchebychev_unchecked, Scalarization, WeightVector};
use crate::weights::{weights_for_scalarization, WeightDistribution};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Return after this many loop steps, leaving the log resumable.
    pub stop_after: Option<usize>,
}

/// A run's data and current surrogate hyperparameters.
#[derive(Clone, Debug)]
pub struct ExperimentState {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub records: Vec<EvaluationRecord>,
    /// Current kernel parameters per objective; empty until the first fit.
    pub params: Vec<KernelParams>,
    pub fits: Vec<FitRecord>,
}

impl ExperimentState {
    pub fn loop_steps_done(&self) -> usize {
        self.records.len().saturating_sub(self.config.n_init)
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() == self.config.n_init + self.config.budget
    }
}

/// Uniform initial design, `n` points drawn row by row from one stream.
pub fn init_design(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut r = rng::stream(seed, rng::INIT_DESIGN, &[0]);
    (0..n)
        .map(|_| (0..dim).map(|_| r.random::<f64>()).collect())
        .collect()
}

/// Builds the configured objective and runs to completion.
pub fn run(config: &ExperimentConfig) -> Result<ExperimentState> {
    run_with(config, RunOptions::default())
}

pub fn run_with(config: &ExperimentConfig, opts: RunOptions) -> Result<ExperimentState> {
    let objective = config.objective.build()?;
    run_objective(config, &objective, opts)
}

/// Runs `config` against an already built objective (which must match its K and d).
pub fn run_objective(
    config: &ExperimentConfig,
    objective: &ObjectiveSet,
    opts: RunOptions,
) -> Result<ExperimentState> {
    config.validate()?;
    let hash = config.hash()?;
    let sinks = match &config.output {
        Some(path) => {
            let mut log = JsonlWriter::create(path)?;
            log.write(&LogHeader::new(config)?)?;
            Sinks {
                log: Some(log),
                fits: Some(JsonlWriter::create(&fits_path(path))?),
                timing: Some(JsonlWriter::create(&timing_path(path))?),
            }
        }
        None => Sinks::default(),
    };
    let state = ExperimentState {
        config_hash: hash,
        config: config.clone(),
        records: Vec::new(),
        params: Vec::new(),
        fits: Vec::new(),
    };
    Engine::new(state, objective, sinks)?.drive(opts)
}

/// Continues the run logged at `log_path` to its budget.
///
/// With `expected` set, the log's config hash must match it. A partially written
/// last line is dropped with a warning.
pub fn resume(
    log_path: &Path,
    expected: Option<&ExperimentConfig>,
    opts: RunOptions,
) -> Result<ExperimentState> {
    let contents = read_log(log_path)?;
    let objective = contents.header.config.objective.build()?;
    resume_contents(log_path, contents, expected, &objective, opts)
}

pub fn resume_objective(
    log_path: &Path,
    expected: Option<&ExperimentConfig>,
    objective: &ObjectiveSet,
    opts: RunOptions,
) -> Result<ExperimentState> {
    let contents = read_log(log_path)?;
    resume_contents(log_path, contents, expected, objective, opts)
}

fn resume_contents(
    log_path: &Path,
    contents: LogContents,
    expected: Option<&ExperimentConfig>,
    objective: &ObjectiveSet,
    opts: RunOptions,
) -> Result<ExperimentState> {
    let LogContents {
        header,
        records,
        dropped_tail,
    } = contents;
    if let Some(expected) = expected {
        let given = expected.hash()?;
        if given != header.config_hash {
            return Err(Error::HashMismatch {
                logged: header.config_hash,
                given,
            });
        }
    }
    let mut config = header.config.clone();
    config.output = Some(log_path.to_path_buf());
    let fits_file = fits_path(log_path);
    let timing_file = timing_path(log_path);
    let mut fits: Vec<FitRecord> = read_sidecar(&fits_file)?;

    let mut state = ExperimentState {
        config_hash: header.config_hash.clone(),
        config,
        records,
        params: Vec::new(),
        fits: Vec::new(),
    };
    if state.is_complete() && !dropped_tail {
        state.params = latest_params(&fits, state.config.num_objectives());
        state.fits = fits;
        return Ok(state);
    }

    if dropped_tail {
        ::log::warn!(
            "{}: dropping a partially written last line ({} complete records kept)",
            log_path.display(),
            state.records.len()
        );
    }
    let mut log = JsonlWriter::create(log_path)?;
    log.write(&header)?;
    for r in &state.records {
        log.write(r)?;
    }

    // the last refit before the interruption is redone from the logged data
    let done = state.loop_steps_done();
    let redo = (done > 0).then(|| (done - 1) / state.config.refit_every * state.config.refit_every);
    fits.retain(|f| f.t < redo.unwrap_or(0));
    let mut timing: Vec<TimingRecord> = read_sidecar(&timing_file)?;
    timing.retain(|r| r.t < state.records.len());
    state.fits = fits.clone();

    let sinks = Sinks {
        log: Some(log),
        fits: Some(JsonlWriter::rewrite(&fits_file, &fits)?),
        timing: Some(JsonlWriter::rewrite(&timing_file, &timing)?),
    };
    let mut engine = Engine::new(state, objective, sinks)?;
    if let Some(m) = redo {
        engine.refit(m)?;
    }
    engine.drive(opts)
}

fn latest_params(fits: &[FitRecord], k: usize) -> Vec<KernelParams> {
    let mut params: Vec<Option<KernelParams>> = vec![None; k];
    for f in fits {
        if let Some(slot) = params.get_mut(f.objective_index) {
            *slot = Some(f.params.clone());
        }
    }
    params
        .into_iter()
        .collect::<Option<Vec<_>>>()
        .unwrap_or_default()
}

#[derive(Default)]
struct Sinks {
    log: Option<JsonlWriter>,
    fits: Option<JsonlWriter>,
    timing: Option<JsonlWriter>,
}

/// Per-objective affine map applied to surrogate outputs inside the acquisition,
/// plus the Tchebychev anchor in mapped units.
struct OutputMap {
    lo: Vec<f64>,
    range: Vec<f64>,
    z: Vec<f64>,
}

struct Engine<'a> {
    state: ExperimentState,
    objective: &'a ObjectiveSet,
    weights: WeightDistribution,
    sinks: Sinks,
}

impl<'a> Engine<'a> {
    fn new(state: ExperimentState, objective: &'a ObjectiveSet, sinks: Sinks) -> Result<Self> {
        let config = &state.config;
        if objective.num_objectives() != config.num_objectives() || objective.dim() != config.dim()
        {
            return Err(Error::Config(format!(
                "objective {} has K = {}, d = {} but the config declares K = {}, d = {}",
                objective.name(),
                objective.num_objectives(),
                objective.dim(),
                config.num_objectives(),
                config.dim()
            )));
        }
        let weights = config.weights.clone().sanitized();
        Ok(Engine {
            state,
            objective,
            weights,
            sinks,
        })
    }

    fn config(&self) -> &ExperimentConfig {
        &self.state.config
    }

    fn drive(mut self, opts: RunOptions) -> Result<ExperimentState> {
        let (n_init, budget, seed, dim) = {
            let c = self.config();
            (c.n_init, c.budget, c.seed, c.dim())
        };
        if self.state.records.len() < n_init {
            let design = init_design(seed, n_init, dim);
            for x in design.into_iter().skip(self.state.records.len()) {
                let start = Instant::now();
                self.evaluate_and_record(Phase::Init, x, None, None, start)?;
            }
        }
        for c in self.state.loop_steps_done()..budget {
            if opts.stop_after.is_some_and(|s| c >= s) {
                break;
            }
            self.step(c)?;
        }
        Ok(self.state)
    }

    fn column(&self, k: usize) -> Vec<f64> {
        self.state.records.iter().map(|r| r.y[k]).collect()
    }

    fn inputs(&self) -> Vec<Vec<f64>> {
        self.state.records.iter().map(|r| r.x.clone()).collect()
    }

    /// Refits every objective's hyperparameters on the data available before loop
    /// step `c`. Skipped for random search and with fewer than two observations.
    fn refit(&mut self, c: usize) -> Result<()> {
        let n = self.config().n_init + c;
        if self.config().acquisition.method == Method::Random || n < 2 {
            return Ok(());
        }
        let seen = &self.state.records[..n];
        let inputs: Vec<Vec<f64>> = seen.iter().map(|r| r.x.clone()).collect();
        let k = self.config().num_objectives();
        let seed = self.config().seed;
        let mut params = Vec::with_capacity(k);
        for i in 0..k {
            let targets: Vec<f64> = seen.iter().map(|r| r.y[i]).collect();
            let bounds = self.config().hyper_bounds.scaled_to_targets(&targets);
            let mut r = rng::stream(seed, rng::MLE_RESTARTS, &[c as u64, i as u64]);
            let outcome = fit_hyperparams(&inputs, &targets, &bounds, &mut r)?;
            let record = FitRecord {
                t: c,
                objective_index: i,
                params: outcome.params.clone(),
                log_marginal_likelihood: outcome.log_marginal_likelihood,
                degenerate: outcome.degenerate,
            };
            if let Some(w) = &mut self.sinks.fits {
                w.write(&record)?;
            }
            self.state.fits.push(record);
            params.push(outcome.params);
        }
        ::log::debug!("refit before step {c}: {params:?}");
        self.state.params = params;
        Ok(())
    }

    fn models(&self) -> Result<Vec<GpModel>> {
        let inputs = self.inputs();
        let dim = self.config().dim();
        (0..self.config().num_objectives())
            .map(|i| {
                let targets = self.column(i);
                let params = match self.state.params.get(i) {
                    Some(p) => p.clone(),
                    None => self
                        .config()
                        .hyper_bounds
                        .scaled_to_targets(&targets)
                        .default_params(dim, &targets),
                };
                GpModel::fit(params, inputs.clone(), targets)
            })
            .collect()
    }

    /// With two or more objectives the surrogate outputs are rescaled by the running
    /// min and range of the observations, so weights act on comparable units and the
    /// default anchor is the observed minimum. A single objective is left untouched.
    fn output_map(&self) -> OutputMap {
        let k = self.config().num_objectives();
        let mut lo = vec![0.0; k];
        let mut range = vec![1.0; k];
        let mut min = vec![0.0; k];
        for i in 0..k {
            let col = self.column(i);
            if col.is_empty() {
                continue;
            }
            let cmin = col.iter().copied().fold(f64::INFINITY, f64::min);
            let cmax = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            min[i] = cmin;
            if k > 1 {
                lo[i] = cmin;
                if cmax > cmin {
                    range[i] = cmax - cmin;
                }
            }
        }
        let z_raw = match &self.config().acquisition.reference {
            Some(z) => z.0.clone(),
            None => min,
        };
        let z = (0..k).map(|i| (z_raw[i] - lo[i]) / range[i]).collect();
        OutputMap { lo, range, z }
    }

    fn step(&mut self, c: usize) -> Result<()> {
        let start = Instant::now();
        let (method, scal, k, dim, seed) = {
            let c = self.config();
            (
                c.acquisition.method,
                c.acquisition.scalarization,
                c.num_objectives(),
                c.dim(),
                c.seed,
            )
        };
        if c % self.config().refit_every == 0 {
            self.refit(c)?;
        }
        let mut wr = rng::stream(seed, rng::WEIGHT_SAMPLER, &[c as u64]);
        let lambda = weights_for_scalarization(&self.weights, scal, k, &mut wr)?;

        let (x, acq_value) = match method {
            Method::Random => {
                let mut r = rng::stream(seed, rng::RANDOM_SEARCH, &[c as u64]);
                ((0..dim).map(|_| r.random::<f64>()).collect(), None)
            }
            Method::Ucb => {
                let models = self.models()?;
                let map = self.output_map();
                let beta = self.config().acquisition.beta.value(c + 1)?;
                let mut scratch = Vec::new();
                let mut posts = vec![
                    PosteriorSummary {
                        mean: 0.0,
                        std: 0.0
                    };
                    k
                ];
                let acq = |x: &[f64]| {
                    for (i, (p, m)) in posts.iter_mut().zip(&models).enumerate() {
                        let q = m.posterior_with(x, &mut scratch);
                        p.mean = (q.mean - map.lo[i]) / map.range[i];
                        p.std = q.std / map.range[i];
                    }
                    match scal {
                        Scalarization::Linear => ucb_linear(&lambda, &posts, beta),
                        Scalarization::Tchebychev => ucb_tchebychev(&lambda, &posts, beta, &map.z),
                    }
                };
                let res = direct::maximize(dim, acq, &self.config().acq_opt)?;
                (res.x_best, Some(res.value_best))
            }
            Method::Ts => {
                let models = self.models()?;
                let map = self.output_map();
                let m = self.config().acquisition.num_features;
                let mut r = rng::stream(seed, rng::TS_DRAWS, &[c as u64]);
                let samples = models
                    .iter()
                    .map(|model| draw_spectral_sample(model, m, &mut r))
                    .collect::<Result<Vec<_>>>()?;
                let mut values = vec![0.0; k];
                let acq = |x: &[f64]| {
                    for (i, (v, s)) in values.iter_mut().zip(&samples).enumerate() {
                        *v = (s.eval(x) - map.lo[i]) / map.range[i];
                    }
                    match scal {
                        Scalarization::Linear => linear_unchecked(&lambda, &values),
                        Scalarization::Tchebychev => tchebychev_unchecked(&lambda, &values, &map.z),
                    }
                };
                let res = direct::maximize(dim, acq, &self.config().acq_opt)?;
                (res.x_best, Some(res.value_best))
            }
        };
        self.evaluate_and_record(Phase::Loop, x, Some(lambda), acq_value, start)
    }

    fn evaluate_and_record(
        &mut self,
        phase: Phase,
        x: Vec<f64>,
        lambda: Option<WeightVector>,
        acq_value: Option<f64>,
        start: Instant,
    ) -> Result<()> {
        let t = self.state.records.len();
        let mut noise = rng::stream(self.config().seed, rng::OBJECTIVE_NOISE, &[t as u64]);
        let y = self.objective.evaluate_noisy(&x, &mut noise)?;
        let record = EvaluationRecord {
            t,
            phase,
            x,
            y,
            lambda,
            acq_value,
        };
        if let Some(w) = &mut self.sinks.log {
            w.write(&record)?;
        }
        if let Some(w) = &mut self.sinks.timing {
            w.write(&TimingRecord {
                t,
                wall_ms: start.elapsed().as_secs_f64() * 1e3,
            })?;
        }
        ::log::debug!("t = {t}: x = {:?}, y = {:?}", record.x, record.y);
        self.state.records.push(record);
        Ok(())
    }
}
