//! Benchmark suites: every method over several seeds, plus regret tables and
//! plot-ready scatter data.
//!
//! Output layout under the bench directory:
//!
//! ```text
//! manifest.json
//! <region>/<method>/seed_<s>.jsonl        (and .fits.jsonl, .timing.jsonl)
//! <region>/regret_<method>_<scalarization>.csv
//! ```

use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::acquisition::{AcquisitionSpec, Method};
use crate::engine::{self, read_log, ExperimentConfig, RunOptions};
use crate::error::{Error, Result};
use crate::objectives::{ObjectiveKind, ObjectiveSpec};
use crate::regret::{self, RegretContext, RegretReport};
use crate::scalarize::Scalarization;
use crate::weights::WeightDistribution;

pub const SUITES: [&str; 3] = ["circle", "branin_currin", "rand6x6"];
pub const NUM_SEEDS: u64 = 5;
/// Monte-Carlo weight draws for the simple-regret proxy.
pub const MC_DRAWS: usize = 200;
const MC_SEED: u64 = 0;
/// Seed of the fixed random-GP objectives in `rand6x6`.
const RAND6X6_OBJECTIVE_SEED: u64 = 6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchMethod {
    TsLinear,
    TsTch,
    UcbLinear,
    UcbTch,
    UniformRandom,
    /// UCB-linear with the preference distribution's central weight held fixed.
    FixedCenterWeight,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 6] = [
        BenchMethod::TsLinear,
        BenchMethod::TsTch,
        BenchMethod::UcbLinear,
        BenchMethod::UcbTch,
        BenchMethod::UniformRandom,
        BenchMethod::FixedCenterWeight,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::TsLinear => "ts-linear",
            BenchMethod::TsTch => "ts-tch",
            BenchMethod::UcbLinear => "ucb-linear",
            BenchMethod::UcbTch => "ucb-tch",
            BenchMethod::UniformRandom => "uniform-random",
            BenchMethod::FixedCenterWeight => "fixed-center-weight",
        }
    }

    pub fn is_baseline(self) -> bool {
        matches!(
            self,
            BenchMethod::UniformRandom | BenchMethod::FixedCenterWeight
        )
    }

    fn acquisition(self) -> AcquisitionSpec {
        let (method, scal) = match self {
            BenchMethod::TsLinear => (Method::Ts, Scalarization::Linear),
            BenchMethod::TsTch => (Method::Ts, Scalarization::Tchebychev),
            BenchMethod::UcbLinear | BenchMethod::FixedCenterWeight => {
                (Method::Ucb, Scalarization::Linear)
            }
            BenchMethod::UcbTch => (Method::Ucb, Scalarization::Tchebychev),
            BenchMethod::UniformRandom => (Method::Random, Scalarization::Linear),
        };
        AcquisitionSpec::new(method, scal)
    }

    /// Scalarizations the method's regret is reported under.
    pub fn report_scalarizations(self) -> Vec<Scalarization> {
        if self.is_baseline() {
            vec![Scalarization::Linear, Scalarization::Tchebychev]
        } else {
            vec![self.acquisition().scalarization]
        }
    }
}

/// A preference distribution over the front, named after the part it targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub name: String,
    pub weights: WeightDistribution,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Suite {
    pub name: String,
    pub objective: ObjectiveSpec,
    pub budget: usize,
    pub regions: Vec<Region>,
}

fn region(name: &str, weights: WeightDistribution) -> Region {
    Region {
        name: name.to_string(),
        weights,
    }
}

pub fn suite(name: &str) -> Result<Suite> {
    let suite = match name {
        "circle" => Suite {
            name: name.into(),
            objective: ObjectiveSpec::new(ObjectiveKind::Circle),
            budget: 100,
            regions: vec![region(
                "high_f2",
                WeightDistribution::RatioUniform {
                    lo: 0.0,
                    hi: 0.3,
                    index: 0,
                },
            )],
        },
        // boxes are in normalized objective units: "high" leans on the second
        // objective, "mid" on the first
        "branin_currin" => Suite {
            name: name.into(),
            objective: ObjectiveSpec::new(ObjectiveKind::BraninCurrin),
            budget: 150,
            regions: vec![
                region(
                    "high",
                    WeightDistribution::BoundingBox {
                        boxes: vec![[0.6, 0.7], [0.85, 1.0]],
                    },
                ),
                region(
                    "mid",
                    WeightDistribution::BoundingBox {
                        boxes: vec![[0.75, 0.85], [0.55, 0.7]],
                    },
                ),
                region("full", WeightDistribution::SphereUniform),
            ],
        },
        "rand6x6" => Suite {
            name: name.into(),
            objective: ObjectiveSpec::new(ObjectiveKind::RandomGp {
                num_objectives: 6,
                dim: 6,
                seed: RAND6X6_OBJECTIVE_SEED,
            }),
            budget: 100,
            regions: vec![region(
                "box",
                WeightDistribution::BoundingBox {
                    boxes: vec![[2.0 / 3.0, 1.0]; 6],
                },
            )],
        },
        other => {
            return Err(Error::Config(format!(
                "unknown suite {other:?}; valid suites: {}",
                SUITES.join(", ")
            )))
        }
    };
    Ok(suite)
}

#[derive(Clone, Debug, Default)]
pub struct BenchOptions {
    /// Concurrent jobs; 0 and 1 both mean sequential.
    pub jobs: usize,
    pub budget: Option<usize>,
    /// Restrict to these regions (all when empty).
    pub regions: Vec<String>,
    /// Restrict to these methods (all when empty).
    pub methods: Vec<BenchMethod>,
    pub seeds: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestRun {
    pub region: String,
    pub method: BenchMethod,
    pub seed: u64,
    /// Relative to the bench directory.
    pub log: PathBuf,
    pub config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretTable {
    pub region: String,
    pub method: BenchMethod,
    pub scalarization: Scalarization,
    pub csv: PathBuf,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub suite: String,
    pub budget: usize,
    pub seeds: Vec<u64>,
    pub mc_draws: usize,
    pub regions: Vec<Region>,
    pub runs: Vec<ManifestRun>,
    pub regret_tables: Vec<RegretTable>,
    pub note: String,
}

const MANIFEST_NOTE: &str = "Regret is computed in normalized objective space (declared ranges, \
else a 1e5-point probe padded by 1%). Weight distributions are specified directly on normalized \
units and used unchanged; Tchebychev runs use the reciprocal transform of each draw.";

struct Job {
    region: String,
    method: BenchMethod,
    seed: u64,
    config: ExperimentConfig,
    log: PathBuf,
}

fn plan(suite: &Suite, opts: &BenchOptions) -> Result<Vec<Job>> {
    let budget = opts.budget.unwrap_or(suite.budget);
    let methods: Vec<BenchMethod> = if opts.methods.is_empty() {
        BenchMethod::ALL.to_vec()
    } else {
        opts.methods.clone()
    };
    for r in &opts.regions {
        if !suite.regions.iter().any(|s| &s.name == r) {
            let valid: Vec<&str> = suite.regions.iter().map(|r| r.name.as_str()).collect();
            return Err(Error::Config(format!(
                "suite {} has no region {r:?}; valid regions: {}",
                suite.name,
                valid.join(", ")
            )));
        }
    }
    let k = suite.objective.num_objectives();
    let mut jobs = Vec::new();
    for region in &suite.regions {
        if !opts.regions.is_empty() && !opts.regions.contains(&region.name) {
            continue;
        }
        for &method in &methods {
            let weights = match method {
                BenchMethod::FixedCenterWeight => WeightDistribution::Fixed {
                    lambda: region.weights.clone().sanitized().center(k)?,
                },
                _ => region.weights.clone(),
            };
            for seed in 0..opts.seeds.unwrap_or(NUM_SEEDS) {
                let log = PathBuf::from(&region.name)
                    .join(method.name())
                    .join(format!("seed_{seed}.jsonl"));
                let config = ExperimentConfig {
                    objective: suite.objective.clone(),
                    budget,
                    n_init: engine::DEFAULT_N_INIT,
                    acquisition: method.acquisition(),
                    weights: weights.clone(),
                    seed,
                    refit_every: engine::DEFAULT_REFIT_EVERY,
                    acq_opt: Default::default(),
                    hyper_bounds: Default::default(),
                    output: None,
                };
                config.validate()?;
                jobs.push(Job {
                    region: region.name.clone(),
                    method,
                    seed,
                    config,
                    log,
                });
            }
        }
    }
    Ok(jobs)
}

/// Runs `f` on every item with up to `jobs` worker threads, keeping input order.
fn parallel_map<T: Sync, R: Send>(
    items: &[T],
    jobs: usize,
    f: impl Fn(&T) -> Result<R> + Sync,
) -> Result<Vec<R>> {
    let workers = jobs.clamp(1, items.len().max(1));
    if workers == 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<R>>>> =
        Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                results.lock().unwrap_or_else(|p| p.into_inner())[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .unwrap_or_else(|p| p.into_inner())
        .into_iter()
        .map(|r| r.expect("every item processed"))
        .collect()
}

pub fn regret_csv_name(method: BenchMethod, kind: Scalarization) -> String {
    format!("regret_{}_{}.csv", method.name(), kind.name())
}

/// Runs a suite into `out_dir` and writes the manifest and regret tables.
pub fn run_bench(suite: &Suite, out_dir: &Path, opts: &BenchOptions) -> Result<RunManifest> {
    let jobs = plan(suite, opts)?;
    let budget = opts.budget.unwrap_or(suite.budget);
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let hashes = parallel_map(&jobs, opts.jobs, |job| {
        let mut config = job.config.clone();
        config.output = Some(out_dir.join(&job.log));
        log::info!("{} {} seed {}", job.region, job.method.name(), job.seed);
        let state = engine::run_with(&config, RunOptions::default())?;
        Ok(state.config_hash)
    })?;

    let objective = suite.objective.build_clean()?;
    let ctx = RegretContext::new(&objective)?;
    let k = objective.num_objectives();
    let mut tables = Vec::new();
    let mut regions = Vec::new();
    for region in &suite.regions {
        if !jobs.iter().any(|j| j.region == region.name) {
            continue;
        }
        regions.push(region.clone());
        for kind in [Scalarization::Linear, Scalarization::Tchebychev] {
            let weights = regret::monte_carlo_weights(&region.weights, kind, k, MC_DRAWS, MC_SEED)?;
            let wanted: Vec<&Job> = jobs
                .iter()
                .filter(|j| {
                    j.region == region.name && j.method.report_scalarizations().contains(&kind)
                })
                .collect();
            let reports: Vec<RegretReport> = parallel_map(&wanted, opts.jobs, |job| {
                let contents = read_log(&out_dir.join(&job.log))?;
                regret::regret_report(&ctx, &contents, kind, &weights)
            })?;
            let mut methods: Vec<BenchMethod> = wanted.iter().map(|j| j.method).collect();
            methods.dedup();
            for method in methods {
                let mine: Vec<RegretReport> = wanted
                    .iter()
                    .zip(&reports)
                    .filter(|(j, _)| j.method == method)
                    .map(|(_, r)| r.clone())
                    .collect();
                let rows = regret::bayes_regret_estimate(&mine)?;
                let csv = PathBuf::from(&region.name).join(regret_csv_name(method, kind));
                regret::write_csv(&out_dir.join(&csv), &rows)?;
                tables.push(RegretTable {
                    region: region.name.clone(),
                    method,
                    scalarization: kind,
                    csv,
                });
            }
        }
    }

    let manifest = RunManifest {
        suite: suite.name.clone(),
        budget,
        seeds: (0..opts.seeds.unwrap_or(NUM_SEEDS)).collect(),
        mc_draws: MC_DRAWS,
        regions,
        runs: jobs
            .iter()
            .zip(hashes)
            .map(|(j, config_hash)| ManifestRun {
                region: j.region.clone(),
                method: j.method,
                seed: j.seed,
                log: j.log.clone(),
                config_hash,
            })
            .collect(),
        regret_tables: tables,
        note: MANIFEST_NOTE.into(),
    };
    let path = out_dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    std::fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

pub fn read_manifest(bench_dir: &Path) -> Result<RunManifest> {
    let path = bench_dir.join("manifest.json");
    let text = std::fs::read_to_string(&path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::Missing(format!("{} not found", path.display())),
        _ => Error::io(&path, e),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::MalformedLog {
        path,
        reason: e.to_string(),
    })
}

/// Writes one scatter CSV (`t,y1..yK`) per run and copies the regret tables.
/// Returns the number of files written.
pub fn plot_data(bench_dir: &Path, out_dir: &Path) -> Result<usize> {
    let manifest = read_manifest(bench_dir)?;
    let mut written = 0;
    for run in &manifest.runs {
        let log_path = bench_dir.join(&run.log);
        if !log_path.exists() {
            return Err(Error::Missing(format!(
                "log {} not found",
                log_path.display()
            )));
        }
        let contents = read_log(&log_path)?;
        let k = contents.header.config.num_objectives();
        let mut csv = String::from("t");
        for i in 1..=k {
            csv.push_str(&format!(",y{i}"));
        }
        csv.push('\n');
        for r in &contents.records {
            csv.push_str(&r.t.to_string());
            for v in &r.y {
                csv.push_str(&format!(",{v}"));
            }
            csv.push('\n');
        }
        let target = out_dir.join(run.log.with_extension("csv"));
        write_file(&target, csv.as_bytes())?;
        written += 1;
    }
    for table in &manifest.regret_tables {
        let source = bench_dir.join(&table.csv);
        let bytes = std::fs::read(&source).map_err(|e| match e.kind() {
            std::io::ErrorKind::NotFound => {
                Error::Missing(format!("regret table {} not found", source.display()))
            }
            _ => Error::io(&source, e),
        })?;
        write_file(&out_dir.join(&table.csv), &bytes)?;
        written += 1;
    }
    Ok(written)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
