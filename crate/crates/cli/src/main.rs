use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use mobo::bench::{self, BenchOptions};
use mobo::engine::{self, read_log, ExperimentConfig, RunOptions};
use mobo::regret::{self, RegretContext};
use mobo::scalarize::Scalarization;
use mobo::weights::WeightDistribution;
use mobo::Error;

const SEED_OVERRIDE_VAR: &str = "MOBO_SEED_OVERRIDE";

/// Multi-objective Bayesian optimization with random scalarizations.
///
/// Exit codes: 0 success, 2 invalid configuration or arguments, 3 objective or
/// numeric failure, 4 no ground truth available or missing input files.
#[derive(Parser)]
#[command(name = "mobo", version)]
struct Cli {
    /// More diagnostics on stderr (repeat for debug output).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment from a JSON config.
    Run {
        config: PathBuf,
        /// Log path; defaults to the config's `output`, else the config path with a .jsonl extension.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Continue an interrupted run from its log.
    Resume {
        log: PathBuf,
        /// Refuse to resume unless the log was written for this config.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Seed-averaged regret table over completed runs of one config.
    Regret {
        logs: Vec<PathBuf>,
        /// Preference distribution for the simple-regret proxy, as inline JSON or a file
        /// path. Defaults to the runs' own distribution.
        #[arg(long)]
        weights: Option<String>,
        /// Monte-Carlo weight draws.
        #[arg(long, default_value_t = 1000)]
        mc: usize,
        #[arg(long, default_value_t = 0)]
        mc_seed: u64,
        /// linear or tch; defaults to the runs' scalarization.
        #[arg(long)]
        scalarization: Option<Scalarization>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a benchmark suite (circle, branin_currin, rand6x6) with all methods and baselines.
    Bench {
        suite: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Override the suite's evaluation budget.
        #[arg(long)]
        budget: Option<usize>,
        /// Only these regions (comma separated).
        #[arg(long, value_delimiter = ',')]
        regions: Vec<String>,
        /// Number of seeds per method.
        #[arg(long)]
        seeds: Option<u64>,
    },
    /// Scatter and regret CSVs from a bench directory.
    Plotdata {
        dir: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::Contract(_)
        | Error::HashMismatch { .. }
        | Error::MalformedLog { .. }
        | Error::Json(_) => 2,
        Error::Objective(_) | Error::Protocol(_) | Error::Numeric(_) | Error::Domain(_) => 3,
        Error::Unsupported(_) | Error::Missing(_) => 4,
        Error::Io { .. } => 1,
    }
}

fn seed_override() -> Result<Option<u64>, Error> {
    match std::env::var(SEED_OVERRIDE_VAR) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| {
            Error::Config(format!(
                "{SEED_OVERRIDE_VAR}={v:?} is not an unsigned integer"
            ))
        }),
        Err(_) => Ok(None),
    }
}

fn require_file(path: &Path) -> Result<(), Error> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::Missing(format!("{} does not exist", path.display())))
    }
}

fn cmd_run(config_path: &Path, out: Option<PathBuf>) -> Result<(), Error> {
    if !config_path.exists() {
        return Err(Error::Config(format!(
            "config {} does not exist",
            config_path.display()
        )));
    }
    let mut config = ExperimentConfig::load(config_path)?;
    if let Some(seed) = seed_override()? {
        log::info!("seed overridden to {seed} by {SEED_OVERRIDE_VAR}");
        config.seed = seed;
    }
    let log_path = out
        .or_else(|| config.output.clone())
        .unwrap_or_else(|| config_path.with_extension("jsonl"));
    config.output = Some(log_path.clone());
    let state = engine::run(&config)?;
    log::info!(
        "{} records written to {}",
        state.records.len(),
        log_path.display()
    );
    Ok(())
}

fn cmd_resume(log_path: &Path, config: Option<PathBuf>) -> Result<(), Error> {
    require_file(log_path)?;
    let expected = config.map(|p| ExperimentConfig::load(&p)).transpose()?;
    let state = engine::resume(log_path, expected.as_ref(), RunOptions::default())?;
    log::info!(
        "{} now holds {} records",
        log_path.display(),
        state.records.len()
    );
    Ok(())
}

fn parse_weights(spec: &str) -> Result<WeightDistribution, Error> {
    let text = if spec.trim_start().starts_with('{') {
        spec.to_string()
    } else {
        std::fs::read_to_string(spec)
            .map_err(|e| Error::Config(format!("cannot read weight spec {spec}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("bad weight spec: {e}")))
}

fn cmd_regret(
    logs: &[PathBuf],
    weights: Option<&str>,
    mc: usize,
    mc_seed: u64,
    scalarization: Option<Scalarization>,
    out: &Path,
) -> Result<(), Error> {
    if logs.is_empty() {
        return Err(Error::Config("regret needs at least one log file".into()));
    }
    if mc == 0 {
        return Err(Error::Config("--mc must be at least 1".into()));
    }
    let mut contents = Vec::with_capacity(logs.len());
    for path in logs {
        require_file(path)?;
        contents.push(read_log(path)?);
    }
    let config = contents[0].header.config.clone();
    let objective = config.objective.build_clean()?;
    let ctx = RegretContext::new(&objective)?;
    let dist = match weights {
        Some(spec) => parse_weights(spec)?,
        None => config.weights.clone(),
    };
    let kind = scalarization.unwrap_or(config.acquisition.scalarization);
    let draws = regret::monte_carlo_weights(&dist, kind, config.num_objectives(), mc, mc_seed)?;
    let reports = contents
        .iter()
        .map(|c| regret::regret_report(&ctx, c, kind, &draws))
        .collect::<Result<Vec<_>, _>>()?;
    let rows = regret::bayes_regret_estimate(&reports)?;
    regret::write_csv(out, &rows)
}

fn cmd_bench(suite: &str, out: &Path, opts: BenchOptions) -> Result<(), Error> {
    let suite = bench::suite(suite)?;
    let manifest = bench::run_bench(&suite, out, &opts)?;
    log::info!(
        "{} runs written under {}",
        manifest.runs.len(),
        out.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match cli.command {
        Command::Run { config, out } => cmd_run(&config, out),
        Command::Resume { log, config } => cmd_resume(&log, config),
        Command::Regret {
            logs,
            weights,
            mc,
            mc_seed,
            scalarization,
            out,
        } => cmd_regret(&logs, weights.as_deref(), mc, mc_seed, scalarization, &out),
        Command::Bench {
            suite,
            out,
            jobs,
            budget,
            regions,
            seeds,
        } => cmd_bench(
            &suite,
            &out,
            BenchOptions {
                jobs,
                budget,
                regions,
                seeds,
                ..Default::default()
            },
        ),
        Command::Plotdata { dir, out } => bench::plot_data(&dir, &out).map(|n| {
            log::info!("{n} files written to {}", out.display());
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mobo: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
