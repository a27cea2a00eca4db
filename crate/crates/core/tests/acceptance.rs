//! Acceptance criteria 1-9. Runs as a plain binary and prints one line per criterion.

mod common;

use std::fs;
use std::path::Path;
use std::time::{Duration, Instant};

use mobo::acquisition::{ucb_linear, ucb_tchebychev};
use mobo::bench::{self, BenchMethod, BenchOptions};
use mobo::direct::{maximize, OptBudget};
use mobo::engine::{self, fits_path, read_log, ExperimentConfig, LogContents, RunOptions};
use mobo::gp::{draw_prior_sample, GpModel, KernelParams, PosteriorSummary};
use mobo::objectives::circle;
use mobo::regret::{self, RegretContext};
use mobo::scalarize::{transform_weights, Scalarization, WeightVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn criterion_1() -> Outcome {
    let (s, bw) = (1.3, [0.3, 0.45]);
    let params = KernelParams::new(s, bw.to_vec(), 1e-3).unwrap();
    let mut worst: f64 = 0.0;
    for (n, seed) in [(1usize, 1u64), (5, 2), (25, 3)] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xs = common::uniform_points(n, 2, &mut rng);
        let ys: Vec<f64> = xs
            .iter()
            .map(|x| (4.0 * x[0]).sin() - x[1] * x[1])
            .collect();
        let model = GpModel::fit(params.clone(), xs.clone(), ys.clone()).unwrap();
        for q in common::uniform_points(20, 2, &mut rng) {
            let got = model.posterior(&q).unwrap();
            let (m, v) = common::dense_posterior(s, &bw, model.effective_noise(), &xs, &ys, &q);
            worst = worst
                .max((got.mean - m).abs() / m.abs())
                .max((got.std * got.std - v).abs() / v.abs());
        }
    }
    outcome(worst <= 1e-8, format!("max relative error {worst:.2e}"))
}

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for _ in 0..10_000 {
        let k = rng.random_range(2..=6);
        let e: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
        let total: f64 = e.iter().sum();
        let raw: Vec<f64> = e.iter().map(|v| v / total).collect();
        let lambda = WeightVector::normalized(raw).unwrap();
        let back = transform_weights(&transform_weights(&lambda).unwrap()).unwrap();
        for (a, b) in back.as_slice().iter().zip(lambda.as_slice()) {
            worst = worst.max((a - b).abs());
        }
    }
    let p = [
        PosteriorSummary {
            mean: 1.0,
            std: 0.2,
        },
        PosteriorSummary {
            mean: 2.0,
            std: 0.3,
        },
    ];
    let lin = ucb_linear(&[0.5, 0.5], &p, 4.0);
    let tch = ucb_tchebychev(&[0.5, 0.5], &p, 4.0, &[0.0, 0.0]);
    let lin_ref = 0.5 * 1.0 + 0.5 * 2.0 + 2.0 * (0.25 * 0.04 + 0.25 * 0.09f64).sqrt();
    let tch_ref = f64::min(0.5 * (1.0 + 2.0 * 0.2), 0.5 * (2.0 + 2.0 * 0.3));
    let spot = (lin - lin_ref).abs().max((tch - tch_ref).abs());
    outcome(
        worst <= 1e-12 && spot <= 1e-12,
        format!("involution error {worst:.1e}, spot-value error {spot:.1e} (ucb linear {lin:.5}, tch {tch})"),
    )
}

fn neg_branin01(u: &[f64]) -> f64 {
    use std::f64::consts::PI;
    let x1 = -5.0 + 15.0 * u[0];
    let x2 = 15.0 * u[1];
    let a = x2 - 5.1 * x1 * x1 / (4.0 * PI * PI) + 5.0 * x1 / PI - 6.0;
    -(a * a + 10.0 * (1.0 - 1.0 / (8.0 * PI)) * x1.cos() + 10.0)
}

fn criterion_3() -> Outcome {
    let mut grid = f64::NEG_INFINITY;
    for i in 0..1000 {
        for j in 0..1000 {
            grid = grid.max(neg_branin01(&[i as f64 / 999.0, j as f64 / 999.0]));
        }
    }
    let res = maximize(2, neg_branin01, &OptBudget::with_evals(2000)).unwrap();
    let branin_ok = (res.value_best - grid).abs() <= 1e-2
        && (res.value_best + 0.397887).abs() <= 1e-2
        && res.evals_used <= 2000;
    let params = KernelParams::new(1.0, vec![0.2, 0.2], 0.0).unwrap();
    let mut wins = 0;
    for seed in 0..10u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let f = draw_prior_sample(&params, 0.0, 512, &mut rng);
        let best = maximize(2, |x| f.eval(x), &OptBudget::with_evals(2000))
            .unwrap()
            .value_best;
        let random = (0..2000)
            .map(|_| f.eval(&[rng.random(), rng.random()]))
            .fold(f64::NEG_INFINITY, f64::max);
        wins += usize::from(best >= random);
    }
    outcome(
        branin_ok && wins >= 8,
        format!(
            "branin {:.6} in {} evals (grid {grid:.6}), beats random on {wins}/10 draws",
            res.value_best, res.evals_used
        ),
    )
}

fn max_abs_cov_error(draws: &[Vec<f64>], k: &[Vec<f64>]) -> f64 {
    let c = common::empirical_cov(draws);
    let mut worst: f64 = 0.0;
    for i in 0..k.len() {
        for j in 0..k.len() {
            worst = worst.max((c[i][j] - k[i][j]).abs());
        }
    }
    worst
}

fn criterion_4() -> Outcome {
    // Unit scale and the library's default starting bandwidth.
    let bw = [0.5, 0.5];
    let params = KernelParams::new(1.0, bw.to_vec(), 0.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let pts = common::uniform_points(50, 2, &mut rng);
    let k = common::gram(1.0, &bw, &pts, 0.0);
    let draws: Vec<Vec<f64>> = (0..2000)
        .map(|_| {
            let s = draw_prior_sample(&params, 0.0, 1024, &mut rng);
            pts.iter().map(|p| s.eval(p)).collect()
        })
        .collect();
    let err = max_abs_cov_error(&draws, &k);
    // The same statistic for exact joint-Gaussian draws, as a noise-floor reference.
    let mut jittered = k.clone();
    for (i, row) in jittered.iter_mut().enumerate() {
        row[i] += 1e-10;
    }
    let exact: Vec<Vec<f64>> = (0..2000)
        .map(|_| common::sample_mvn(&[0.0; 50], &jittered, &mut rng))
        .collect();
    let floor = max_abs_cov_error(&exact, &k);
    outcome(
        err <= 0.05,
        format!("max-abs covariance error {err:.4} (exact sampler with the same draw count: {floor:.4})"),
    )
}

fn circle_config(
    method: &str,
    scal: &str,
    weights: &str,
    budget: usize,
    seed: u64,
) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"objective": {{"kind": "circle"}}, "budget": {budget},
            "acquisition": {{"method": "{method}", "scalarization": "{scal}"}},
            "weights": {weights}, "seed": {seed}}}"#
    ))
    .unwrap()
}

fn criterion_5() -> Outcome {
    let mut good = 0;
    let mut fractions = Vec::new();
    for seed in 0..5 {
        let cfg = circle_config(
            "ts",
            "tch",
            r#"{"kind": "ratio_uniform", "lo": 0.0, "hi": 0.3}"#,
            100,
            seed,
        );
        let state = engine::run(&cfg).unwrap();
        let last = &state.records[state.records.len() - 50..];
        let hits = last
            .iter()
            .filter(|r| {
                let f = circle(r.x[0], r.x[1]);
                f[1] > f[0]
            })
            .count();
        let frac = hits as f64 / 50.0;
        fractions.push(format!("{frac:.2}"));
        good += usize::from(frac >= 0.6);
    }
    outcome(
        good >= 4,
        format!(
            "{good}/5 seeds with >= 60% of the last 50 in f2 > f1 ({})",
            fractions.join(", ")
        ),
    )
}

fn last_sr(path: &Path) -> f64 {
    let text = fs::read_to_string(path).unwrap();
    let last = text.lines().last().unwrap();
    last.split(',').nth(1).unwrap().parse().unwrap()
}

fn criterion_6() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let suite = bench::suite("branin_currin").unwrap();
    let methods = vec![
        BenchMethod::TsLinear,
        BenchMethod::TsTch,
        BenchMethod::UcbLinear,
        BenchMethod::UcbTch,
        BenchMethod::UniformRandom,
    ];
    let opts = BenchOptions {
        jobs: std::thread::available_parallelism().map_or(1, |n| n.get()),
        regions: vec!["full".into()],
        methods: methods.clone(),
        ..Default::default()
    };
    let manifest = bench::run_bench(&suite, dir.path(), &opts).unwrap();
    let table = |m: BenchMethod, k: Scalarization| {
        let t = manifest
            .regret_tables
            .iter()
            .find(|t| t.method == m && t.scalarization == k)
            .unwrap();
        last_sr(&dir.path().join(&t.csv))
    };
    let mut pass = true;
    let mut parts = Vec::new();
    for m in &methods[..4] {
        let kind = m.report_scalarizations()[0];
        let mine = table(*m, kind);
        let random = table(BenchMethod::UniformRandom, kind);
        pass &= mine <= random;
        parts.push(format!("{} {mine:.4} vs random {random:.4}", m.name()));
    }
    outcome(pass, format!("SR proxy at T=150: {}", parts.join("; ")))
}

fn criterion_7() -> Outcome {
    let (mut at50, mut at200) = (0.0, 0.0);
    for seed in 0..5u64 {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"objective": {{"kind": "random_gp", "num_objectives": 2, "dim": 2, "seed": {seed}}},
                "budget": 200, "acquisition": {{"method": "ucb", "scalarization": "linear"}},
                "weights": {{"kind": "flat_dirichlet"}}, "seed": {seed}}}"#
        ))
        .unwrap();
        let state = engine::run(&cfg).unwrap();
        let objective = cfg.objective.build_clean().unwrap();
        let ctx = RegretContext::new(&objective).unwrap();
        let log = LogContents {
            header: engine::LogHeader::new(&cfg).unwrap(),
            records: state.records,
            dropped_tail: false,
        };
        let mc =
            regret::monte_carlo_weights(&cfg.weights, Scalarization::Linear, 2, 10, 0).unwrap();
        let report = regret::regret_report(&ctx, &log, Scalarization::Linear, &mc).unwrap();
        at50 += report.cumulative[49] / 50.0 / 5.0;
        at200 += report.cumulative[199] / 200.0 / 5.0;
    }
    outcome(
        at200 < at50,
        format!("mean R_T/T: {at50:.4} at T=50, {at200:.4} at T=200"),
    )
}

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let cfg = circle_config("ucb", "tch", r#"{"kind": "flat_dirichlet"}"#, 100, 8);
    let run_to = |name: &str| {
        let mut c = cfg.clone();
        c.output = Some(dir.path().join(name));
        c
    };
    let a = run_to("a.jsonl");
    let b = run_to("b.jsonl");
    let c = run_to("c.jsonl");
    engine::run(&a).unwrap();
    engine::run(&b).unwrap();
    engine::run_with(
        &c,
        RunOptions {
            stop_after: Some(30),
        },
    )
    .unwrap();
    let partial = read_log(c.output.as_ref().unwrap()).unwrap().records.len();
    engine::resume(
        c.output.as_ref().unwrap(),
        Some(&cfg),
        RunOptions::default(),
    )
    .unwrap();
    let bytes = |p: &Path| fs::read(p).unwrap();
    let pa = a.output.unwrap();
    let pb = b.output.unwrap();
    let pc = c.output.unwrap();
    let same = bytes(&pa) == bytes(&pb);
    let resumed = bytes(&pa) == bytes(&pc) && bytes(&fits_path(&pa)) == bytes(&fits_path(&pc));
    outcome(
        same && resumed && partial == 40,
        format!("repeat run identical: {same}; interrupted after 30 of 100 steps and resumed, identical: {resumed}"),
    )
}

fn criterion_9() -> Outcome {
    let mut mismatches = 0;
    let mut compared = 0;
    for seed in [0u64, 1] {
        let cfg = ExperimentConfig::from_json(&format!(
            r#"{{"objective": {{"kind": "random_gp", "num_objectives": 1, "dim": 2, "seed": {seed}}},
                "budget": 30, "acquisition": {{"method": "ucb", "scalarization": "linear"}},
                "weights": {{"kind": "fixed", "lambda": [1.0]}}, "seed": {seed}}}"#
        ))
        .unwrap();
        let state = engine::run(&cfg).unwrap();
        let reference = common::reference_gp_ucb(&cfg);
        compared += reference.len();
        mismatches += state
            .records
            .iter()
            .zip(&reference)
            .filter(|(r, (x, y))| &r.x != x || r.y[0] != *y)
            .count();
        mismatches += state.records.len().abs_diff(reference.len());
    }
    outcome(
        mismatches == 0,
        format!("{mismatches} of {compared} evaluations differ from the reference GP-UCB"),
    )
}

fn main() {
    let criteria: [(&str, fn() -> Outcome, Duration); 9] = [
        ("GP oracle equivalence", criterion_1, Duration::from_secs(1)),
        ("scalarization algebra", criterion_2, Duration::from_secs(1)),
        ("DIRECT optimizer", criterion_3, Duration::from_secs(30)),
        (
            "spectral sample fidelity",
            criterion_4,
            Duration::from_secs(60),
        ),
        ("preference steering", criterion_5, Duration::from_secs(300)),
        ("regret dominance", criterion_6, Duration::from_secs(1800)),
        (
            "empirical sublinearity",
            criterion_7,
            Duration::from_secs(1200),
        ),
        (
            "determinism and resume",
            criterion_8,
            Duration::from_secs(120),
        ),
        (
            "single-objective reduction",
            criterion_9,
            Duration::from_secs(120),
        ),
    ];
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let pass = out.pass && elapsed <= *limit;
        failed += usize::from(!pass);
        println!(
            "criterion {n} ({name}): {} | {} | {:.1}s (limit {}s)",
            if pass { "PASS" } else { "FAIL" },
            out.detail,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
