mod common;

use std::fs;
use std::path::Path;

use mobo::engine::{
    self, fits_path, read_log, read_sidecar, timing_path, ExperimentConfig, FitRecord, Phase,
    RunOptions, TimingRecord,
};
use mobo::Error;
use tempfile::tempdir;

const CIRCLE: &str = r#"{"kind": "circle"}"#;
const DIRICHLET: &str = r#"{"kind": "flat_dirichlet"}"#;

fn circle_config(
    method: &str,
    scal: &str,
    budget: usize,
    seed: u64,
    out: &Path,
) -> ExperimentConfig {
    let mut c = ExperimentConfig::from_json(&common::config_json(
        CIRCLE, method, scal, DIRICHLET, budget, seed,
    ))
    .unwrap();
    c.output = Some(out.to_path_buf());
    c
}

fn bytes(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn zero_budget_runs_only_the_design() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("run.jsonl");
    let state = engine::run(&circle_config("ts", "tch", 0, 1, &log)).unwrap();
    assert_eq!(state.records.len(), 5);
    assert!(state.is_complete());
    assert!(state.fits.is_empty());
    let contents = read_log(&log).unwrap();
    assert_eq!(contents.records.len(), 5);
    assert!(contents
        .records
        .iter()
        .all(|r| r.phase == Phase::Init && r.lambda.is_none()));
}

#[test]
fn same_seed_gives_identical_logs() {
    let dir = tempdir().unwrap();
    for method in ["ts", "ucb"] {
        let a = dir.path().join(format!("{method}_a.jsonl"));
        let b = dir.path().join(format!("{method}_b.jsonl"));
        engine::run(&circle_config(method, "linear", 12, 3, &a)).unwrap();
        engine::run(&circle_config(method, "linear", 12, 3, &b)).unwrap();
        assert_eq!(bytes(&a), bytes(&b), "{method}");
        assert_eq!(bytes(&fits_path(&a)), bytes(&fits_path(&b)));
        let c = dir.path().join(format!("{method}_c.jsonl"));
        engine::run(&circle_config(method, "linear", 12, 4, &c)).unwrap();
        assert_ne!(read_log(&a).unwrap().records, read_log(&c).unwrap().records);
    }
}

#[test]
fn interrupted_run_resumes_bit_exact() {
    let dir = tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let part = dir.path().join("part.jsonl");
    engine::run(&circle_config("ucb", "tch", 25, 7, &full)).unwrap();
    let cfg = circle_config("ucb", "tch", 25, 7, &part);
    let stopped = engine::run_with(
        &cfg,
        RunOptions {
            stop_after: Some(13),
        },
    )
    .unwrap();
    assert_eq!(stopped.loop_steps_done(), 13);
    assert!(!stopped.is_complete());
    let resumed = engine::resume(&part, Some(&cfg), RunOptions::default()).unwrap();
    assert!(resumed.is_complete());
    assert_eq!(bytes(&full), bytes(&part));
    assert_eq!(bytes(&fits_path(&full)), bytes(&fits_path(&part)));
    let timing: Vec<TimingRecord> = read_sidecar(&timing_path(&part)).unwrap();
    assert_eq!(
        timing.iter().map(|r| r.t).collect::<Vec<_>>(),
        (0..30).collect::<Vec<_>>()
    );
}

#[test]
fn resuming_a_complete_log_changes_nothing() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("done.jsonl");
    let cfg = circle_config("ts", "linear", 6, 2, &log);
    engine::run(&cfg).unwrap();
    let before = bytes(&log);
    let fits_before = bytes(&fits_path(&log));
    let state = engine::resume(&log, Some(&cfg), RunOptions::default()).unwrap();
    assert!(state.is_complete());
    assert_eq!(state.params.len(), 2);
    assert_eq!(bytes(&log), before);
    assert_eq!(bytes(&fits_path(&log)), fits_before);
}

#[test]
fn edited_config_is_refused() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("a.jsonl");
    let cfg = circle_config("ts", "linear", 6, 2, &log);
    engine::run_with(
        &cfg,
        RunOptions {
            stop_after: Some(2),
        },
    )
    .unwrap();
    let mut edited = cfg.clone();
    edited.budget = 7;
    let err = engine::resume(&log, Some(&edited), RunOptions::default()).unwrap_err();
    assert!(matches!(err, Error::HashMismatch { .. }), "{err}");
    // The output path is not part of the identity.
    let mut moved = cfg.clone();
    moved.output = Some(dir.path().join("elsewhere.jsonl"));
    engine::resume(&log, Some(&moved), RunOptions::default()).unwrap();
}

#[test]
fn tampered_header_is_malformed() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("a.jsonl");
    engine::run(&circle_config("random", "linear", 3, 2, &log)).unwrap();
    let text = fs::read_to_string(&log)
        .unwrap()
        .replacen("\"budget\":3", "\"budget\":4", 1);
    fs::write(&log, text).unwrap();
    assert!(matches!(read_log(&log), Err(Error::MalformedLog { .. })));
}

#[test]
fn truncated_tail_is_dropped_and_rerun() {
    let dir = tempdir().unwrap();
    let full = dir.path().join("full.jsonl");
    let cut = dir.path().join("cut.jsonl");
    engine::run(&circle_config("ts", "tch", 12, 5, &full)).unwrap();
    let cfg = circle_config("ts", "tch", 12, 5, &cut);
    engine::run_with(
        &cfg,
        RunOptions {
            stop_after: Some(8),
        },
    )
    .unwrap();
    let text = fs::read_to_string(&cut).unwrap();
    let keep = text.len() - 20;
    fs::write(&cut, &text[..keep]).unwrap();
    let contents = read_log(&cut).unwrap();
    assert!(contents.dropped_tail);
    assert_eq!(contents.records.len(), 5 + 7);
    engine::resume(&cut, Some(&cfg), RunOptions::default()).unwrap();
    assert_eq!(bytes(&full), bytes(&cut));
}

#[test]
fn refits_happen_on_schedule() {
    let dir = tempdir().unwrap();
    let log = dir.path().join("r.jsonl");
    let state = engine::run(&circle_config("ucb", "linear", 25, 1, &log)).unwrap();
    let fits: Vec<FitRecord> = read_sidecar(&fits_path(&log)).unwrap();
    assert_eq!(fits, state.fits);
    let steps: Vec<(usize, usize)> = fits.iter().map(|f| (f.t, f.objective_index)).collect();
    assert_eq!(
        steps,
        vec![(0, 0), (0, 1), (10, 0), (10, 1), (20, 0), (20, 1)]
    );

    let random = engine::run(&circle_config(
        "random",
        "linear",
        25,
        1,
        &dir.path().join("x.jsonl"),
    ))
    .unwrap();
    assert!(random.fits.is_empty());
}

#[test]
fn record_invariants() {
    let dir = tempdir().unwrap();
    for (method, scal) in [
        ("ts", "linear"),
        ("ts", "tch"),
        ("ucb", "linear"),
        ("ucb", "tch"),
        ("random", "tch"),
    ] {
        let log = dir.path().join(format!("{method}_{scal}.jsonl"));
        let state = engine::run(&circle_config(method, scal, 8, 11, &log)).unwrap();
        let on_disk = read_log(&log).unwrap();
        assert_eq!(on_disk.records, state.records);
        for (i, r) in state.records.iter().enumerate() {
            assert_eq!(r.t, i);
            assert!(r.x.iter().all(|v| (0.0..=1.0).contains(v)));
            assert_eq!(r.y.len(), 2);
            if i < 5 {
                assert_eq!(r.phase, Phase::Init);
                assert!(r.lambda.is_none() && r.acq_value.is_none());
            } else {
                assert_eq!(r.phase, Phase::Loop);
                let l = r.lambda.as_ref().unwrap().as_slice();
                assert!((l.iter().sum::<f64>() - 1.0).abs() < 1e-9);
                assert!(l.iter().all(|v| *v >= 1e-6));
                assert_eq!(r.acq_value.is_some(), method != "random");
            }
        }
    }
}

#[test]
fn single_objective_matches_reference_gp_ucb() {
    for seed in [0u64, 1] {
        let cfg = ExperimentConfig::from_json(&common::config_json(
            &format!(r#"{{"kind": "random_gp", "num_objectives": 1, "dim": 2, "seed": {seed}}}"#),
            "ucb",
            "linear",
            r#"{"kind": "fixed", "lambda": [1.0]}"#,
            25,
            seed + 100,
        ))
        .unwrap();
        let state = engine::run(&cfg).unwrap();
        let reference = common::reference_gp_ucb(&cfg);
        assert_eq!(state.records.len(), reference.len());
        for (r, (x, y)) in state.records.iter().zip(&reference) {
            assert_eq!(&r.x, x, "t = {}", r.t);
            assert_eq!(r.y[0], *y, "t = {}", r.t);
        }
    }
}

#[test]
fn killed_child_run_is_resumable() {
    let dir = tempdir().unwrap();
    let flag = dir.path().join("die");
    // Echoes x back as y; exits after 12 requests while the flag file exists.
    let command = format!(
        "n=0; while read -r line; do n=$((n+1)); if [ -e '{}' ] && [ $n -gt 12 ]; then exit 1; fi; echo \"$line\" | sed 's/\"x\"/\"y\"/'; done",
        flag.display()
    );
    let objective = serde_json::json!({
        "kind": "subprocess", "command": command, "num_objectives": 2, "dim": 2, "timeout_secs": 20.0
    });
    let make = |out: &Path| {
        let mut c = ExperimentConfig::from_json(&common::config_json(
            &objective.to_string(),
            "ts",
            "linear",
            DIRICHLET,
            10,
            9,
        ))
        .unwrap();
        c.output = Some(out.to_path_buf());
        c
    };
    let clean = dir.path().join("clean.jsonl");
    engine::run(&make(&clean)).unwrap();

    fs::write(&flag, "").unwrap();
    let killed = dir.path().join("killed.jsonl");
    let err = engine::run(&make(&killed)).unwrap_err();
    assert!(
        matches!(err, Error::Objective(_) | Error::Protocol(_)),
        "{err}"
    );
    assert_eq!(read_log(&killed).unwrap().records.len(), 12);

    fs::remove_file(&flag).unwrap();
    let state = engine::resume(&killed, None, RunOptions::default()).unwrap();
    assert!(state.is_complete());
    assert_eq!(bytes(&clean), bytes(&killed));
    for r in &state.records {
        assert_eq!(r.x, r.y);
    }
}
