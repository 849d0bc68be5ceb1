//! Behavioural tests for the `sembase` binary: exit codes, file formats
//! and the encode -> compose round trip.

use std::path::Path;
use std::process::{Command, Output};

use sembase_core::io::read_corpus;

fn sembase(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sembase"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(path: &Path) {
    std::fs::write(
        path,
        r#"{
  "seed": 7,
  "coding": {"sparsity": 3, "ridge": 0.0},
  "complexity": {"quant_bits": 16, "coeff_bits": 16, "lambda": 1.0},
  "decompose": {"epsilon": 1e-9, "n_range": [2, 5], "restarts": 24,
                 "delta_d": 0.8, "max_iters": 60, "seed": 0, "tau": 0.1},
  "hierarchy": {"rho": 0.9, "min_subsample": 8, "depth_cap": 4},
  "compose": {"mode": "coefficient-range", "theta": null}
}"#,
    )
    .unwrap();
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let out = sembase(&["frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.bin");
    let cfg = dir.path().join("cfg.json");
    assert!(sembase(&[
        "synth",
        "--spec",
        r#"{"kind":"atoms","atoms":3,"d":16,"n":64,"noise":0.0}"#,
        "--seed",
        "7",
        "--out",
        corpus.to_str().unwrap(),
    ])
    .status
    .success());
    std::fs::write(&cfg, r#"{"seed": 1, "unknown_key": true}"#).unwrap();
    let out = sembase(&[
        "decompose",
        "--corpus",
        corpus.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("\"code\":2"), "stderr: {err}");
}

#[test]
fn missing_corpus_exits_with_io_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write_config(&cfg);
    let out = sembase(&[
        "decompose",
        "--corpus",
        dir.path().join("nope.bin").to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        dir.path().join("run").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn infeasible_budget_exits_with_code_three_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.bin");
    let cfg = dir.path().join("cfg.json");
    assert!(sembase(&[
        "synth",
        "--spec",
        r#"{"kind":"atoms","atoms":3,"d":16,"n":64,"noise":0.05}"#,
        "--seed",
        "7",
        "--out",
        corpus.to_str().unwrap(),
    ])
    .status
    .success());
    std::fs::write(
        &cfg,
        r#"{
  "seed": 7,
  "decompose": {"epsilon": 1e-30, "n_range": [2, 2], "restarts": 4,
                 "delta_d": 0.1, "max_iters": 30, "seed": 0, "tau": 0.1}
}"#,
    )
    .unwrap();
    let run = dir.path().join("run");
    let out = sembase(&[
        "decompose",
        "--corpus",
        corpus.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(3));
    // The report is still written and marks the run infeasible.
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(run.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["feasible"], serde_json::Value::Bool(false));
}

#[test]
fn encode_then_compose_round_trips_the_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.bin");
    let cfg = dir.path().join("cfg.json");
    let run = dir.path().join("run");
    write_config(&cfg);
    for args in [
        vec![
            "synth",
            "--spec",
            r#"{"kind":"atoms","atoms":3,"d":16,"n":64,"noise":0.0}"#,
            "--seed",
            "7",
            "--out",
            corpus.to_str().unwrap(),
        ],
        vec![
            "decompose",
            "--corpus",
            corpus.to_str().unwrap(),
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            run.to_str().unwrap(),
        ],
    ] {
        let out = sembase(&args);
        assert!(out.status.success(), "{args:?}: {out:?}");
    }
    let bases = run.join("bases.json");
    let codes = dir.path().join("codes.json");
    let composed = dir.path().join("composed.bin");
    let out = sembase(&[
        "encode",
        "--corpus",
        corpus.to_str().unwrap(),
        "--bases",
        bases.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        codes.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let out = sembase(&[
        "compose",
        "--coeffs",
        codes.to_str().unwrap(),
        "--bases",
        bases.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        composed.to_str().unwrap(),
        "--training",
        corpus.to_str().unwrap(),
        "--journal",
        run.join("knowledge.jsonl").to_str().unwrap(),
    ]);
    assert!(out.status.success());

    // Reconstructions match the originals within the recorded residuals
    // (exact mixtures: tight tolerance).
    let (original, _) = read_corpus(&corpus).unwrap();
    let (rebuilt, _) = read_corpus(&composed).unwrap();
    let codes_file: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&codes).unwrap()).unwrap();
    for (i, (a, b)) in original.samples().iter().zip(rebuilt.samples()).enumerate() {
        let residual = codes_file["codes"][i]["coefficients"]["residual_norm"]
            .as_f64()
            .unwrap();
        let dist: f64 = a
            .values()
            .iter()
            .zip(b.values())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt();
        assert!(dist <= residual + 1e-12, "sample {i}: {dist} > {residual}");
    }

    // Replays of training codes are never journaled as discoveries.
    assert!(
        !run.join("knowledge.jsonl").exists()
            || std::fs::read_to_string(run.join("knowledge.jsonl"))
                .unwrap()
                .trim()
                .is_empty()
    );

    // The run directory aggregates into one summary.
    let summary = dir.path().join("summary.json");
    let out = sembase(&[
        "report",
        "--run",
        run.to_str().unwrap(),
        "--out",
        summary.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let parsed: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(parsed["feasible"], serde_json::Value::Bool(true));
    assert_eq!(parsed["prng"], "chacha8");
}

#[test]
fn partition_prints_the_three_sets() {
    let dir = tempfile::tempdir().unwrap();
    let u = dir.path().join("u.json");
    let m = dir.path().join("m.json");
    let r = dir.path().join("r.json");
    std::fs::write(&u, r#"["1","2","3","4","5","6"]"#).unwrap();
    std::fs::write(&m, r#"["1","2","3","4"]"#).unwrap();
    std::fs::write(&r, r#"{"knowledge":["1"],"codebook":["1","2","3"]}"#).unwrap();
    let out = sembase(&[
        "partition",
        "--universe",
        u.to_str().unwrap(),
        "--message",
        m.to_str().unwrap(),
        "--receiver",
        r.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let parsed: serde_json::Value =
        serde_json::from_str(&String::from_utf8_lossy(&out.stdout)).unwrap();
    assert_eq!(parsed["knowledge"], serde_json::json!(["1"]));
    assert_eq!(parsed["information"], serde_json::json!(["2", "3"]));
    assert_eq!(parsed["dark"], serde_json::json!(["4"]));
}

#[test]
fn oracle_flag_writes_the_cross_check() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("tiny.bin");
    let cfg = dir.path().join("cfg.json");
    // A corpus small enough for the oracle guard: d=2, two directions.
    std::fs::write(
        &cfg,
        r#"{
  "seed": 1,
  "coding": {"sparsity": 1, "ridge": 0.0},
  "decompose": {"epsilon": 1e-6, "n_range": [2, 2], "restarts": 4,
                 "delta_d": 0.01, "max_iters": 30, "seed": 0, "tau": 0.1}
}"#,
    )
    .unwrap();
    assert!(sembase(&[
        "synth",
        "--spec",
        r#"{"kind":"pure","d":2,"n":8}"#,
        "--seed",
        "1",
        "--out",
        corpus.to_str().unwrap(),
    ])
    .status
    .success());
    let run = dir.path().join("run");
    let out = sembase(&[
        "decompose",
        "--corpus",
        corpus.to_str().unwrap(),
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--oracle",
    ]);
    assert!(out.status.success(), "{out:?}");
    assert!(run.join("oracle.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("oracle objective"), "stdout: {stdout}");
}
