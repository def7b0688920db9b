use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const CONFIG: &str = r#"{
  "seed": 11,
  "data": {"synthetic": {"n_train_engines": 5, "n_test_engines": 5, "min_life": 60, "max_life": 90}},
  "window": 20,
  "model": {"hidden_dim": 6, "train": {"epochs": 2}},
  "attack": {"max_windows": 60, "e_fool": 1},
  "report": {"engines": [1, 2]}
}"#;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rul-uap"))
        .args(args)
        .env("UAP_LOG", "error")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn workspace() -> (tempfile::TempDir, PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, CONFIG).unwrap();
    (dir, cfg)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read(p: &Path) -> String {
    std::fs::read_to_string(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

/// Trains both models, attacks with both and writes every report.
fn full_run(cfg: &Path, out: &Path) {
    let base = ["--config", s(cfg), "--out", s(out)];
    for arch in ["lstm", "gru"] {
        ok(&[&base[..], &["train", "--arch", arch]].concat());
        ok(&[&base[..], &["attack", "--arch", arch]].concat());
    }
    ok(&[&base[..], &["eval", "--arch", "lstm", "--perturbation", s(&out.join("perturbation_lstm.json"))]].concat());
    ok(&[&base[..], &["transfer"]].concat());
    ok(&[&base[..], &["sweep", "--arch", "gru"]].concat());
}

#[test]
fn end_to_end_outputs_and_rerun_is_byte_identical() {
    let (dir, cfg) = workspace();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    full_run(&cfg, &a);
    full_run(&cfg, &b);

    let transfer = read(&a.join("transfer.csv"));
    assert_eq!(transfer.lines().count(), 7, "{transfer}");
    assert!(transfer.starts_with("model,attack,fooling_pct,mape,n_samples,n_excluded\n"));
    assert_eq!(read(&a.join("sweep.csv")).lines().count(), 5);
    assert!(read(&a.join("traces.csv")).lines().count() > 1);
    let traj = read(&a.join("trajectory.csv"));
    assert!(traj.lines().skip(1).all(|l| l.starts_with("1,") || l.starts_with("2,")), "{traj}");

    for name in [
        "checkpoint_lstm.json",
        "checkpoint_gru.json",
        "perturbation_lstm.json",
        "perturbation_gru.json",
        "report.csv",
        "trajectory.csv",
        "last_windows.csv",
        "traces.csv",
        "transfer.csv",
        "sweep.csv",
    ] {
        assert_eq!(read(&a.join(name)), read(&b.join(name)), "{name} differs between runs");
    }
}

#[test]
fn eval_without_perturbation_is_baseline_only() {
    let (dir, cfg) = workspace();
    let out = dir.path().join("o");
    let base = ["--config", s(&cfg), "--out", s(&out)];
    ok(&[&base[..], &["train", "--arch", "gru"]].concat());
    ok(&[&base[..], &["eval", "--arch", "gru"]].concat());
    let report = read(&out.join("report.csv"));
    let rows: Vec<&str> = report.lines().skip(1).collect();
    assert_eq!(rows.len(), 1, "{report}");
    assert!(rows[0].starts_with("GRU,None,"));
    assert!(!out.join("traces.csv").exists());
}

#[test]
fn zero_epsilon_writes_a_zero_perturbation() {
    let (dir, cfg) = workspace();
    let out = dir.path().join("o");
    let base = ["--config", s(&cfg), "--out", s(&out)];
    ok(&[&base[..], &["train"]].concat());
    ok(&[&base[..], &["attack", "--epsilon", "0"]].concat());
    let json: serde_json::Value = serde_json::from_str(&read(&out.join("perturbation_lstm.json"))).unwrap();
    assert_eq!(json["shape"], serde_json::json!([20, 14]));
    let rows = json["values"].as_array().unwrap();
    assert_eq!(rows.len(), 20);
    assert!(rows.iter().flat_map(|r| r.as_array().unwrap()).all(|v| v.as_f64() == Some(0.0)));
}

#[test]
fn missing_data_file_is_a_usage_error_naming_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(
        &cfg,
        r#"{"data": {"cmapss": {"train": "nope/train_FD001.txt", "test": "t.txt", "rul": "r.txt"}}}"#,
    )
    .unwrap();
    let out = run(&["--config", s(&cfg), "--out", s(dir.path()), "train"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("train_FD001.txt"), "{err}");
}

#[test]
fn bad_flags_and_configs_exit_with_two() {
    let (dir, cfg) = workspace();
    let out = s(dir.path());
    assert_eq!(run(&["--config", s(&cfg), "--out", out, "attack", "--alpha=-1"]).status.code(), Some(2));
    assert_eq!(run(&["--jobs", "0", "--out", out, "synth"]).status.code(), Some(2));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"windw": 30}"#).unwrap();
    assert_eq!(run(&["--config", s(&bad), "--out", out, "train"]).status.code(), Some(2));
    let missing = run(&["--config", s(&cfg), "--out", out, "eval"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("checkpoint not found"));
}

#[test]
fn synth_files_load_back_as_cmapss() {
    let (dir, cfg) = workspace();
    let data = dir.path().join("data");
    ok(&["--config", s(&cfg), "--out", s(&data), "synth"]);
    let cfg2 = dir.path().join("real.json");
    std::fs::write(
        &cfg2,
        r#"{"data": {"cmapss": {"train": "data/train.txt", "test": "data/test.txt", "rul": "data/RUL.txt"}},
            "window": 20, "model": {"hidden_dim": 4, "train": {"epochs": 1}}}"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&["--config", s(&cfg2), "--out", s(&out), "train", "--arch", "gru"]);
    assert!(out.join("checkpoint_gru.json").exists());
    assert_eq!(read(&out.join("loss_history_gru.csv")).lines().count(), 2);
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["train", "attack", "eval", "sweep", "transfer", "synth"] {
        let out = ok(&[sub, "--help"]);
        assert!(String::from_utf8_lossy(&out.stdout).contains("Usage"), "{sub}");
    }
}
