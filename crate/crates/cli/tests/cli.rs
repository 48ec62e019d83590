//! The `cohfeed` binary: exit codes, output locations and error messages.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn cohfeed(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohfeed"))
        .current_dir(dir)
        .env_remove("COHFEED_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

#[test]
fn passing_run_writes_results_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let out = cohfeed(dir.path(), &["qubit-sweep"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let results = dir.path().join("results");
    assert!(results.join("qubit_sweep.csv").exists());
    assert!(results.join("qubit-sweep.report.json").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS") && !stdout.contains("FAIL"));
}

#[test]
fn output_directory_from_flag_and_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = cohfeed(dir.path(), &["--out", "flagged", "squeeze"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("flagged/squeeze_moments.csv").exists());

    let out = Command::new(env!("CARGO_BIN_EXE_cohfeed"))
        .current_dir(dir.path())
        .env("COHFEED_OUT_DIR", "from_env")
        .arg("squeeze")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from_env/squeeze_summary.json").exists());
}

#[test]
fn failing_reference_row_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    // A 20-level truncation cannot hold the squeezed state at kappa = 9 gamma.
    let out = cohfeed(dir.path(), &["squeeze", "--truncation", "20"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
}

#[test]
fn configuration_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(
        dir.path().join("bad.json"),
        r#"{"model": "squeeze", "params": {"kapa": 9}}"#,
    )
    .unwrap();
    let out = cohfeed(dir.path(), &["run", "bad.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("params.kapa"), "{}", stderr(&out));

    let out = cohfeed(dir.path(), &["qutrit", "--target", "5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("target"));

    let out = cohfeed(dir.path(), &["qubit-sweep", "--kappa", "1"]);
    assert_eq!(out.status.code(), Some(2));

    let out = cohfeed(dir.path(), &["run", "missing.json"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn report_requires_results() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("empty")).unwrap();
    let out = cohfeed(dir.path(), &["report", "empty"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no results"));

    assert_eq!(cohfeed(dir.path(), &["squeeze"]).status.code(), Some(0));
    let out = cohfeed(dir.path(), &["report", "results"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[squeeze]"));
}

#[test]
fn config_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let config = r#"{
        "model": "qutrit",
        "target": 3,
        "seed": 42,
        "params": {"kappa": 10.0, "initial_states": 3},
        "time": {"t_end": 20.0, "samples": 41}
    }"#;
    fs::write(dir.path().join("qutrit.json"), config).unwrap();
    for out_dir in ["a", "b"] {
        let out = cohfeed(dir.path(), &["--out", out_dir, "run", "qutrit.json"]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    }
    for name in ["qutrit_phi3.csv", "qutrit.report.json"] {
        let a = fs::read(dir.path().join("a").join(name)).unwrap();
        let b = fs::read(dir.path().join("b").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
    }
}
