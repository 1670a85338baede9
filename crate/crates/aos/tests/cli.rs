use std::path::Path;
use std::process::{Command, Output};

fn aos(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_aos")).args(args).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn missing_config_is_a_usage_error_naming_the_file() {
    let out = aos(&["run", "--config", "/nonexistent/method.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/method.json"));
}

#[test]
fn unknown_preset_is_rejected() {
    let out = aos(&["run", "--preset", "No-Such-Method"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn summary_goes_to_stdout_without_a_file() {
    let out = aos(&["run", "--preset", "U-AOS-FW", "--dim", "2", "--budget", "2000"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["evaluations"].as_u64().unwrap() <= 2000);
}

#[test]
fn tuned_configuration_runs_again() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("train.json");
    let tuned = dir.path().join("tuned.json");
    std::fs::write(&manifest, r#"{"problems": [{"function": 1, "dim": 2}]}"#).unwrap();
    let out = aos(&[
        "tune",
        "--manifest",
        path(&manifest),
        "--total-runs",
        "40",
        "--min-instances",
        "3",
        "--budget-per-dim",
        "200",
        "--starting-presets",
        "--out",
        path(&tuned),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = aos(&["run", "--config", path(&tuned), "--dim", "2", "--budget", "1000"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn collapsed_space_returns_its_only_configuration() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("train.json");
    let start = dir.path().join("start.json");
    let space = dir.path().join("space.json");
    let tuned = dir.path().join("tuned.json");
    std::fs::write(&manifest, r#"{"problems": [{"function": 1, "dim": 2}]}"#).unwrap();
    std::fs::write(
        &space,
        r#"{"parameters": [{"name": "F", "domain": {"kind": "real", "lo": 0.5, "hi": 0.5}}]}"#,
    )
    .unwrap();
    let out = aos(&[
        "tune",
        "--manifest",
        path(&manifest),
        "--space",
        path(&space),
        "--out",
        path(&start),
        "--total-runs",
        "20",
        "--min-instances",
        "2",
        "--budget-per-dim",
        "100",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let out = aos(&[
        "tune",
        "--manifest",
        path(&manifest),
        "--space",
        path(&space),
        "--start",
        path(&start),
        "--out",
        path(&tuned),
        "--total-runs",
        "20",
        "--min-instances",
        "2",
        "--budget-per-dim",
        "100",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let a: serde_json::Value = serde_json::from_slice(&std::fs::read(&start).unwrap()).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&std::fs::read(&tuned).unwrap()).unwrap();
    assert_eq!(a, b);
}

#[test]
fn enumerate_rejects_unknown_component() {
    let out = aos(&["enumerate", "--component", "reward=Nope"]);
    assert_eq!(out.status.code(), Some(2));
}
