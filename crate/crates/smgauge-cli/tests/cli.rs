//! The `smgauge` binary: exit codes and output files.

use std::path::Path;
use std::process::{Command, Output};

fn smgauge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smgauge")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, patch: impl FnOnce(&mut serde_json::Value)) -> String {
    let mut v = serde_json::json!({
        "m": 1, "mu": -1,
        "grid": {"r_max": 10.0, "n": 128},
        "time": {"dt": 0.01, "t_end": 0.05, "record_cadence": 1},
        "initial_data": {"kind": "psi_profile", "params": {"amplitude": 0.4, "width": 1.0}},
        "outputs": {"dir": dir.join("out").to_str().unwrap(), "formats": ["csv", "jsonl"], "snapshot_cadence": 5},
        "seed": 1
    });
    patch(&mut v);
    let path = dir.join("run.json");
    std::fs::write(&path, v.to_string()).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn run_writes_outputs_and_exits_zero() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |_| {});
    let out = smgauge(&["run", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2 + 6);
    assert!(csv.lines().next().unwrap().contains("config_sha256="));
    assert!(dir.path().join("out/snapshots/step_00000005.csv").exists());
}

#[test]
fn out_flag_overrides_config_dir() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| v["time"]["t_end"] = 0.0.into());
    let elsewhere = dir.path().join("elsewhere");
    let out = smgauge(&["--out", elsewhere.to_str().unwrap(), "run", "--config", &cfg]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(elsewhere.join("diagnostics.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| v["mu"] = 1.into());
    let out = smgauge(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("sphere"));
    let cfg = write_config(dir.path(), |v| v["grid"]["nn"] = 3.into());
    assert_eq!(smgauge(&["run", "--config", &cfg]).status.code(), Some(1));
    assert_eq!(smgauge(&["run", "--config", "/nonexistent/run.json"]).status.code(), Some(1));
}

#[test]
fn numerical_abort_exits_two_and_keeps_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), |v| {
        v["time"]["dt"] = 1e305.into();
        v["time"]["t_end"] = 1e306.into();
        v["outputs"]["snapshot_cadence"] = 0.into();
    });
    let out = smgauge(&["run", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/diagnostics.csv")).unwrap();
    assert!(csv.lines().count() > 2);
}

#[test]
fn io_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("blocker");
    std::fs::write(&blocker, b"").unwrap();
    let cfg = write_config(dir.path(), |v| v["outputs"]["dir"] = blocker.join("out").to_str().unwrap().into());
    assert_eq!(smgauge(&["run", "--config", &cfg]).status.code(), Some(3));
}

#[test]
fn verify_selection_and_thresholds() {
    let empty = smgauge(&["verify", "--suite"]);
    assert_eq!(empty.status.code(), Some(2));
    assert_eq!(smgauge(&["verify", "--suite", "no_such_suite"]).status.code(), Some(2));

    let ok = smgauge(&["verify", "--size", "small", "--suite", "energy_identity"]);
    assert!(ok.status.success(), "{}", String::from_utf8_lossy(&ok.stdout));
    assert!(String::from_utf8_lossy(&ok.stdout).starts_with("PASS [ 6]"));

    let tight = smgauge(&["verify", "--size", "small", "--suite", "energy_identity", "--tolerance-scale", "1e-3"]);
    assert_eq!(tight.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&tight.stdout).contains("FAIL [ 6]"));
}
