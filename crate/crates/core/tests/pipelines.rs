//! End-to-end pipeline behaviour: file schemas, resumption, determinism and
//! the exit-code contract of the binary.

use std::fs;
use std::process::Command;

use spmb::cli::{
    parse_config, run_landscape, run_residual_sweep, run_sweep, run_verify, Context, RunConfig, VariantName,
    LANDSCAPE_COLUMNS, RESIDUAL_COLUMNS, SWEEP_COLUMNS,
};
use spmb::energy::reduced_energy;
use spmb::Error;

fn config_in(dir: &std::path::Path) -> RunConfig {
    RunConfig {
        out_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn lines(path: &std::path::Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn landscape_of_two_bumps_has_one_turning_point() {
    let mut config = RunConfig::default();
    config.potential.m = 8.0;
    let ctx = Context::new(&config).unwrap();
    let constants = ctx.constants().unwrap();
    let model = ctx.model(Some(ctx.fit().unwrap()));
    let radii: Vec<f64> = (0..400).map(|i| 3.2 + 0.1 * i as f64).collect();
    let fbar: Vec<f64> = radii
        .iter()
        .map(|&r| reduced_energy(2, r, &constants, 8.0, &model).unwrap().fbar)
        .collect();
    let slopes: Vec<f64> = fbar.windows(2).map(|w| w[1] - w[0]).collect();
    let changes = slopes.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
    assert_eq!(changes, 1);
    assert!(slopes[0] > 0.0 && *slopes.last().unwrap() < 0.0);
}

#[test]
fn landscape_file_has_header_and_schema() {
    let dir = tempfile::tempdir().unwrap();
    let config = RunConfig {
        r_samples: 12,
        landscape_direct: false,
        ..config_in(dir.path())
    };
    let outcome = run_landscape(&config, 16).unwrap();
    let text = lines(&outcome.files[0]);
    assert_eq!(text[0], format!("# {}", config.header()));
    assert!(text[0].contains(&config.hash()[..16]));
    assert_eq!(text[1], LANDSCAPE_COLUMNS.join(","));
    assert_eq!(text.len(), 2 + 12);
    let row: Vec<&str> = text[2].split(',').collect();
    assert_eq!(row.len(), LANDSCAPE_COLUMNS.len());
    assert!(row[2].contains('e') && row[4].is_empty());
}

#[test]
fn sweep_resumes_at_first_missing_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = RunConfig {
        sweep_k_list: vec![25, 50],
        r_samples: 40,
        ..config_in(dir.path())
    };
    config.corrector.enabled = false;
    let first = run_sweep(&config).unwrap();
    let path = first.files[0].clone();
    let full = lines(&path);
    assert_eq!(full[1], SWEEP_COLUMNS.join(","));
    assert_eq!(full.len(), 4);

    // An interrupted run leaves a partial file behind.
    fs::write(&path, full[..3].join("\n") + "\n").unwrap();
    let resumed = run_sweep(&config).unwrap();
    assert_eq!(resumed.summary["reused_rows"], 1);
    assert_eq!(lines(&path), full);

    // Rows written under another configuration are not reused.
    config.sweep_k_list = vec![25, 50, 100];
    let changed = run_sweep(&config).unwrap();
    assert_eq!(changed.summary["reused_rows"], 0);
    assert_eq!(lines(&path).len(), 5);
}

#[test]
fn residual_sweep_is_byte_identical_on_rerun() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for dir in [a.path(), b.path()] {
        let config = RunConfig {
            residual_k_list: vec![12, 8],
            ..config_in(dir)
        };
        let outcome = run_residual_sweep(&config).unwrap();
        outputs.push(fs::read(&outcome.files[0]).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let text = String::from_utf8(outputs.remove(0)).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[1], RESIDUAL_COLUMNS.join(","));
    assert!(rows[2].starts_with("8,") && rows[3].starts_with("12,"));
}

#[test]
fn exhausted_budget_surfaces_as_named_failures() {
    let dir = tempfile::tempdir().unwrap();
    let config = config_in(dir.path()).with_budget(10);
    let outcome = run_verify(&config).unwrap();
    assert!(!outcome.passed);
    let checks = outcome.summary["report"].as_array().unwrap();
    assert!(checks.len() >= 12);
    let budget: Vec<_> = checks
        .iter()
        .filter(|c| c["error"].as_str().is_some_and(|e| e.contains("budget")))
        .collect();
    assert!(!budget.is_empty());
    assert!(checks.iter().any(|c| c["passed"] == true));
}

#[test]
fn config_files_are_validated() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.json");
    fs::write(&good, r#"{"p": 2.5, "potential": {"variant": "soft", "a": 2, "m": 3}, "k_list": [8]}"#).unwrap();
    let c = parse_config(Some(&good)).unwrap();
    assert_eq!(c.potential.variant, VariantName::Soft);
    assert!((c.beta() - 0.3 / std::f64::consts::PI).abs() < 1e-15);
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"p": 6, "potential": {"variant": "soft", "a": 2, "m": 3}}"#).unwrap();
    assert!(matches!(parse_config(Some(&bad)), Err(Error::ConfigInvalid(_))));
    assert!(parse_config(Some(&dir.path().join("missing.json"))).is_err());
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bin = env!("CARGO_BIN_EXE_spmb");
    let bad = dir.path().join("bad.json");
    fs::write(&bad, r#"{"p": 3}"#).unwrap();
    let status = Command::new(bin).args(["--config", bad.to_str().unwrap(), "verify"]).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin).args(["no-such-command"]).output().unwrap().status;
    assert_eq!(status.code(), Some(2));
    let out = dir.path().join("out");
    let status = Command::new(bin)
        .args(["--out", out.to_str().unwrap(), "--budget", "10", "interaction"])
        .output()
        .unwrap()
        .status;
    assert_eq!(status.code(), Some(3));
    let output = Command::new(bin)
        .args(["--out", out.to_str().unwrap(), "constants"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    assert_eq!(report["passed"], true);
    let written: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("constants.json")).unwrap()).unwrap();
    assert!(written["header"].as_str().unwrap().starts_with("spmb "));
}
