mod common;

use std::process::Command;

#[test]
fn every_command_is_byte_reproducible() {
    let (files, diffs) = common::determinism_diffs(4);
    assert!(files > 20, "only {files} output files");
    assert!(diffs.is_empty(), "differing outputs: {diffs:?}");
}

#[test]
fn cli_rejects_a_bad_config_without_writing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"train_densities": ["gridlock"]}"#).unwrap();
    let out = dir.path().join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_s2cd"))
        .args(["train-teacher", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(!status.status.success());
    assert!(String::from_utf8_lossy(&status.stderr).contains("gridlock"));
    assert!(!out.exists());
}

#[test]
fn cli_theory_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("theory");
    let status = Command::new(env!("CARGO_BIN_EXE_s2cd"))
        .args(["theory", "--seed", "9", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(out.join("theory_report.json")).unwrap()).unwrap();
    assert_eq!(report["instances"].as_array().unwrap().len(), 100);
    assert!(out.join("config.json").exists());
}
