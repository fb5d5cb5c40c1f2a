use std::process::Command;

fn corsair() -> Command {
    Command::new(env!("CARGO_BIN_EXE_corsair"))
}

fn config() -> String {
    concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/default.json").to_string()
}

#[test]
fn simulate_micro_writes_a_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    let status = corsair()
        .args(["simulate_micro", "--config", &config(), "--seed", "3", "--out"])
        .arg(tmp.path())
        .args(["--set", "numerics.steps=32", "--set", "numerics.control_cells=4", "--threads", "1"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["master_seed"], 3);
    assert_eq!(manifest["status"], "ok");
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let out = corsair()
        .args(["simulate_micro", "--config", &config(), "--out"])
        .arg(tmp.path())
        .args(["--set", "kappa=-1"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("kappa"));

    let missing = corsair()
        .args(["validate", "--config", "/nonexistent/config.json", "--out"])
        .arg(tmp.path())
        .status()
        .unwrap();
    assert_ne!(missing.code(), Some(0));

    let malformed = corsair()
        .args(["validate", "--config", &config(), "--out"])
        .arg(tmp.path())
        .args(["--set", "no_equals_sign"])
        .status()
        .unwrap();
    assert_eq!(malformed.code(), Some(2));
}

#[test]
fn unknown_kinds_are_rejected() {
    let status = corsair().args(["bogus", "--config", &config(), "--out", "/tmp/x"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
