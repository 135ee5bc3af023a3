use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ratchet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ratchet"))
        .args(args)
        .env_remove("RATCHET_GRID_JOBS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_owned()
}

#[test]
fn sweep_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"sweep"}"#);
    let out = dir.path().join("out");
    let res = ratchet(&["--config", &cfg, "--out", out.to_str().unwrap(), "--jobs", "1"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let csv = fs::read_to_string(out.join("bifurcation.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("D,u_star,j_star,abandoned"));
    assert_eq!(lines.count(), 401);

    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_hash"].as_str().unwrap().len(), 64);
    let outputs: Vec<&str> = manifest["outputs"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(outputs.contains(&"bifurcation.csv") && outputs.contains(&"effective_config.json"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"experiment":"sweep","seed":1}"#);
    let out = dir.path().join("out");
    let res = ratchet(&[
        "--config", &cfg, "--experiment", "landscape", "--seed", "9", "--out", out.to_str().unwrap(),
    ]);
    assert!(res.status.success());
    assert!(out.join("landscape.csv").exists());
    assert!(!out.join("bifurcation.csv").exists());
    let eff: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("effective_config.json")).unwrap()).unwrap();
    assert_eq!(eff["seed"], 9);
    assert_eq!(eff["experiment"], "landscape");
}

#[test]
fn effective_config_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("a");
    assert!(ratchet(&["--experiment", "landscape", "--out", out.to_str().unwrap()]).status.success());
    let again = dir.path().join("b");
    let eff = out.join("effective_config.json");
    let res = ratchet(&["--config", eff.to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert!(res.status.success());
    assert_eq!(fs::read(out.join("landscape.csv")).unwrap(), fs::read(again.join("landscape.csv")).unwrap());
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), r#"{"params":{"gamma":-1}}"#);
    let res = ratchet(&["--config", &cfg]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("params.gamma"));

    let cfg = write_config(dir.path(), r#"{"unknown":true}"#);
    assert_eq!(ratchet(&["--config", &cfg]).status.code(), Some(2));
    assert_eq!(ratchet(&["--config", "/nonexistent/config.json"]).status.code(), Some(2));
    assert_eq!(ratchet(&["--experiment", "nope"]).status.code(), Some(2));
}

#[test]
fn runtime_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    // Free control never abandons, so the critical bracket cannot close.
    let cfg = write_config(dir.path(), r#"{"experiment":"critical","params":{"kappa":0.0}}"#);
    let out = dir.path().join("out");
    let res = ratchet(&["--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(3));
}

#[test]
fn jobs_env_fallback_is_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let res = Command::new(env!("CARGO_BIN_EXE_ratchet"))
        .args(["--experiment", "critical", "--out", out.to_str().unwrap()])
        .env("RATCHET_GRID_JOBS", "2")
        .output()
        .unwrap();
    assert!(res.status.success());
    let csv = fs::read_to_string(out.join("critical.csv")).unwrap();
    assert!(csv.starts_with("d_c,u_before,u_after,order\n"));
    assert!(csv.contains("first_order"));

    let res = Command::new(env!("CARGO_BIN_EXE_ratchet"))
        .args(["--experiment", "critical", "--out", out.to_str().unwrap()])
        .env("RATCHET_GRID_JOBS", "0")
        .output()
        .unwrap();
    assert_eq!(res.status.code(), Some(2));
}
