use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drivebench::catalog_io::{split, RouteLibrary, ScenarioCatalog};
use drivebench::cli::{EXIT_OK, EXIT_RUNTIME, EXIT_USAGE};
use drivebench::HarnessConfig;
use drivebench_core::catalog::{builtin, BUILTIN_SUITES};

fn bin(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drivebench")).args(args).current_dir(cwd).env_remove("DRIVEBENCH_CONFIG").output().unwrap()
}

fn repo_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn error_line(o: &Output) -> serde_json::Value {
    let line = stderr(o).lines().last().unwrap().to_string();
    serde_json::from_str(&line).unwrap_or_else(|_| panic!("not JSON: {line}"))
}

#[test]
fn stopcurve_prints_optimum() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["stopcurve", "--lambda", "1", "--p", "0.6", "--L", "10", "--svg", "c.svg"], dir.path());
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert_eq!(out.lines().next(), Some("d* = 2.5"));
    let svg = fs::read_to_string(dir.path().join("c.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("d* = 2.5"));
}

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["bogus"][..], &["evaluate", "--controller", "nope"], &["stopcurve", "--lambda", "1"], &["collect", "--jobs", "0"], &[]] {
        let o = bin(args, dir.path());
        assert_eq!(o.status.code(), Some(EXIT_USAGE), "{args:?}");
        assert_eq!(error_line(&o)["error"]["kind"], "usage");
    }
}

#[test]
fn runtime_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin(&["stopcurve", "--lambda", "1", "--p", "2", "--L", "10"], dir.path());
    assert_eq!(o.status.code(), Some(EXIT_RUNTIME));
    assert_eq!(error_line(&o)["error"]["kind"], "core");
    let o = bin(&["index", "--data", "missing"], dir.path());
    assert_eq!(o.status.code(), Some(EXIT_RUNTIME));
    assert_eq!(error_line(&o)["error"]["kind"], "io");
    let o = bin(&["collect", "--routes", "nowhere"], dir.path());
    assert_eq!(o.status.code(), Some(EXIT_RUNTIME));
    assert_eq!(error_line(&o)["error"]["kind"], "config");
}

#[test]
fn bad_config_file_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"seeed": 1}"#).unwrap();
    let o = bin(&["--config", "c.json", "stopcurve", "--lambda", "1", "--p", "0.5", "--L", "2"], dir.path());
    assert_eq!(o.status.code(), Some(EXIT_RUNTIME));
    assert_eq!(error_line(&o)["error"]["kind"], "parse");
}

#[test]
fn config_env_var_is_default_path() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("c.json"), r#"{"seed": 5}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_drivebench"))
        .args(["config", "--out", "eff.json"])
        .current_dir(dir.path())
        .env("DRIVEBENCH_CONFIG", "c.json")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    let eff: HarnessConfig = serde_json::from_str(&fs::read_to_string(dir.path().join("eff.json")).unwrap()).unwrap();
    assert_eq!(eff.seed, 5);
}

#[test]
fn shipped_files_match_builtins() {
    let root = repo_root();
    for name in BUILTIN_SUITES {
        let (lib, cat) = split(&builtin(name).unwrap());
        let shipped_lib: RouteLibrary = serde_json::from_str(&fs::read_to_string(root.join(format!("routes/{name}.json"))).unwrap()).unwrap();
        let shipped_cat: ScenarioCatalog =
            serde_json::from_str(&fs::read_to_string(root.join(format!("scenarios/{name}.json"))).unwrap()).unwrap();
        assert_eq!(shipped_lib, lib, "{name}");
        assert_eq!(shipped_cat, cat, "{name}");
    }
    let default: HarnessConfig = serde_json::from_str(&fs::read_to_string(root.join("configs/default.json")).unwrap()).unwrap();
    assert_eq!(default, HarnessConfig::default());
}

#[test]
fn catalog_files_load_like_builtin() {
    let root = repo_root();
    let routes = root.join("routes/nonhazard.json");
    let scenarios = root.join("scenarios/nonhazard.json");
    let loaded = drivebench::catalog_io::load_catalog(routes.to_str().unwrap(), Some(scenarios.to_str().unwrap())).unwrap();
    assert_eq!(loaded, builtin("nonhazard").unwrap());
}

#[test]
fn pipeline_runs_and_report_rejects_mixed_digests() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let ok = |o: Output| assert_eq!(o.status.code(), Some(EXIT_OK), "{}", stderr(&o));
    ok(bin(&["collect", "--routes", "nonhazard", "--out", "ds"], d));
    ok(bin(&["index", "--data", "ds"], d));
    ok(bin(&["sample", "--data", "ds", "--seed", "3", "--epoch-size", "500"], d));
    let epoch: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("ds/index/epoch.json")).unwrap()).unwrap();
    assert_eq!(epoch["ids"].as_array().unwrap().len(), 500);
    ok(bin(&["evaluate", "--routes", "nonhazard", "--controller", "expert", "--out", "a.jsonl"], d));
    ok(bin(&["evaluate", "--routes", "nonhazard", "--controller", "entangled", "--out", "b.jsonl"], d));
    ok(bin(&["report", "--results", "a.jsonl", "b.jsonl", "--out", "rep", "--lambda", "1", "--p", "0.6", "--L", "10"], d));
    let summary = fs::read_to_string(d.join("rep/summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert_eq!(summary.lines().next().unwrap(), drivebench::report::summary_header());
    assert!(d.join("rep/ds_curve.svg").exists());

    ok(bin(&["evaluate", "--routes", "nonhazard", "--controller", "semi", "--early-stop", "2100", "--out", "c.jsonl"], d));
    let first = fs::read_to_string(d.join("c.jsonl")).unwrap();
    let header: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(header["early_stop"], 2100.0);
    let o = bin(&["report", "--results", "a.jsonl", "c.jsonl", "--out", "rep2"], d);
    assert_eq!(o.status.code(), Some(EXIT_RUNTIME));
    assert_eq!(error_line(&o)["error"]["kind"], "digest_mismatch");
    assert!(!d.join("rep2/report.csv").exists());
}
