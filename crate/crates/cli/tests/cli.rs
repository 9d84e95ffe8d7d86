use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

struct Run {
    code: i32,
    out: String,
    err: String,
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(args: &[&str], config: &Path, seed: Option<&str>) -> Run {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_workstats"));
    cmd.args(args).arg("--config").arg(config).env_remove("WORKSTATS_SEED");
    if let Some(s) = seed {
        cmd.env("WORKSTATS_SEED", s);
    }
    let Output { status, stdout, stderr } = cmd.output().unwrap();
    Run {
        code: status.code().unwrap_or(-1),
        out: String::from_utf8(stdout).unwrap(),
        err: String::from_utf8(stderr).unwrap(),
    }
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn json(text: &str) -> Value {
    serde_json::from_str(text).unwrap()
}

#[test]
fn validate_accepts_a_physical_model() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 1}}"#);
    let r = run(&["validate"], &cfg, None);
    assert_eq!(r.code, 0, "{}", r.err);
    assert_eq!(json(&r.out)["passed"], Value::Bool(true));
}

#[test]
fn validate_reports_negative_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    // a box-shaped relaxation function has a sinc spectrum
    let table: Vec<String> = (0..=200)
        .map(|i| {
            let t = i as f64 * 0.02;
            format!("[{t}, {}]", if t < 2.0 { 1.0 } else { 0.0 })
        })
        .collect();
    let text = format!(r#"{{"schema_version": 1, "model": {{"kind": "tabulated", "table": [{}]}}}}"#, table.join(","));
    let cfg = write_config(dir.path(), "c.json", &text);
    let r = run(&["validate"], &cfg, None);
    assert_eq!(r.code, 1, "{}", r.err);
    assert!(r.err.contains("omega"), "{}", r.err);
}

#[test]
fn missing_field_is_a_usage_error_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1}}"#);
    let r = run(&["validate"], &cfg, None);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("model") && r.err.contains("gamma"), "{}", r.err);
}

#[test]
fn command_specific_fields_are_required() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 1}}"#);
    let r = run(&["cgf"], &cfg, None);
    assert_eq!(r.code, 2);
    assert!(r.err.contains("protocol"), "{}", r.err);
}

#[test]
fn cgf_table_is_mirror_symmetric() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "model": {"kind": "underdamped", "psi0": 1, "gamma": 1, "nu": 4},
            "protocol": {"kind": "linear", "alpha": 1, "tau": 1.5}, "thermal": {"beta": 2, "hbar": 1}}"#,
    );
    let r = run(&["cgf"], &cfg, None);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows = csv_rows(&r.out);
    assert_eq!(rows.len(), 11);
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), 0.0);
    for row in &rows {
        assert!(row[3].parse::<f64>().unwrap() <= 1e-9, "{row:?}");
    }
}

#[test]
fn cumulants_mark_divergent_orders() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 1},
            "protocol": {"kind": "linear", "alpha": 1, "tau": 1}, "thermal": {"beta": 1, "hbar": 2}}"#,
    );
    let r = run(&["cumulants"], &cfg, None);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows = csv_rows(&r.out);
    assert_eq!(rows.len(), 4);
    assert!(rows[..3].iter().all(|row| row[5] == "ok"), "{rows:?}");
    assert_eq!(rows[3][5], "divergent");
}

#[test]
fn fano_sweep_respects_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "model": {"kind": "bessel", "psi0": 1, "gamma": 1},
            "sweep": {"x": [0.5, 5], "y": {"log_min": 0.1, "log_max": 10, "n": 5}}}"#,
    );
    let r = run(&["fano-sweep"], &cfg, None);
    assert_eq!(r.code, 0, "{}", r.err);
    let rows = csv_rows(&r.out);
    assert_eq!(rows.len(), 10);
    for row in rows {
        let f: f64 = row[2].parse().unwrap();
        let j: f64 = row[3].parse().unwrap();
        assert!(f >= j && j >= 2.0, "{row:?}");
    }
}

#[test]
fn seed_override_changes_the_config_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 1}}"#);
    let digest = |seed| json(&run(&["validate"], &cfg, seed).out)["config_sha256"].clone();
    assert_eq!(digest(None), digest(Some("0")));
    assert_ne!(digest(None), digest(Some("5")));
    assert_eq!(run(&["validate"], &cfg, Some("x")).code, 2);
}

#[test]
fn out_flag_writes_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 1}}"#);
    let out = dir.path().join("report.json");
    let r = run(&["validate", "--out", out.to_str().unwrap()], &cfg, None);
    assert_eq!(r.code, 0);
    assert!(r.out.is_empty());
    assert!(std::fs::read_to_string(out).unwrap().contains("config_sha256"));
}

#[test]
fn oracle_presets() {
    let dir = tempfile::tempdir().unwrap();
    let qubit = write_config(dir.path(), "q.json", r#"{"schema_version": 1, "system": {"preset": "qubit-sx"}, "identity_systems": 3}"#);
    let r = run(&["oracle"], &qubit, None);
    assert_eq!(r.code, 0, "{}", r.err);
    let v = json(&r.out);
    assert_eq!(v["identity"]["passed"], Value::Bool(true));
    assert!(v["benchmark"]["max_identity_defect"].as_f64().unwrap() <= 1e-10);

    let commuting = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1, "system": {"preset": "qubit-sz-commuting"}, "identity_systems": 1, "alphas": [0.1, 0.05]}"#,
    );
    let v = json(&run(&["oracle"], &commuting, None).out);
    assert!(v["benchmark"]["gaussian"].is_boolean(), "{v}");

    let random = write_config(
        dir.path(),
        "r.json",
        r#"{"schema_version": 1, "system": {"preset": "random-gue:42:3"}, "identity_systems": 2, "alphas": [0.1]}"#,
    );
    let r = run(&["oracle"], &random, Some("9"));
    assert_eq!(r.code, 0, "{}", r.err);
    let v = json(&r.out);
    assert_eq!(v["identity"]["seed"], 9);
    assert!(v["identity"]["max_defect"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn bad_tolerance_flag_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", r#"{"schema_version": 1, "model": {"kind": "overdamped", "psi0": 1, "gamma": 1}}"#);
    assert_eq!(run(&["validate", "--tol", "2"], &cfg, None).code, 2);
}
