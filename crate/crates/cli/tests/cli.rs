use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_lispray"));
    c.env_remove("LISPRAY_THREADS");
    c
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run_in(dir: &Path, args: &[&str]) -> (i32, Vec<Value>, Value) {
    let out = bin().args(args).arg("--out").arg(dir).output().unwrap();
    let code = out.status.code().unwrap();
    let records = std::fs::read_to_string(dir.join("records.jsonl")).unwrap();
    let records = records.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    let manifest = serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    (code, records, manifest)
}

fn of_kind<'a>(records: &'a [Value], kind: &str) -> Vec<&'a Value> {
    records.iter().filter(|r| r["kind"] == kind).collect()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn curvature_on_su2_matches_ad_square() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("su2_zero.toml");
    let (code, records, manifest) = run_in(dir.path(), &["curvature", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(manifest["status"], "ok");
    let rows = of_kind(&records, "curvature");
    assert_eq!(rows.len(), 20);
    for r in rows {
        assert!(r["ad_square_delta"].as_f64().unwrap() < 1e-12);
        assert_eq!(r["schema_version"], 1);
    }
    let check = manifest["checks"].as_array().unwrap().iter().find(|c| c["name"] == "ad_square_oracle").unwrap();
    assert_eq!(check["passed"], true);
}

#[test]
fn flow_reports_blowup_at_unit_time() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("incomplete_r2.toml");
    let (code, records, _) = run_in(dir.path(), &["flow", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0);
    let summary = of_kind(&records, "completeness")[0];
    assert_eq!(summary["forward_complete"], false);
    assert_eq!(summary["backward_complete"], true);
    let t = summary["mean_blowup_time"].as_f64().unwrap();
    assert!((t - 1.0).abs() < 1e-2, "t* = {t}");
}

#[test]
fn surface_on_randers_is_not_landsberg() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("aff1_randers.toml");
    let (code, records, manifest) = run_in(dir.path(), &["surface", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{manifest}");
    let summary = of_kind(&records, "landsberg")[0];
    assert_eq!(summary["landsberg_consistent"], false);
    assert_eq!(of_kind(&records, "eta_zero").len(), 2);
    let scan = of_kind(&records, "scan");
    assert_eq!(scan.len(), 720);
    for key in ["theta", "F", "eta_tangential", "cartan_scalar"] {
        assert!(scan[0][key].is_number(), "{key}");
    }
}

#[test]
fn geodesic_records_carry_samples_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("aff1_euclidean.toml");
    let (code, records, manifest) = run_in(dir.path(), &["geodesic", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, 0, "{manifest}");
    let samples = of_kind(&records, "sample");
    assert_eq!(samples.len(), 501);
    assert_eq!(samples[0]["c"], serde_json::json!([[1.0, 0.0], [0.0, 1.0]]));
    let f0 = samples[0]["F"].as_f64().unwrap();
    for s in &samples {
        assert!((s["F"].as_f64().unwrap() - f0).abs() < 1e-7);
    }
    assert_eq!(of_kind(&records, "geodesic_summary").len(), 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    for cmd in ["curvature", "flow", "geodesic"] {
        let cfg = configs().join("aff1_randers.toml");
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        run_in(a.path(), &[cmd, "--config", cfg.to_str().unwrap(), "--seed", "11"]);
        let mut cb = bin();
        cb.env("LISPRAY_THREADS", "1");
        let st = cb.args([cmd, "--config", cfg.to_str().unwrap(), "--seed", "11", "--out"]).arg(b.path()).status();
        assert!(st.unwrap().success());
        let ra = std::fs::read(a.path().join("records.jsonl")).unwrap();
        let rb = std::fs::read(b.path().join("records.jsonl")).unwrap();
        assert_eq!(ra, rb, "{cmd}");
        let strip = |p: &Path| {
            let mut m: Value = serde_json::from_slice(&std::fs::read(p.join("manifest.json")).unwrap()).unwrap();
            m.as_object_mut().unwrap().remove("wall_time_seconds");
            m
        };
        assert_eq!(strip(a.path()), strip(b.path()));
    }
}

#[test]
fn seed_changes_curvature_samples() {
    let cfg = configs().join("aff1_randers.toml");
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let (_, ra, ma) = run_in(a.path(), &["curvature", "--config", cfg.to_str().unwrap(), "--seed", "1"]);
    let (_, rb, _) = run_in(b.path(), &["curvature", "--config", cfg.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(ma["seed"], 1);
    assert_ne!(ra[0]["y"], rb[0]["y"]);
}

#[test]
fn config_errors_exit_two_with_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("[algebra]\nbuiltin = \"aff1\"\n[sprey]\nsource = \"zero\"\n", "config_parse", "sprey"),
        (
            "[algebra]\nbuiltin = \"aff1\"\n[norm]\nkind = \"randers\"\nb = [1.2, 0.0]\n",
            "config_invalid",
            "norm not strongly convex",
        ),
        ("[algebra]\nbuiltin = \"aff1\"\n", "config_invalid", "geodesic.y0"),
    ];
    for (text, code, needle) in cases {
        let cfg = write_config(dir.path(), text);
        let out = dir.path().join("out");
        let (exit, records, manifest) = run_in(&out, &["geodesic", "--config", cfg.to_str().unwrap()]);
        assert_eq!(exit, 2, "{text}");
        assert_eq!(manifest["status"], "error");
        assert_eq!(manifest["error"]["code"], code, "{manifest}");
        assert!(manifest["error"].to_string().contains(needle), "{manifest}");
        assert_eq!(records.last().unwrap()["kind"], "error");
    }
}

#[test]
fn missing_config_file_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let (exit, _, manifest) = run_in(dir.path(), &["validate", "--config", "/nonexistent/run.toml"]);
    assert_eq!(exit, 3);
    assert!(manifest["error"]["message"].as_str().unwrap().contains("/nonexistent/run.toml"));
}

#[test]
fn runtime_errors_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    // zero initial velocity has no geodesic direction
    let cfg = write_config(
        dir.path(),
        "[algebra]\nbuiltin = \"aff1\"\n[norm]\nkind = \"euclidean\"\n[geodesic]\ny0 = [0.0, 0.0]\n",
    );
    let out = dir.path().join("out");
    let (exit, _, manifest) = run_in(&out, &["geodesic", "--config", cfg.to_str().unwrap()]);
    assert_ne!(exit, 0);
    assert_eq!(manifest["status"], "error");
    assert!(manifest["error"]["code"].is_string());
}

#[test]
fn stdout_mode_splits_records_and_manifest() {
    let out: Output = bin().args(["validate", "--algebra", "heisenberg3"]).output().unwrap();
    assert!(out.status.success());
    let stdout = String::from_utf8(out.stdout).unwrap();
    for line in stdout.lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema_version"], 1);
    }
    let manifest: Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(manifest["command"], "validate");
    assert_eq!(manifest["tool"], "lispray");
}

#[test]
fn table_format_uses_six_digits() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("incomplete_r2.toml");
    let st = bin()
        .args(["flow", "--config", cfg.to_str().unwrap(), "--format", "table", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert!(st.success());
    let table = std::fs::read_to_string(dir.path().join("table.tsv")).unwrap();
    assert!(table.contains("# completeness"));
    assert!(table.contains("0.707107"));
}

#[test]
fn overrides_replace_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("aff1_euclidean.toml");
    let (code, records, manifest) = run_in(
        dir.path(),
        &["geodesic", "--config", cfg.to_str().unwrap(), "--y0", "0.0,-1.0", "--t-span", "0,1", "--method", "rk4"],
    );
    assert_eq!(code, 0, "{manifest}");
    assert_eq!(manifest["config"]["integrator"]["method"], "rk4");
    assert_eq!(of_kind(&records, "sample")[0]["y"], serde_json::json!([0.0, -1.0]));
}
