use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn cellfree(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cellfree"))
        .args(args)
        .current_dir(dir)
        .env_remove("CELLFREE_WORKERS")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, body: &str) -> String {
    let path = dir.join("config.json");
    fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

const SMALL: &str = r#"{
    "network": {"L": 4, "N": 2, "K": 3},
    "aging": {"r": 0.9},
    "schemes": ["team_mmse", "local_tmmse", "centralized"],
    "drops": 2,
    "realizations_per_drop": 5,
    "pi_samples": 20,
    "master_seed": 5,
    "output_path": "out/rates.csv"
}"#;

#[test]
fn run_then_cdf() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = cellfree(&["run", &config, "--workers", "2"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("out/rates.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "drop_id,ue_id,scheme,rate_bits_per_hz");
    assert_eq!(lines.len(), 1 + 2 * 3 * 3);
    assert!(!csv.contains('\r'));

    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("out/rates.summary.json")).unwrap()).unwrap();
    let team = &summary["schemes"]["team_mmse"];
    assert_eq!(team["count"], 6);
    for key in ["p10", "p25", "p50", "p75", "p90"] {
        assert!(team["percentiles"][key].is_f64(), "{key}");
    }
    assert!(team["mse_objective"].as_f64().unwrap() > 0.0);

    let out = cellfree(&["cdf", "out/rates.csv"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for scheme in ["team_mmse", "local_tmmse", "centralized"] {
        let text = fs::read_to_string(dir.path().join(format!("out/rates.cdf.{scheme}.csv"))).unwrap();
        let mut rows = text.lines();
        assert_eq!(rows.next(), Some("rate_bits_per_hz,cdf"));
        let points: Vec<(f64, f64)> = rows
            .map(|r| {
                let (a, b) = r.split_once(',').unwrap();
                (a.parse().unwrap(), b.parse().unwrap())
            })
            .collect();
        assert!(points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1));
        assert_eq!(points.last().unwrap().1, 1.0);
    }
}

#[test]
fn worker_override_keeps_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let one = cellfree(&["run", &config, "--workers", "1"], dir.path());
    assert!(one.status.success());
    let a = fs::read(dir.path().join("out/rates.csv")).unwrap();
    let eight = Command::new(env!("CARGO_BIN_EXE_cellfree"))
        .args(["run", &config])
        .current_dir(dir.path())
        .env("CELLFREE_WORKERS", "8")
        .output()
        .unwrap();
    assert!(eight.status.success());
    assert_eq!(a, fs::read(dir.path().join("out/rates.csv")).unwrap());
}

#[test]
fn config_errors_exit_one_with_key_path() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &SMALL.replace("\"master_seed\"", "\"master_sed\""));
    let out = cellfree(&["run", &config], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("master_sed"));

    let config = write_config(dir.path(), &SMALL.replace("\"K\": 3", "\"K\": 3, \"bandwith_hz\": 1e6"));
    let out = cellfree(&["run", &config], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("network") && err.contains("bandwith_hz"), "{err}");

    let out = cellfree(&["run", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cellfree(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(cellfree(&[], dir.path()).status.code(), Some(1));
    assert_eq!(cellfree(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn cdf_rejects_malformed_input() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.csv"), "drop_id,ue_id,scheme,rate_bits_per_hz\n0,0,team_mmse,abc\n").unwrap();
    assert_ne!(cellfree(&["cdf", "bad.csv"], dir.path()).status.code(), Some(0));
    fs::write(dir.path().join("empty.csv"), "drop_id,ue_id,scheme,rate_bits_per_hz\n").unwrap();
    assert_ne!(cellfree(&["cdf", "empty.csv"], dir.path()).status.code(), Some(0));
}

#[test]
fn verify_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = cellfree(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.lines().count() >= 5 && text.lines().all(|l| l.starts_with("PASS")), "{text}");
}

#[test]
fn scenario_dump_shapes() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), SMALL);
    let out = cellfree(&["scenario", &config, "--drop", "1"], dir.path());
    assert!(out.status.success());
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["drop_id"], 1);
    assert_eq!(v["gains_db"].as_array().unwrap().len(), 4);
    assert_eq!(v["gains_db"][0].as_array().unwrap().len(), 3);
    let total: f64 = v["ue_power"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).sum();
    assert!((total - 5.0).abs() < 1e-9);
}
