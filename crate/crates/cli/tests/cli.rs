use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn rotpatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rotpatch")).args(args).env_remove("ROTPATCH_THREADS").output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("bad stdout ({e}): {}", String::from_utf8_lossy(&o.stdout)))
}

#[test]
fn no_arguments_is_a_usage_error() {
    assert_eq!(rotpatch(&[]).status.code(), Some(2));
    assert_eq!(rotpatch(&["solve-single"]).status.code(), Some(2));
    assert_eq!(rotpatch(&["--version"]).status.code(), Some(0));
}

#[test]
fn invalid_label_reports_error_json() {
    let o = rotpatch(&["solve-single", "--Q", "0.6", "--eps", "0.01"]);
    assert_eq!(o.status.code(), Some(2));
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    assert!(v["error"]["message"].as_str().unwrap().contains("Q"));
    let o = rotpatch(&["spectrum", "--Q", "0.3", "--N", "2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn spectrum_passes() {
    let o = rotpatch(&["spectrum", "--Q", "0.3", "--N", "8", "--m", "128"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["schema"], 1);
    assert!(v["max_abs_diff"].as_f64().unwrap() < 1e-5);
    assert_eq!(v["passed"], true);
    assert!(v["invertibility_margin"]["value"].as_f64().unwrap() > 0.0);
}

#[test]
fn solve_single_writes_report_and_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = rotpatch(&["solve-single", "--Q", "0.3", "--schedule", "0.02,0.01", "--N", "8", "--m", "64", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    assert_eq!(v["continuation"]["steps"].as_array().unwrap().len(), 2);
    let saved: Value = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, v);
    let csv = std::fs::read_to_string(out.join("boundary.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "theta,x,y,nx,ny");
    assert_eq!(lines.count(), 64);
}

#[test]
fn output_is_independent_of_thread_count() {
    let run = |t: &str| rotpatch(&["--threads", t, "solve-single", "--Q", "0.3", "--eps", "0.05", "--N", "8", "--m", "64"]).stdout;
    assert_eq!(run("1"), run("3"));
}

#[test]
fn selected_checks_pass() {
    let o = rotpatch(&["check", "--only", "kirchhoff", "--only", "margin"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["checks"].as_array().unwrap().len(), 2);
    assert_eq!(v["passed"], true);
    assert_eq!(rotpatch(&["check", "--only", "nonsense"]).status.code(), Some(2));
    let listed = json(&rotpatch(&["check", "--list"]));
    assert!(listed["checks"].as_array().unwrap().len() >= 9);
}

#[test]
fn solve_multi_from_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("multi.json");
    std::fs::write(&cfg, r#"{"Q": 0.3, "mu": 1.0, "r0": 0.05, "N": 6, "m": 64}"#).unwrap();
    let o = rotpatch(&["solve-multi", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let d = v["boundary_distance"].as_array().unwrap();
    assert!((d[0].as_f64().unwrap() - d[1].as_f64().unwrap()).abs() < 1e-12);
    std::fs::write(&cfg, r#"{"Q": 0.3, "mu": 1.0, "r0": 0.05, "bogus": 1}"#).unwrap();
    assert_eq!(rotpatch(&["solve-multi", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

fn solve_to(dir: &Path) {
    let o = rotpatch(&["solve-single", "--Q", "0.3", "--eps", "0.05", "--N", "8", "--m", "64", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn evolve_solved_patch() {
    let dir = tempfile::tempdir().unwrap();
    solve_to(dir.path());
    let (eps, q) = (0.05f64, 0.3f64);
    let lambda = 1.0 / (std::f64::consts::PI * eps * eps);
    let omega = (1.0 - q * q) / (4.0 * std::f64::consts::PI * eps * eps);
    let t = 0.25 / omega;
    let out = dir.path().join("evo");
    let o = rotpatch(&[
        "evolve",
        "--in",
        dir.path().join("boundary.csv").to_str().unwrap(),
        "--strength",
        &lambda.to_string(),
        "--omega",
        &omega.to_string(),
        "--T",
        &t.to_string(),
        "--dt",
        &(t / 16.0).to_string(),
        "--frames",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&o);
    let err = v["rigid_rotation_error"].as_array().unwrap()[0].as_f64().unwrap();
    assert!(err < 1e-5, "{err}");
    assert!(out.join("summary.json").exists());
    assert!(out.join("frame_0002_patch0.csv").exists());
    let o = rotpatch(&["evolve", "--in", "missing.csv", "--strength", "1", "--T", "1", "--dt", "0.1"]);
    assert_ne!(o.status.code(), Some(0));
}
