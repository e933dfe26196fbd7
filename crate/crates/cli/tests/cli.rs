use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn scenario(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios").join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specshift")).args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ssf_count_of_diagonal_pair() {
    let v = json(&run(&["ssf", path_str(&scenario("pair.json"))]));
    assert_eq!(v["command"], "ssf");
    assert_eq!(v["results"]["breakpoints"], serde_json::json!([-2.0, -1.0, 1.0, 2.0]));
    assert_eq!(v["results"]["levels"], serde_json::json!([0.0, -1.0, 0.0, 1.0, 0.0]));
    assert_eq!(v["input_hash"].as_str().unwrap().len(), 64);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn identical_pair_has_empty_support() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("same.json");
    std::fs::write(&p, r#"{"H0": {"diag": [1, 2]}, "H": {"diag": [1, 2]}}"#).unwrap();
    let v = json(&run(&["ssf", path_str(&p)]));
    assert_eq!(v["results"]["breakpoints"], serde_json::json!([]));
}

#[test]
fn ssf_det_csv_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("xi.csv");
    let r = run(&[
        "ssf",
        path_str(&scenario("pair.json")),
        "--method",
        "det",
        "--grid",
        "-2.25:2.25:10",
        "--format",
        "csv",
        "--out",
        path_str(&out),
    ]);
    assert!(r.status.success());
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("# specshift "));
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "lambda,xi");
    assert_eq!(rows.len(), 11);
    // lambda = -1.25 sits on the -1 plateau
    let v: Vec<f64> = rows[3].split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(v[0], -1.25);
    assert!((v[1] + 1.0).abs() < 0.01);
}

#[test]
fn malformed_input_exits_2_with_position() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    std::fs::write(&p, "{\"H0\": {\"diag\": [1,\n").unwrap();
    let r = run(&["ssf", path_str(&p)]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stderr).contains("line 2"));
    let r = run(&["ssf", "/nonexistent/file.json"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn witten_routes_on_bggss() {
    let s = scenario("bggss.json");
    let closed = json(&run(&["witten", path_str(&s), "--method", "closed"]));
    assert_eq!(closed["results"]["w_r"], 1.0);
    let r = json(&run(&["witten", path_str(&s), "--method", "resolvent"]));
    assert!((r["results"]["w_r"].as_f64().unwrap() - 1.0).abs() <= 0.05);
    assert_eq!(r["results"]["status"], "converged");
    let s = json(&run(&["witten", path_str(&s), "--method", "ssf"]));
    assert_eq!(s["results"]["w_r"], 1.0);
}

#[test]
fn strict_fails_on_warned_semigroup() {
    let s = scenario("half.json");
    let r = run(&["witten", path_str(&s), "--method", "semigroup"]);
    assert_eq!(r.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&r.stdout).unwrap();
    assert!((v["results"]["w_s"].as_f64().unwrap() - 0.5).abs() <= 0.05);
    let r = run(&["witten", path_str(&s), "--method", "semigroup", "--strict"]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn flow_on_bggss() {
    let v = json(&run(&["flow", path_str(&scenario("bggss.json"))]));
    assert_eq!(v["results"]["flow"], 1);
    assert_eq!(v["results"]["identities"]["discrete_index"], 1);
}

#[test]
fn flow_on_default_discretization() {
    let v = json(&run(&["flow", path_str(&scenario("rotated.json"))]));
    // A- has one negative eigenvalue, A+ is positive definite
    assert_eq!(v["results"]["flow"], 1);
}

#[test]
fn ptf_trivial_path_has_zero_residuals() {
    let v = json(&run(&["ptf", path_str(&scenario("trivial.json"))]));
    let rows = v["results"].as_array().unwrap();
    assert_eq!(rows.len(), 3);
    for r in rows {
        assert!(r["residual"].as_f64().unwrap() < 1e-12);
    }
}

#[test]
fn push_on_bggss() {
    let v = json(&run(&["push", path_str(&scenario("bggss.json")), "--grid", "0.25:4:6"]));
    let res = v["results"]["residual"].as_array().unwrap();
    assert_eq!(res.len(), 6);
    assert!(res.iter().all(|r| r.as_f64().unwrap() <= 0.1));
}

#[test]
fn dirac1d_gauge_value() {
    let v = json(&run(&["dirac1d", path_str(&scenario("dirac.json"))]));
    assert!((v["results"]["ssf"].as_f64().unwrap() - 1.0).abs() <= 0.05);
    assert!((v["results"]["mean_formula"].as_f64().unwrap() - 1.0).abs() <= 1e-6);
}

#[test]
fn results_are_deterministic() {
    let s = scenario("rotated.json");
    let a = json(&run(&["ptf", path_str(&s)]));
    let b = json(&run(&["ptf", path_str(&s)]));
    assert_eq!(a["results"], b["results"]);
    assert_eq!(a["input_hash"], b["input_hash"]);
}
