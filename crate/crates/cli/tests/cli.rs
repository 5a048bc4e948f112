use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tradeoff::neyman::curve;
use tradeoff::{ExperimentPair, TradeoffCurve};

const GOLDEN: &str = include_str!("fixtures/curve_poisson_1_3.csv");

fn tradeoff(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tradeoff")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn poisson_curve_matches_golden_fixture() {
    let o = tradeoff(&["curve", "--poisson", "1,3"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), GOLDEN);
}

#[test]
fn golden_fixture_agrees_with_library() {
    let f = curve(&ExperimentPair::poisson(1.0, 3.0).unwrap()).unwrap();
    let row = GOLDEN
        .lines()
        .find(|l| l.starts_with("0.0000000000000000e0,"))
        .unwrap();
    let beta: f64 = row.split(',').nth(1).unwrap().parse().unwrap();
    assert_eq!(beta, f.value(0.0));
    let g = TradeoffCurve::from_csv(GOLDEN).unwrap();
    assert!(tradeoff::tofcurve::sup_distance(&f, &g) < 1e-15);
}

#[test]
fn metrics_self_distance_is_zero() {
    let dir = tempfile::tempdir().unwrap();
    for (name, args) in [
        ("p.csv", vec!["curve", "--poisson", "1,3"]),
        ("g.csv", vec!["curve", "--gaussian", "1"]),
        ("e.csv", vec!["curve", "--eps-delta", "1,0.01"]),
        ("c.csv", vec!["coarsen", "--family", "gaussian", "--mu", "1", "--width", "1"]),
        ("n.csv", vec!["compose", "--bernoulli", "0.2,0.4", "--n", "20"]),
    ] {
        let out = dir.path().join(name);
        let mut full = args.clone();
        full.extend(["--out", path_str(&out)]);
        let o = tradeoff(&full);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let m = tradeoff(&["metrics", path_str(&out), path_str(&out)]);
        assert_eq!(m.status.code(), Some(0));
        let v: serde_json::Value = serde_json::from_str(&stdout(&m)).unwrap();
        assert_eq!(v["sup"], 0.0, "{name}");
        assert_eq!(v["levy"], 0.0, "{name}");
    }
}

#[test]
fn coarsened_csv_is_tagged() {
    let o = tradeoff(&["coarsen", "--family", "laplace", "--mu", "1", "--width", "0.5"]);
    let first = stdout(&o).lines().next().unwrap().to_string();
    let meta: serde_json::Value = serde_json::from_str(first.trim_start_matches("# ")).unwrap();
    assert_eq!(meta["coarsened"], true);
    assert_eq!(meta["bin_width"], 0.5);
}

#[test]
fn mechanism_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let params = dir.path().join("params.json");
    let c = tradeoff(&[
        "mechanism", "calibrate", "--mu1", "1", "--mu2", "3", "--g-min", "0", "--g-max", "1", "--w-g", "1", "--out",
        path_str(&params),
    ]);
    assert_eq!(c.status.code(), Some(0));
    let p: serde_json::Value = serde_json::from_str(&fs::read_to_string(&params).unwrap()).unwrap();
    assert_eq!(p["n2"], 1.0);
    assert_eq!(p["w_hg"], 2.0);

    let v = tradeoff(&["mechanism", "verify", "--params", path_str(&params), "--pairs", "0:1,1:0,0:0"]);
    assert_eq!(v.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(&stdout(&v)).unwrap();
    assert!(report["min_slack"].as_f64().unwrap() >= -1e-8);
    assert_eq!(report["pairs"][1]["direction"], "inverse");

    let r1 = tradeoff(&["mechanism", "release", "--params", path_str(&params), "--g", "1", "--seed", "11"]);
    let r2 = tradeoff(&["mechanism", "release", "--params", path_str(&params), "--g", "1", "--seed", "11"]);
    assert_eq!(r1.status.code(), Some(0));
    assert_eq!(stdout(&r1), stdout(&r2));
    assert!(stdout(&r1).trim().parse::<u64>().is_ok());
}

#[test]
fn exit_codes() {
    assert_eq!(tradeoff(&["curve"]).status.code(), Some(1));
    assert_eq!(tradeoff(&["curve", "--poisson", "1"]).status.code(), Some(1));
    assert_eq!(tradeoff(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tradeoff(&["--help"]).status.code(), Some(0));
    let bad = tradeoff(&["mechanism", "calibrate", "--mu1", "3", "--mu2", "1", "--g-min", "0", "--g-max", "1", "--w-g", "1"]);
    assert_eq!(bad.status.code(), Some(2));
    assert_eq!(tradeoff(&["curve", "--bernoulli", "0.2,1.5"]).status.code(), Some(2));
    let open = tradeoff(&["mechanism", "calibrate", "--mu1", "1", "--mu2", "3", "--g-min", "0", "--w-g", "1"]);
    assert_eq!(open.status.code(), Some(2));
}

#[test]
fn malformed_spec_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(&spec, "{\n  \"kind\": \"poisson\",\n  \"lambda1\": 1,\n  \"lambda2\": \n}").unwrap();
    let o = tradeoff(&["curve", "--spec", path_str(&spec)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 5"));

    fs::write(&spec, r#"{"kind": "poisson", "lambda1": 1, "lamda2": 3}"#).unwrap();
    let o = tradeoff(&["curve", "--spec", path_str(&spec)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("lamda2"));
}

#[test]
fn spec_file_with_numerics_matches_flags() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("p.json");
    fs::write(&spec, r#"{"kind": "poisson", "lambda1": 1, "lambda2": 3, "numerics": {"grid_step": 0.001}}"#).unwrap();
    let o = tradeoff(&["curve", "--spec", path_str(&spec)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), GOLDEN);
}

#[test]
fn limit_reports() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("m.json");
    let report = dir.path().join("r.json");
    fs::write(&spec, r#"{"kind": "mixture", "components": [[0.5, 1.0], [0.5, 2.0]], "sigma": 1.0}"#).unwrap();
    let o = tradeoff(&["limit", "--spec", path_str(&spec), "--report", path_str(&report), "--out", path_str(&dir.path().join("m.csv"))]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let r: serde_json::Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert!(r["cross_check_gap"].as_f64().unwrap() <= 1e-4);

    fs::write(&spec, r#"{"kind": "idp", "poisson": [[1.0, 3.0]]}"#).unwrap();
    let o = tradeoff(&["limit", "--spec", path_str(&spec), "--report", path_str(&report)]);
    assert_eq!(o.status.code(), Some(0));
    let direct = tradeoff(&["curve", "--poisson", "1,3"]);
    let a = TradeoffCurve::from_csv(&stdout(&o)).unwrap();
    let b = TradeoffCurve::from_csv(&stdout(&direct)).unwrap();
    assert!(tradeoff::tofcurve::sup_distance(&a, &b) < 1e-8);
}

#[test]
fn output_is_deterministic() {
    let a = tradeoff(&["compose", "--binomial", "10,0.1,0.3", "--n", "7"]);
    let b = tradeoff(&["compose", "--binomial", "10,0.1,0.3", "--n", "7"]);
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stderr, b.stderr);
}
