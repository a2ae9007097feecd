use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SCHEMA: &str = include_str!("../../core/schemas/test_report.schema.json");

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_torus-gof"));
    c.env_remove("CI").env("TORUS_GOF_THREADS", "1");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn validate(report: &Value) {
    let schema: Value = serde_json::from_str(SCHEMA).unwrap();
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(report) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| e.to_string()).collect(),
    };
    panic!("report violates schema: {msgs:?}\n{report}");
}

const A: &str = "phi,psi\n-63.8,-41.1\n-120.2,130.5\n57.0,47.3\n-75.0,145.0\n-90.0,0.0\n60.0,-120.0\n";
const B: &str = "phi,psi\n-60.0,-45.0\n-110.0,120.0\n50.0,40.0\n-80.0,150.0\n170.0,170.0\n";

#[test]
fn upper_bound_on_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", A);
    let out = run(dir.path(), &["test", "--method", "upper-bound", "a.csv", "a.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["statistic"], 0.0);
    assert_eq!(v["p_value"], 1.0);
    validate(&v);
    assert!(dir.path().join("torus-gof-manifest.json").exists());
}

#[test]
fn every_method_emits_a_valid_report() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", A);
    write(dir.path(), "b.csv", B);
    for method in ["marginal", "upper-bound", "clt-diagnostic"] {
        let out = run(
            dir.path(),
            &["test", "--method", method, "--permutations", "99", "--bootstrap", "100", "--seed", "4", "a.csv", "b.csv"],
        );
        assert_eq!(out.status.code(), Some(0), "{method}: {}", String::from_utf8_lossy(&out.stderr));
        let v = json(&out);
        assert_eq!(v["method"], method);
        validate(&v);
    }
}

#[test]
fn identical_runs_produce_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", A);
    write(dir.path(), "b.csv", B);
    let args = ["test", "--method", "marginal", "--permutations", "199", "--seed", "11", "a.csv", "b.csv"];
    let first = run(dir.path(), &args);
    let second = bin()
        .current_dir(dir.path())
        .env("TORUS_GOF_THREADS", "3")
        .args(args)
        .output()
        .unwrap();
    assert_eq!(first.stdout, second.stdout);

    let sim = ["simulate", "--scenario", "H1", "--n", "15", "--m", "15", "--replicates", "4", "--seed", "7",
        "--permutations", "99", "--bootstrap", "100", "--summary", "s.json"];
    let a = run(dir.path(), &sim);
    let sa = std::fs::read(dir.path().join("s.json")).unwrap();
    let b = run(dir.path(), &sim);
    let sb = std::fs::read(dir.path().join("s.json")).unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(sa, sb);
}

#[test]
fn simulate_writes_long_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        dir.path(),
        &["simulate", "--scenario", "H1", "--n", "20", "--m", "20", "--replicates", "5", "--seed", "7",
            "--methods", "marginal,upper-bound", "--permutations", "99", "--out", "r.csv", "--summary", "s.json"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("r.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "replicate,method,statistic,p_value");
    assert_eq!(lines.len(), 1 + 10);
    let summary: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["schema_version"], 1);
    assert_eq!(summary["methods"].as_array().unwrap().len(), 2);
    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("torus-gof-manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 7);
    assert_eq!(manifest["command"], "simulate");
}

#[test]
fn simulate_requires_seed_in_ci() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .current_dir(dir.path())
        .env("CI", "true")
        .args(["simulate", "--scenario", "H0", "--replicates", "1", "--n", "5", "--m", "5"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", A);
    write(dir.path(), "bad.csv", "phi,psi\n0,0\n400,0\n");
    write(dir.path(), "junk.csv", "phi,psi\n0,zero\n");

    let out = run(dir.path(), &["test", "--unknown-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));

    let out = run(dir.path(), &["distance", "a.csv", "bad.csv"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(dir.path(), &["distance", "a.csv", "junk.csv"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &["distance", "a.csv", "missing.csv"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(dir.path(), &["test", "--method", "marginal", "--permutations", "5", "a.csv", "a.csv"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(dir.path(), &["simulate", "--scenario", "H7", "--seed", "1"]);
    assert_eq!(out.status.code(), Some(1));

    let out = run(dir.path(), &["--help"]);
    assert_eq!(out.status.code(), Some(0));
}

#[test]
fn distance_with_plan_and_duals() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", A);
    write(dir.path(), "b.csv", B);
    let out = run(dir.path(), &["distance", "--plan", "--duals", "a.csv", "b.csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["n"], 6);
    assert_eq!(v["m"], 5);
    let cost = v["cost"].as_f64().unwrap();
    let mass: f64 = v["plan"].as_array().unwrap().iter().map(|e| e["mass"].as_f64().unwrap()).sum();
    assert!((mass - 1.0).abs() < 1e-12);
    let f: f64 = v["dual_f"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum::<f64>() / 6.0;
    let g: f64 = v["dual_g"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum::<f64>() / 5.0;
    assert!((f + g - cost).abs() < 1e-9);
}

#[test]
fn null_table_round_trip_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.csv", A);
    write(dir.path(), "b.csv", "phi,psi\n-60,-45\n-110,120\n50,40\n-80,150\n170,170\n10,10\n");
    let out = run(dir.path(), &["null-table", "--n", "6", "--m", "6", "--B", "199", "--seed", "2", "--out", "t.json"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(dir.path(), &["test", "--method", "marginal", "--null-table", "t.json", "a.csv", "b.csv"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["details"]["calibration"], "null-table");
    validate(&v);

    // table built for other sizes
    let out = run(dir.path(), &["null-table", "--n", "7", "--m", "6", "--B", "99", "--out", "t7.json"]);
    assert_eq!(out.status.code(), Some(0));
    let out = run(dir.path(), &["test", "--method", "marginal", "--null-table", "t7.json", "a.csv", "b.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn radians_and_positional_columns() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "r.tsv", "res\t0.0\t0.0\nres\t3.0\t-3.0\n");
    let out = run(
        dir.path(),
        &["distance", "--units", "radians", "--no-header", "--delimiter", "\t", "--phi", "1", "--psi", "2", "r.tsv", "r.tsv"],
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(json(&out)["cost"], 0.0);
}

#[test]
fn rate_check_reports_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(dir.path(), &["rate-check", "--n", "20,40", "--replicates", "2", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = json(&out);
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert!(v["fitted_exponent"].is_number());
}
