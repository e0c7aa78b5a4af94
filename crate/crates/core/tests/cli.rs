use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sbm-motif")).args(args).output().expect("binary runs")
}

fn read(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn build_check_sample_count_recover() {
    let dir = tempfile::tempdir().unwrap();
    let motif = dir.path().join("motif.json");
    let out = run(&["motif", "build", "--L", "4", "--B", "1", "--a", "1/2", "--out", s(&motif)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read(&motif);
    assert_eq!(doc["a"], serde_json::json!({"num": 1, "den": 2}));
    assert_eq!(doc["edges"][0], serde_json::json!([0, 3]));

    let report = dir.path().join("check.json");
    let out = run(&["motif", "check", "--motif", s(&motif), "--exhaustive", "--report", s(&report)]);
    assert!(out.status.success());
    let check = read(&report);
    assert_eq!(check["min_slack"], serde_json::json!({"num": 0, "den": 1}));
    assert_eq!(check["boundary_lemma"]["holds"], Value::Bool(true));
    assert_eq!(check["pass"], Value::Bool(true));

    let sample = dir.path().join("sample.json");
    let out = run(&["sbm", "sample", "--n", "14", "--K", "2", "--p", "0.8", "--q", "0.1", "--seed", "3", "--pin", "same", "--out", s(&sample)]);
    assert!(out.status.success());
    let doc = read(&sample);
    assert_eq!(doc["z"][0], doc["z"][1]);
    assert_eq!(doc["K"], 2);

    let counts = dir.path().join("count.json");
    let out = run(&["count", "--sample", s(&sample), "--motif", s(&motif), "--i", "0", "--j", "1", "--blocks", "3", "--out", s(&counts)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read(&counts);
    assert_eq!(doc["blocks"].as_array().unwrap().len(), 3);
    assert_eq!(doc["num_injections"][0], 4 * 3 * 2);
    let total: f64 = doc["blocks"].as_array().unwrap().iter().map(|v| v.as_f64().unwrap()).sum();
    assert_eq!(doc["total"].as_f64().unwrap(), total);

    let result = dir.path().join("recover.json");
    let out = run(&[
        "recover", "--sample", s(&sample), "--motif", s(&motif), "--lambda", "0.7", "--q", "0.1", "--K", "2",
        "--blocks", "2", "--pairs", "--out", s(&result),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc = read(&result);
    assert_eq!(doc["xhat"].as_array().unwrap().len(), 14 * 13 / 2);
    assert_eq!(doc["pairs"].as_array().unwrap().len(), 14 * 13 / 2);
    assert!(doc["clusters"].is_array());
}

#[test]
fn divisibility_error_suggests_n() {
    let dir = tempfile::tempdir().unwrap();
    let motif = dir.path().join("motif.json");
    let sample = dir.path().join("sample.json");
    assert!(run(&["motif", "build", "--L", "3", "--B", "1", "--a", "2/3", "--out", s(&motif)]).status.success());
    assert!(run(&["sbm", "sample", "--n", "13", "--K", "2", "--p", "0.8", "--q", "0.1", "--seed", "1", "--out", s(&sample)]).status.success());
    let out = run(&[
        "recover", "--sample", s(&sample), "--motif", s(&motif), "--lambda", "0.7", "--q", "0.1", "--K", "2",
        "--blocks", "2", "--out", s(&dir.path().join("r.json")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nearest valid n is 12"));
}

#[test]
fn invalid_motif_and_params_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["motif", "build", "--L", "3", "--B", "1", "--a", "1/2", "--out", s(&dir.path().join("m.json"))]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sbm", "sample", "--n", "5", "--K", "2", "--p", "0.2", "--q", "0.2", "--seed", "1", "--out", s(&dir.path().join("x.json"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn broken_motif_check_exits_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let motif = dir.path().join("broken.json");
    let doc = serde_json::json!({
        "version": 1,
        "num_vertices": 6,
        "v1": 0,
        "v2": 1,
        "edges": [[0, 3], [1, 5], [2, 5], [3, 4], [4, 5]]
    });
    std::fs::write(&motif, doc.to_string()).unwrap();
    let report = dir.path().join("check.json");
    let out = run(&["motif", "check", "--motif", s(&motif), "--report", s(&report)]);
    assert_eq!(out.status.code(), Some(1));
    let check = read(&report);
    assert_eq!(check["pass"], Value::Bool(false));
    assert!(check["argmin_partition"]["labels"].is_array());
}

#[test]
fn experiment_writes_json_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("mean.cfg");
    std::fs::write(&config, "n = 8\nK = 2\np = 0.7\nq = 0.2\nmotif = 3,1,2/3\ntrials = 2000\nseed = 5\n").unwrap();
    let out_path = dir.path().join("mean.json");
    let out = run(&["experiment", "mean", "--config", s(&config), "--out", s(&out_path), "--workers", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read(&out_path);
    assert_eq!(report["environment"]["worker_count"], 2);
    let csv = std::fs::read_to_string(dir.path().join("mean.csv")).unwrap();
    assert!(csv.starts_with("experiment,name,estimate"));
    assert_eq!(csv.lines().count(), 3);
}
