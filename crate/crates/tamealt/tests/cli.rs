use std::process::{Command, Output};

use serde_json::Value;

fn tamealt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tamealt"))
        .args(args)
        .env("TAMEALT_WORKERS", "2")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

#[test]
fn delta_certificate() {
    let out = tamealt(&["delta", "--n", "7", "--ar", "3", "--eps", "1/4"]);
    assert_eq!(out.status.code(), Some(0));
    let j = json(&out);
    assert_eq!(j["positive_definite"], true);
    assert_eq!(j["eps"], "1/4");
}

#[test]
fn exhaustive_census_and_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("records.csv");
    let out = tamealt(&[
        "census", "minimality", "--sig", "b2,b2", "--p", "2", "--k", "2", "--mode", "exhaustive",
        "--csv", csv.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let j = json(&out);
    assert_eq!(j["counts"]["total"], 65536);
    assert_eq!(j["counts"]["oracle_disagreements"], 0);

    let mut reader = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 65536);
    assert_eq!(&rows[0][0], "0");
    let minimal = rows.iter().filter(|r| &r[2] == "1").count();
    assert_eq!(minimal as u64, j["counts"]["minimal"].as_u64().unwrap());
}

#[test]
fn verify_action_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let bundle = dir.path().join("bundle.json");
    let args = [
        "verify-action", "--p", "3", "--k", "1", "--n", "4", "--d", "2", "--seed", "7", "--bundle",
        bundle.to_str().unwrap(),
    ];
    let a = tamealt(&args);
    let b = tamealt(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let j = json(&a);
    assert_eq!(j["measured"]["group"], "Alt(80)");
    let bundle: Value = serde_json::from_str(&std::fs::read_to_string(&bundle).unwrap()).unwrap();
    assert_eq!(bundle["degree"], 80);
}

#[test]
fn sampled_census_is_worker_independent() {
    let args = ["census", "autos", "--p", "3", "--k", "2", "--samples", "3000", "--seed", "11"];
    let one = Command::new(env!("CARGO_BIN_EXE_tamealt"))
        .args(args)
        .env("TAMEALT_WORKERS", "1")
        .output()
        .unwrap();
    let four = Command::new(env!("CARGO_BIN_EXE_tamealt"))
        .args(args)
        .env("TAMEALT_WORKERS", "4")
        .output()
        .unwrap();
    assert_eq!(one.status.code(), Some(0));
    assert_eq!(one.stdout, four.stdout);
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(tamealt(&["census", "autos", "--p", "3", "--k", "2"]).status.code(), Some(2));
    assert_eq!(tamealt(&["delta", "--n", "7", "--ar", "3", "--eps", "x"]).status.code(), Some(2));
    assert_eq!(tamealt(&["angle", "--p", "4"]).status.code(), Some(2));
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("angle.json");
    let out = tamealt(&["angle", "--p", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let j: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(j["pass"], true);
}
