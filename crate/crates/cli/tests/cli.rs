use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn vino(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vino")).args(args).output().unwrap()
}

fn json(args: &[&str]) -> Value {
    let out = vino(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    vino(args).status.code().unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vino-test-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

#[test]
fn documented_examples() {
    let c = |h: &str, s: &str, k: &str, x: &str| json(&["count", "--s", s, "--k", k, "--X", x, "--h", h])["result"]["count"].clone();
    assert_eq!(c("1,3", "1", "2", "5"), 1);
    assert_eq!(c("0,0", "2", "2", "10"), 190);
    assert_eq!(c("0,5,0", "2", "3", "8"), 0);

    let series = json(&["singular", "--series", "--k", "1", "--s", "1", "--h", "0", "--qmax", "20"]);
    assert_eq!(series["result"]["series"]["value"], 1.0);

    let arcs = json(&["arcs", "--classify", "--k", "3", "--X", "1000", "--alpha", "0,0,0"]);
    assert_eq!(arcs["result"]["tag"], "W4");

    let v = json(&["verify", "--suite", "shift-identity", "--trials", "200"]);
    assert_eq!(v["result"]["pass"], true);
}

#[test]
fn record_carries_provenance() {
    let r = json(&["--seed", "9", "count", "--s", "2", "--k", "2", "--X", "6", "--h", "0,0"]);
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["command"], "count");
    assert_eq!(r["params"]["X"], 6);
    assert_eq!(r["provenance"]["settings"]["seed"], 9);
    assert!(r["provenance"]["wall_time_secs"].is_number());
}

#[test]
fn count_methods_agree() {
    for m in ["brute", "mitm", "dft"] {
        let r = json(&["count", "--s", "2", "--k", "2", "--X", "6", "--h", "1,3", "--method", m]);
        let brute = json(&["count", "--s", "2", "--k", "2", "--X", "6", "--h", "1,3", "--method", "brute"]);
        assert_eq!(r["result"]["count"], brute["result"]["count"], "{m}");
    }
}

#[test]
fn ladder_fits_quadratic() {
    let r = json(&["ladder", "--s", "2", "--k", "2", "--h", "0,0", "--xs", "5,10,20,40"]);
    let counts: Vec<u64> = r["result"]["ladder"]["points"]
        .as_array()
        .unwrap()
        .iter()
        .map(|p| p["count"].as_u64().unwrap())
        .collect();
    assert_eq!(counts, [45, 190, 780, 3160]);
    let slope = r["result"]["analysis"]["fit"]["slope"].as_f64().unwrap();
    assert!((slope - 2.0).abs() < 0.1, "{slope}");
}

#[test]
fn ladder_zero_verdict() {
    let r = json(&["ladder", "--s", "2", "--k", "3", "--h", "0,5,0", "--xs", "4,6,8"]);
    assert_eq!(r["result"]["analysis"]["fit"]["verdict"], "identically_zero");
}

#[test]
fn ladder_partial_under_budget() {
    let out = vino(&["--max-entries", "100", "--max-enumeration", "100000", "ladder", "--s", "2", "--k", "2", "--h", "0,0", "--xs", "5,10,20"]);
    assert!(out.status.success());
    let r: Value = serde_json::from_slice(&out.stdout).unwrap();
    let pts = r["result"]["ladder"]["points"].as_array().unwrap();
    assert_eq!(pts[1]["count"], 190);
    assert!(pts[2]["count"].is_null());
    assert!(!r["provenance"]["warnings"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("X=20"));
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["--max-enumeration", "10", "count", "--s", "2", "--k", "2", "--X", "10", "--h", "0,0", "--method", "brute"]), 2);
    assert_eq!(code(&["count", "--s", "2", "--k", "2", "--X", "10", "--h", "0,0,0"]), 3);
    assert_eq!(code(&["count", "--bogus"]), 3);
    assert_eq!(code(&["count", "--s", "0", "--k", "2", "--X", "10", "--h", "0,0"]), 3);

    let dir = scratch("tol");
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, r#"{"tol": 1e-30}"#).unwrap();
    assert_eq!(code(&["--config", cfg.to_str().unwrap(), "sums", "oscillatory", "--beta", "3,1", "--X", "50"]), 4);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn csv_output() {
    let out = vino(&["--format", "csv", "ladder", "--s", "2", "--k", "2", "--h", "0,0", "--xs", "5,10"]);
    let mut rdr = csv::Reader::from_reader(&out.stdout[..]);
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["X", "count", "method", "seconds"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(&rows[0][1], "45");
    assert_eq!(&rows[1][1], "190");
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = scratch("cfg");
    let cfg = dir.join("c.json");
    std::fs::write(&cfg, r#"{"seed": 7, "budget": {"max_entries": 1, "max_enumeration": 1, "max_grid": 1}}"#).unwrap();
    let c = cfg.to_str().unwrap();
    let args = ["count", "--s", "2", "--k", "2", "--X", "10", "--h", "0,0"];
    let base = [&["--config", c][..], &args[..]].concat();
    assert_eq!(code(&base), 2);
    let flags = ["--max-entries", "1000000", "--max-enumeration", "100000000"];
    let r = json(&[&["--config", c][..], &flags[..], &args[..]].concat());
    assert_eq!(r["result"]["count"], 190);
    assert_eq!(r["provenance"]["settings"]["seed"], 7);
}

#[test]
fn results_dir_and_replay() {
    let dir = scratch("replay");
    let d = dir.to_str().unwrap();
    json(&["--results-dir", d, "count", "--s", "2", "--k", "2", "--X", "10", "--h", "0,0"]);
    json(&["--results-dir", d, "singular", "--series", "--k", "2", "--s", "3", "--h", "1,1", "--qmax", "8"]);
    json(&["--results-dir", d, "arcs", "--classify", "--k", "3", "--X", "1000", "--alpha", "0.1,0.2,0.3"]);
    let log = dir.join("runs.jsonl");
    assert_eq!(std::fs::read_to_string(&log).unwrap().lines().count(), 3);
    assert_eq!(code(&["replay", log.to_str().unwrap()]), 0);
    assert_eq!(code(&["--replay", log.to_str().unwrap()]), 0);

    // a tampered result must be detected
    let text = std::fs::read_to_string(&log).unwrap().replace("\"count\":190", "\"count\":191");
    let bad = dir.join("bad.jsonl");
    std::fs::write(&bad, text).unwrap();
    assert_eq!(code(&["replay", bad.to_str().unwrap()]), 4);
}

#[test]
fn cache_round_trip() {
    let dir = scratch("cache");
    let d = dir.to_str().unwrap();
    let args = ["--cache-dir", d, "count", "--s", "2", "--k", "3", "--X", "12", "--h", "0,0,0", "--method", "mitm"];
    let first = json(&args);
    assert!(std::fs::read_dir(&dir).unwrap().count() >= 1);
    let second = json(&args);
    assert_eq!(first["result"]["count"], second["result"]["count"]);

    for e in std::fs::read_dir(&dir).unwrap() {
        std::fs::write(e.unwrap().path(), b"garbage").unwrap();
    }
    let third = vino(&args);
    assert!(third.status.success());
    let r: Value = serde_json::from_slice(&third.stdout).unwrap();
    assert_eq!(r["result"]["count"], first["result"]["count"]);
}

#[test]
fn predict_and_catalog() {
    let p = json(&["predict", "--s", "4", "--k", "2", "--h", "1,1", "--X", "12"]);
    let ratio = p["result"]["ratio"].as_f64().unwrap();
    assert!((0.25..=4.0).contains(&ratio), "{ratio}");

    let c = json(&["catalog", "--s", "3", "--k", "3", "--h", "0,0,0"]);
    assert!(c["result"].to_string().contains("main_conjecture_upper"));
}
