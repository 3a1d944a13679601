use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ppapprox(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ppapprox")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const OCCUPANCY: [&str; 10] = ["experiment", "occupancy", "--n", "100", "--s", "460", "--samples", "30", "--replicates", "3"];

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&ppapprox(&[])), 2);
    assert_eq!(code(&ppapprox(&["frobnicate"])), 2);
    assert_eq!(code(&ppapprox(&["experiment", "occupancy", "--mu", "3", "--n", "5", "--s", "5"])), 2);
    assert_eq!(code(&ppapprox(&["experiment", "matern", "--mu", "10", "--r", "0.01", "--d", "2", "--replicates", "2"])), 2);
    assert_eq!(code(&ppapprox(&["reproduce", "counterexample-4.7", "--b", "3"])), 2);
    assert_eq!(code(&ppapprox(&["selftest", "--inject-fault", "nonsense"])), 2);
    assert_eq!(code(&ppapprox(&["experiment", "palindrome", "--fasta", "/nonexistent/seq.fa", "--seed", "1"])), 2);
    assert_eq!(code(&ppapprox(&["--version"])), 0);
    assert_eq!(code(&ppapprox(&["--help"])), 0);
}

#[test]
fn experiment_is_reproducible_from_its_seed() {
    let mut args = OCCUPANCY.to_vec();
    args.extend(["--seed", "4"]);
    let (a, b) = (ppapprox(&args), ppapprox(&args));
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let (a, b) = (json(&a), json(&b));
    assert_eq!(a["seed"], 4);
    assert_eq!(a["config"]["seed"], 4);
    assert_eq!(a["empirical"], b["empirical"]);
    assert_eq!(a["bound"], b["bound"]);
    assert_eq!(a["config_sha256"], b["config_sha256"]);
    assert_eq!(a["verdict"], "bound-holds");
}

#[test]
fn unseeded_runs_record_their_seed() {
    let out = ppapprox(&OCCUPANCY);
    assert_eq!(code(&out), 0);
    let seed = json(&out)["seed"].as_u64().unwrap();
    assert!(String::from_utf8_lossy(&out.stderr).contains(&format!("seed: {seed}")));
}

#[test]
fn config_files_override_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"experiment": {"kind": "occupancy", "n": 10}, "seed": 9}"#).unwrap();
    let mut args = OCCUPANCY.to_vec();
    args.extend(["--seed", "1", "--config", path(&cfg)]);
    let out = ppapprox(&args);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["seed"], 9);
    assert_eq!(r["config"]["experiment"]["n"], 10);
    assert_eq!(r["config"]["experiment"]["s"], 460);

    std::fs::write(&cfg, r#"{"experiment": {"kind": "matern"}}"#).unwrap();
    let mut args = OCCUPANCY.to_vec();
    args.extend(["--config", path(&cfg)]);
    assert_eq!(code(&ppapprox(&args)), 2);
    std::fs::write(&cfg, r#"{"samples": 1}"#).unwrap();
    assert_eq!(code(&ppapprox(&args)), 2);
    std::fs::write(&cfg, "{").unwrap();
    assert_eq!(code(&ppapprox(&args)), 2);
}

#[test]
fn csv_reports_go_to_files() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("report.csv");
    let mut args = OCCUPANCY.to_vec();
    args.extend(["--seed", "2", "--format", "csv", "--out", path(&out_path)]);
    let out = ppapprox(&args);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&out_path).unwrap();
    assert!(text.starts_with("report,theorem,quantity,value,stderr"));
    assert!(text.contains("empirical"));
}

#[test]
fn selftest_exit_codes() {
    let out = ppapprox(&["selftest", "--seed", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["all_passed"], true);
    let out = ppapprox(&["selftest", "--seed", "3", "--inject-fault", "assignment-cost"]);
    assert_eq!(code(&out), 1);
    let s = json(&out);
    assert_eq!(s["all_passed"], false);
    assert_eq!(s["fault"], "assignment-cost");
}

#[test]
fn reproductions_and_checks() {
    let out = ppapprox(&["reproduce", "remark-3.7"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("0.009") && text.contains("0.0095"), "{text}");
    let out = ppapprox(&["reproduce", "counterexample-4.7", "--b", "0.5", "--format", "json"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["details"]["direction"], "greater");
    let out = ppapprox(&["check", "palm", "--seed", "5", "--samples", "2000"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let out = ppapprox(&["check", "stein", "--seed", "5", "--samples", "2000", "--lambda", "3"]);
    assert_eq!(code(&out), 0);
    assert_eq!(json(&out)["metric"], "stein-residual");
}

#[test]
fn metrics_on_files() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a.json"), dir.path().join("b.json"), dir.path().join("c.json"));
    std::fs::write(&a, "[0.1, 0.5]").unwrap();
    std::fs::write(&b, "[0.2, 0.5]").unwrap();
    std::fs::write(&c, "[[0.1, 0.2]]").unwrap();
    let out = ppapprox(&["metrics", "rho1dd", "--a", path(&a), "--b", path(&b)]);
    assert_eq!(code(&out), 0);
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 0.1).abs() < 1e-12);
    let out = ppapprox(&["metrics", "rho1", "--a", path(&a), "--b", path(&b)]);
    let v: f64 = String::from_utf8_lossy(&out.stdout).trim().parse().unwrap();
    assert!((v - 0.05).abs() < 1e-12);
    assert_eq!(code(&ppapprox(&["metrics", "rho1", "--a", path(&a), "--b", path(&c)])), 2);
    assert_eq!(code(&ppapprox(&["metrics", "rho1", "--a", path(&a), "--b", "/nonexistent.json"])), 2);
}
