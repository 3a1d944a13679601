use ppapprox::harness::{run_experiment, ExperimentConfig, Verdict};

fn config(json: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(json).unwrap()
}

#[test]
fn same_seed_same_report() {
    let cfg = config(r#"{"experiment": {"kind": "marked-trials", "mode": "exact"}, "samples": 40, "replicates": 3, "seed": 21}"#);
    let (a, b) = (run_experiment(&cfg).unwrap(), run_experiment(&cfg).unwrap());
    assert_eq!(a.empirical, b.empirical);
    assert_eq!(a.null_baseline, b.null_baseline);
    assert_eq!(a.bound, b.bound);
    assert_eq!(a.config_sha256, b.config_sha256);
    let other = config(r#"{"experiment": {"kind": "marked-trials", "mode": "exact"}, "samples": 40, "replicates": 3, "seed": 22}"#);
    assert_ne!(run_experiment(&other).unwrap().empirical, a.empirical);
}

#[test]
fn hard_core_free_matern_holds() {
    let cfg = config(r#"{"experiment": {"kind": "matern", "mu": 20, "r": 0, "d": 1}, "samples": 40, "replicates": 3, "seed": 2}"#);
    let r = run_experiment(&cfg).unwrap();
    assert_eq!(r.bound.total, 0.0);
    // the target is itself Poisson, so only the estimator's bias remains
    assert_eq!(r.verdict, Verdict::BoundHolds);
    let excess = r.excess.unwrap();
    assert!(excess.value.abs() <= 3.0 * excess.stderr, "{excess:?}");
}

#[test]
fn reports_round_trip_through_json() {
    let cfg = config(r#"{"experiment": {"kind": "reproduce", "example": "counterexample-4.7"}, "seed": 1}"#);
    let r = run_experiment(&cfg).unwrap();
    let back: ppapprox::harness::VerificationReport = serde_json::from_str(&r.to_json()).unwrap();
    assert_eq!(back, r);
    assert_eq!(r.verdict, Verdict::BoundHolds);
}
