use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use ppapprox_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ppa_last_error()) }.to_string_lossy().into_owned()
}

fn interval(xs: &[f64]) -> *mut PpaConfig {
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ppa_config_new_interval(xs.as_ptr(), xs.len(), &mut h) }, PpaStatus::Ok);
    h
}

#[test]
fn version() {
    assert_eq!(ppa_abi_version(), PPA_ABI_VERSION);
}

#[test]
fn metrics_through_handles() {
    let a = interval(&[0.1, 0.5]);
    let b = interval(&[0.2]);
    let mut len = 0;
    let mut d = f64::NAN;
    unsafe {
        assert_eq!(ppa_config_len(a, &mut len), PpaStatus::Ok);
        assert_eq!(len, 2);
        assert_eq!(ppa_rho1(a, a, PpaGeometry::Box, &mut d), PpaStatus::Ok);
        assert_eq!(d, 0.0);
        // unequal counts are at distance 1
        assert_eq!(ppa_rho1(a, b, PpaGeometry::Box, &mut d), PpaStatus::Ok);
        assert_eq!(d, 1.0);
        assert_eq!(ppa_rho1_dd(a, b, PpaGeometry::Box, &mut d), PpaStatus::Ok);
        assert!((d - 1.1).abs() < 1e-12);
        ppa_config_free(a);
        ppa_config_free(b);
        ppa_config_free(ptr::null_mut());
    }
}

#[test]
fn config_json_and_cube() {
    let json = CString::new("[[0.1, 0.2], [0.3, 0.4]]").unwrap();
    let mut h = ptr::null_mut();
    let mut len = 0;
    unsafe {
        assert_eq!(ppa_config_from_json(json.as_ptr(), &mut h), PpaStatus::Ok);
        assert_eq!(ppa_config_len(h, &mut len), PpaStatus::Ok);
        assert_eq!(len, 2);
        ppa_config_free(h);
        let coords = [0.1, 0.2, 0.3, 0.4, 0.5, 0.6];
        assert_eq!(ppa_config_new_cube(coords.as_ptr(), 2, 3, &mut h), PpaStatus::Ok);
        assert_eq!(ppa_config_len(h, &mut len), PpaStatus::Ok);
        assert_eq!(len, 2);
        ppa_config_free(h);
    }
}

#[test]
fn errors_are_reported() {
    let mut h = ptr::null_mut();
    let mut d = 0.0;
    unsafe {
        let bad = [1.5];
        assert_eq!(ppa_config_new_interval(bad.as_ptr(), 1, &mut h), PpaStatus::InvalidInput);
        assert!(h.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(ppa_config_new_interval(ptr::null(), 3, &mut h), PpaStatus::NullPointer);
        assert!(last_error().contains("xs"));
        assert_eq!(ppa_rho1(ptr::null(), ptr::null(), PpaGeometry::Box, &mut d), PpaStatus::NullPointer);
        let junk = CString::new("{not json").unwrap();
        assert_eq!(ppa_config_from_json(junk.as_ptr(), &mut h), PpaStatus::Json);
        assert_eq!(ppa_reproduce_counterexample_4_7(3.0, 0.01, &mut d, &mut d, &mut 0), PpaStatus::InvalidInput);
        // a success clears the message
        assert_eq!(ppa_inverse_moment_bound(3.0, 1.0, &mut d), PpaStatus::Ok);
        assert!(last_error().is_empty());
    }
}

#[test]
fn bounds_and_reproductions() {
    let mut b = PpaBound::default();
    let mut e = PpaBound::default();
    let (mut x, mut y, mut dir) = (0.0, 0.0, 7);
    let p = [0.5, 0.5];
    let q = [0.25, 0.75];
    unsafe {
        assert_eq!(ppa_occupancy_bound(100, 460, 0, &mut e, &mut b), PpaStatus::Ok);
        assert!((e.total - 0.460147588).abs() < 1e-6);
        assert_eq!(e.vacuous, 0);
        assert_eq!(ppa_matern_bound(50.0, 0.0, 2, PpaGeometry::Torus, 16, &mut b), PpaStatus::Ok);
        assert_eq!(b.total, 0.0);
        assert_eq!(ppa_tv_distance(p.as_ptr(), 2, q.as_ptr(), 2, &mut x), PpaStatus::Ok);
        assert!((x - 0.25).abs() < 1e-15);
        assert_eq!(ppa_reproduce_remark_3_7(&mut x, &mut y), PpaStatus::Ok);
        assert!((x - 0.009).abs() < 1e-15 && (y - 0.0095).abs() < 1e-15);
        assert_eq!(ppa_reproduce_counterexample_4_7(2.0, 0.01, &mut x, &mut y, &mut dir), PpaStatus::Ok);
        assert_eq!(dir, -1);
        assert!((x - 1e-4).abs() < 1e-12 && (y - 2e-4).abs() < 1e-12);
    }
}

#[test]
fn experiments() {
    let cfg = CString::new(r#"{"experiment": {"kind": "reproduce", "example": "remark-3.7"}, "seed": 5}"#).unwrap();
    let mut report = ptr::null_mut();
    let mut verdict = PpaVerdict::Violation;
    let mut seed = 0;
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(ppa_run_experiment(cfg.as_ptr(), &mut report), PpaStatus::Ok);
        assert_eq!(ppa_report_verdict(report, &mut verdict), PpaStatus::Ok);
        assert_eq!(verdict, PpaVerdict::BoundHolds);
        assert_eq!(ppa_report_seed(report, &mut seed), PpaStatus::Ok);
        assert_eq!(seed, 5);
        assert_eq!(ppa_report_json(report, &mut s), PpaStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(v["verdict"], "bound-holds");
        ppa_string_free(s);
        ppa_report_free(report);

        assert_eq!(ppa_run_experiment_json(cfg.as_ptr(), &mut s), PpaStatus::Ok);
        assert!(CStr::from_ptr(s).to_str().unwrap().contains("remark-3.7"));
        ppa_string_free(s);

        let bad = CString::new(r#"{"experiment": {"kind": "matern"}}"#).unwrap();
        assert_eq!(ppa_run_experiment_json(bad.as_ptr(), &mut s), PpaStatus::Json);
        assert!(s.is_null());
    }
}

fn target_dir() -> PathBuf {
    // <target>/<profile>/deps/<test binary>
    let exe = std::env::current_exe().unwrap();
    exe.parent().and_then(|p| p.parent()).unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let root = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let lib = target_dir().join("libppapprox_ffi.a");
    if Command::new("cc").arg("--version").output().is_err() || !lib.exists() {
        eprintln!("skipping: no C compiler or static library");
        return;
    }
    let out = tempfile::tempdir().unwrap();
    let src = out.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "ppapprox.h"
int main(void) {
    if (ppa_abi_version() != PPA_ABI_VERSION) return 10;
    double xs[2] = {0.1, 0.5};
    PpaConfig *a = NULL;
    if (ppa_config_new_interval(xs, 2, &a) != PPA_STATUS_OK) return 11;
    double d = -1.0;
    if (ppa_rho1_dd(a, a, PPA_GEOMETRY_BOX, &d) != PPA_STATUS_OK || d != 0.0) return 12;
    ppa_config_free(a);
    double bad = 2.0;
    if (ppa_config_new_interval(&bad, 1, &a) != PPA_STATUS_INVALID_INPUT) return 13;
    if (ppa_last_error()[0] == '\0') return 14;
    PpaBound exact, expl;
    if (ppa_occupancy_bound(100, 460, 0, &exact, &expl) != PPA_STATUS_OK || exact.vacuous) return 15;
    printf("%.6f\n", exact.total);
    return 0;
}
"#,
    )
    .unwrap();
    let bin = out.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(root.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&bin)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let run = Command::new(&bin).output().unwrap();
    assert!(run.status.success(), "C smoke test exited with {:?}", run.status);
    assert_eq!(String::from_utf8_lossy(&run.stdout).trim(), "0.460148");
}
