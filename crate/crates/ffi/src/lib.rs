//! C ABI over `ppapprox`.
//!
//! Every function returns a [`PpaStatus`] and writes results through out
//! pointers. On failure the message is kept per thread and read with
//! [`ppa_last_error`]. Panics never cross the boundary; they surface as
//! [`PpaStatus::Panicked`].
//!
//! Configurations and reports are opaque handles, created by the library
//! and released with their `_free` function. Strings returned by the
//! library are released with [`ppa_string_free`].

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ppapprox::bounds::{inverse_moment_bound, matern_bound, occupancy_bound, BoundReport};
use ppapprox::carrier::{CarrierPoint, Geometry, GroundDistance, PointConfig};
use ppapprox::harness::{
    config_from_json, reproduce_counterexample_4_7, reproduce_remark_3_7, run_experiment, Direction, ExperimentConfig,
    Verdict, VerificationReport,
};
use ppapprox::metrics::{rho1, rho1_dd, tv_distance};
use ppapprox::processes::OccupancyModel;
use ppapprox::Error;

/// ABI version, bumped on any incompatible change.
pub const PPA_ABI_VERSION: u32 = 1;

/// Result of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    InvalidConfiguration = 3,
    ResourceExhausted = 4,
    Io = 5,
    Json = 6,
    /// A string argument was not valid UTF-8.
    Utf8 = 7,
    Panicked = 8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpaGeometry {
    Box = 0,
    Torus = 1,
}

impl From<PpaGeometry> for Geometry {
    fn from(g: PpaGeometry) -> Self {
        match g {
            PpaGeometry::Box => Geometry::Box,
            PpaGeometry::Torus => Geometry::Torus,
        }
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PpaVerdict {
    BoundHolds = 0,
    BoundVacuous = 1,
    Violation = 2,
    Inconclusive = 3,
}

impl From<Verdict> for PpaVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::BoundHolds => PpaVerdict::BoundHolds,
            Verdict::BoundVacuous => PpaVerdict::BoundVacuous,
            Verdict::Violation => PpaVerdict::Violation,
            Verdict::Inconclusive => PpaVerdict::Inconclusive,
        }
    }
}

/// Summary of a bound.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PpaBound {
    pub total: f64,
    pub total_stderr: f64,
    /// Nonzero when the total is at least 1.
    pub vacuous: u8,
    /// Nonzero when every side condition holds.
    pub valid: u8,
}

impl From<&BoundReport> for PpaBound {
    fn from(b: &BoundReport) -> Self {
        Self { total: b.total, total_stderr: b.total_stderr, vacuous: u8::from(b.vacuous), valid: u8::from(b.valid()) }
    }
}

/// Opaque point configuration.
pub struct PpaConfig(PointConfig);

/// Opaque verification report.
pub struct PpaReport(VerificationReport);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<Vec<u8>>) {
    let mut bytes = msg.into();
    bytes.retain(|&b| b != 0);
    let c = CString::new(bytes).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> PpaStatus {
    match e {
        Error::InvalidInput(_) => PpaStatus::InvalidInput,
        Error::InvalidConfiguration(_) => PpaStatus::InvalidConfiguration,
        Error::Resource(_) => PpaStatus::ResourceExhausted,
        Error::Io(_) => PpaStatus::Io,
        Error::Json(_) => PpaStatus::Json,
    }
}

/// Failure inside a call, before conversion to a status.
enum Fail {
    Null(&'static str),
    Utf8,
    Lib(Error),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard<F: FnOnce() -> Result<(), Fail>>(f: F) -> PpaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            PpaStatus::Ok
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("null pointer: {what}"));
            PpaStatus::NullPointer
        }
        Ok(Err(Fail::Utf8)) => {
            set_error("string argument is not valid UTF-8");
            PpaStatus::Utf8
        }
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PpaStatus::Panicked
        }
    }
}

unsafe fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn input<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail::Utf8)
}

fn owned_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', "")).expect("nul bytes removed").into_raw()
}

#[no_mangle]
pub extern "C" fn ppa_abi_version() -> u32 {
    PPA_ABI_VERSION
}

/// Message of the last failed call on this thread; empty after a success.
/// Valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn ppa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Releases a string returned by the library. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ppa_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Configuration of `n` points of the unit interval.
#[no_mangle]
pub unsafe extern "C" fn ppa_config_new_interval(xs: *const f64, n: usize, result: *mut *mut PpaConfig) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        let xi = PointConfig::on_interval(slice(xs, n, "xs")?)?;
        *result = Box::into_raw(Box::new(PpaConfig(xi)));
        Ok(())
    })
}

/// Configuration of `n` points of `[0,1]^dim`, coordinates row-major.
#[no_mangle]
pub unsafe extern "C" fn ppa_config_new_cube(
    coords: *const f64,
    n: usize,
    dim: usize,
    result: *mut *mut PpaConfig,
) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        let carrier = ppapprox::carrier::Carrier::unit(dim)?;
        let len = n.checked_mul(dim).ok_or(Fail::Lib(Error::InvalidInput("size overflow".into())))?;
        let c = slice(coords, len, "coords")?;
        let points = if dim == 0 { Vec::new() } else { c.chunks(dim).map(CarrierPoint::from_coords).collect::<ppapprox::Result<_>>()? };
        *result = Box::into_raw(Box::new(PpaConfig(PointConfig::new(carrier, points)?)));
        Ok(())
    })
}

/// Configuration from its JSON form.
#[no_mangle]
pub unsafe extern "C" fn ppa_config_from_json(json: *const c_char, result: *mut *mut PpaConfig) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        let v: serde_json::Value = serde_json::from_str(string(json, "json")?).map_err(Error::from)?;
        *result = Box::into_raw(Box::new(PpaConfig(config_from_json(&v)?)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ppa_config_len(config: *const PpaConfig, result: *mut usize) -> PpaStatus {
    guard(|| {
        *out(result, "result")? = input(config, "config")?.0.len();
        Ok(())
    })
}

/// Releases a configuration. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ppa_config_free(config: *mut PpaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

unsafe fn metric(
    a: *const PpaConfig,
    b: *const PpaConfig,
    geometry: PpaGeometry,
    result: *mut f64,
    f: fn(&PointConfig, &PointConfig, &GroundDistance) -> ppapprox::Result<f64>,
) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = f(&input(a, "a")?.0, &input(b, "b")?.0, &GroundDistance::capped(geometry.into()))?;
        Ok(())
    })
}

/// `rho1` under the capped Euclidean ground distance.
#[no_mangle]
pub unsafe extern "C" fn ppa_rho1(a: *const PpaConfig, b: *const PpaConfig, geometry: PpaGeometry, result: *mut f64) -> PpaStatus {
    metric(a, b, geometry, result, rho1)
}

/// `rho1''` under the capped Euclidean ground distance.
#[no_mangle]
pub unsafe extern "C" fn ppa_rho1_dd(a: *const PpaConfig, b: *const PpaConfig, geometry: PpaGeometry, result: *mut f64) -> PpaStatus {
    metric(a, b, geometry, result, rho1_dd)
}

/// Total variation between two pmfs on `0, 1, 2, ...`.
#[no_mangle]
pub unsafe extern "C" fn ppa_tv_distance(p: *const f64, np: usize, q: *const f64, nq: usize, result: *mut f64) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = tv_distance(slice(p, np, "p")?, slice(q, nq, "q")?)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ppa_matern_bound(
    mu: f64,
    r: f64,
    d: usize,
    geometry: PpaGeometry,
    grid: usize,
    result: *mut PpaBound,
) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = (&matern_bound(mu, r, d, geometry.into(), grid)?).into();
        Ok(())
    })
}

/// Both occupancy bounds for `s` balls in `n` equally likely urns, threshold `m`.
#[no_mangle]
pub unsafe extern "C" fn ppa_occupancy_bound(
    n: usize,
    s: u64,
    m: u64,
    exact: *mut PpaBound,
    explicit: *mut PpaBound,
) -> PpaStatus {
    guard(|| {
        let (exact, explicit) = (out(exact, "exact")?, out(explicit, "explicit")?);
        let ob = occupancy_bound(&OccupancyModel::uniform(n, s, m)?)?;
        *exact = (&ob.exact).into();
        *explicit = (&ob.explicit).into();
        Ok(())
    })
}

/// Bound on `E(1/X)` for `X >= 1` with the given mean and variance.
#[no_mangle]
pub unsafe extern "C" fn ppa_inverse_moment_bound(mean: f64, var: f64, result: *mut f64) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = inverse_moment_bound(mean, var)?;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ppa_reproduce_remark_3_7(joint: *mut f64, factorized: *mut f64) -> PpaStatus {
    guard(|| {
        let (joint, factorized) = (out(joint, "joint")?, out(factorized, "factorized")?);
        let r = reproduce_remark_3_7();
        *joint = r.joint;
        *factorized = r.factorized;
        Ok(())
    })
}

/// `direction` is -1, 0 or 1 as the conditional probability is below, at or above the unconditional one.
#[no_mangle]
pub unsafe extern "C" fn ppa_reproduce_counterexample_4_7(
    b: f64,
    q: f64,
    conditional: *mut f64,
    unconditional: *mut f64,
    direction: *mut i32,
) -> PpaStatus {
    guard(|| {
        let (c, u, dir) = (out(conditional, "conditional")?, out(unconditional, "unconditional")?, out(direction, "direction")?);
        let r = reproduce_counterexample_4_7(b, q)?;
        *c = r.conditional;
        *u = r.unconditional;
        *dir = match r.direction {
            Direction::Less => -1,
            Direction::Equal => 0,
            Direction::Greater => 1,
        };
        Ok(())
    })
}

/// Runs an experiment described by JSON and returns the report handle.
#[no_mangle]
pub unsafe extern "C" fn ppa_run_experiment(config_json: *const c_char, result: *mut *mut PpaReport) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        let cfg = ExperimentConfig::from_json(string(config_json, "config_json")?)?;
        *result = Box::into_raw(Box::new(PpaReport(run_experiment(&cfg)?)));
        Ok(())
    })
}

/// Runs an experiment and returns the report as JSON; free it with [`ppa_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ppa_run_experiment_json(config_json: *const c_char, result: *mut *mut c_char) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = ptr::null_mut();
        let cfg = ExperimentConfig::from_json(string(config_json, "config_json")?)?;
        *result = owned_string(run_experiment(&cfg)?.to_json());
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ppa_report_verdict(report: *const PpaReport, result: *mut PpaVerdict) -> PpaStatus {
    guard(|| {
        *out(result, "result")? = input(report, "report")?.0.verdict.into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ppa_report_bound(report: *const PpaReport, result: *mut PpaBound) -> PpaStatus {
    guard(|| {
        *out(result, "result")? = (&input(report, "report")?.0.bound).into();
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn ppa_report_seed(report: *const PpaReport, result: *mut u64) -> PpaStatus {
    guard(|| {
        *out(result, "result")? = input(report, "report")?.0.seed;
        Ok(())
    })
}

/// The report as JSON; free it with [`ppa_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ppa_report_json(report: *const PpaReport, result: *mut *mut c_char) -> PpaStatus {
    guard(|| {
        let result = out(result, "result")?;
        *result = owned_string(input(report, "report")?.0.to_json());
        Ok(())
    })
}

/// Releases a report. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ppa_report_free(report: *mut PpaReport) {
    if !report.is_null() {
        drop(Box::from_raw(report));
    }
}
