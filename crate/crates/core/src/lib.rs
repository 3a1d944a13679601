//! Poisson process approximation toolkit.
//!
//! Samplers for dependent point processes (Matérn hard-core, occupancy
//! indicators, DNA palindromes, marked dependent trials, immigration-death
//! dynamics), explicit Stein-method error bounds for approximating them by
//! Poisson processes, and an empirical verification harness built on exact
//! optimal assignment.
//!
//! Module map:
//!
//! - [`carrier`]: points, finite configurations and ground pseudometrics.
//! - [`metrics`]: the configuration distances `rho1` / `rho1_dd`, the
//!   assignment solver behind them, and sample-based law distances.
//! - [`processes`]: seedable samplers and model metadata.
//! - [`palm`]: Palm couplings, conditional intensities, local-dependence and
//!   identity checks.
//! - [`bounds`]: closed-form and Monte-Carlo error bounds as [`bounds::BoundReport`]s.
//! - [`harness`]: experiment orchestration, exact worked examples, selftest.

#![forbid(unsafe_code)]
// `!(x >= 0.0)` deliberately rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod bounds;
pub mod carrier;
pub mod error;
pub mod harness;
pub mod metrics;
pub mod palm;
pub mod processes;
pub mod rng;
pub mod special;

pub use error::{Error, Result};
