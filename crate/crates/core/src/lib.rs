//! Sequential testing engine for continuous experiment monitoring.
//!
//! The library tracks the cumulative metric difference between a control and
//! a treatment group over a stream of events and compares it against an
//! alerting boundary. Two kinds of boundary are provided:
//!
//! - a **constant** boundary `b* = z_{1-alpha/2} * sqrt(N * V_N)` (the YEAST
//!   test), which supports checking for significance after every event, and
//! - a **staircase** boundary (pYEAST) built by inflating per-period
//!   thresholds until a convolution-based false-detection-rate bound drops
//!   below the significance level,
//!
//! together with mSPRT, GAVI, and Bonferroni baselines, variance estimators
//! (iid and cluster-robust), subject-level downsampling, progressive outcome
//! capping, and a deterministic Monte-Carlo harness that benchmarks all of
//! the above.
//!
//! Modules map onto the moving parts:
//!
//! - [`statdist`]: normal density/CDF/quantile, Gauss-Legendre quadrature,
//!   and the normal-times-truncated-normal convolution CDF.
//! - [`boundaries`]: boundary construction and baseline decision rules.
//! - [`monitor`]: the streaming engine, variance estimation, and event
//!   transforms.
//! - [`simharness`]: reproducible Monte-Carlo benchmarks, permutation
//!   validation on clustered data, and an exhaustive maximal-inequality
//!   oracle.

pub mod boundaries;
pub mod error;
mod kv;
pub mod monitor;
pub mod simharness;
pub mod statdist;
#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
