//! Randomization inference for shift-share (Bartik) designs.
//!
//! The instrument is `Z = S g` for an exposure matrix `S` and sector shocks
//! `g`. Tests of `H0: beta = b` recompute a statistic under simulated shocks
//! drawn from a hypothesized assignment mechanism and compare the observed
//! value to the simulated distribution with a finite-`L` exact rule.
//!
//! The library is generic over the floating point type; the aliases below
//! fix it to `f64`.

// `!(x > floor)` is used on purpose so that NaN counts as degenerate.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod design;
pub mod diagnostics;
pub mod error;
pub mod estimator;
pub mod io;
pub mod montecarlo;
pub mod randomization;
pub mod rng;
pub mod scalar;

pub use design::{build_instrument, demean_shocks, null_residuals, Exposures, NullResiduals, ReducedFormMode, ShiftShareDesign};
pub use error::{Error, Result};
pub use estimator::{
    shift_share_estimate, stat_t0, stat_t1, stat_t1_ratio, stat_t2, variance_clustered, variance_conventional, variance_null_imposed,
    variance_plugin, EstimateResult, VarianceKind, VarianceResult,
};
pub use io::{load_design, parse_design, write_design, IngestOptions};
pub use randomization::{
    berger_boos_test, confidence_interval, exact_enumeration_test, ri_test, RITestResult, Sidedness,
    SimulationScheme, Statistic, TestSpec,
};
pub use scalar::Scalar;

pub type Design = ShiftShareDesign<f64>;
pub type ExposureMatrix = Exposures<f64>;
pub type Spec = TestSpec<f64>;
pub type Scheme = SimulationScheme<f64>;
pub type TestResult = RITestResult<f64>;
