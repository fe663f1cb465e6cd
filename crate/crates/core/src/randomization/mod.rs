//! Randomization inference: shock simulation schemes, the test engine,
//! exact enumeration, the Berger–Boos correction and test inversion.

mod berger_boos;
mod ci;
mod engine;
mod enumerate;
mod kernel;
mod rules;
mod scheme;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub use berger_boos::{berger_boos_test, BergerBoosResult, SymmetryInterval};
pub use ci::{confidence_interval, ConfidenceSet, GridPoint};
pub use engine::{ri_test, simulate_statistics, SimulatedStatistics, MAX_CONSECUTIVE_REDRAWS};
pub use enumerate::{exact_enumeration_test, group_size, ENUMERATION_LIMIT};
pub use rules::{critical_count, p_value, p_value_rule, psi, reject_by_order_statistic, reject_by_p_value};
pub use scheme::{draw_shocks, DrawContext, Drawer, ShockSampler, SimulationScheme};

pub(crate) use scheme::closed_form_moments;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Statistic {
    /// Unstudentized `(1/N) sum Z e_b`.
    T0,
    /// Studentized with the null-imposed shock-robust variance.
    T1,
    /// Studentized with the plug-in variance; reduced form only.
    T2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    #[default]
    TwoSidedAbs,
    RightTail,
    LeftTail,
    /// Both tails at level `alpha / 2` each.
    EqualTail,
}

/// Everything that defines one randomization test.
#[derive(Debug, Clone)]
pub struct TestSpec<T> {
    pub b: T,
    pub statistic: Statistic,
    pub scheme: SimulationScheme<T>,
    /// Number of simulation draws `L`.
    pub draws: usize,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub seed: u64,
    /// Demean observed and simulated shocks before evaluating the statistic.
    pub demean: bool,
    /// Studentize with cluster sums instead of per-sector terms.
    pub cluster_robust: bool,
}

impl<T: Scalar> TestSpec<T> {
    pub const DEFAULT_DRAWS: usize = 999;
    pub const DEFAULT_ALPHA: f64 = 0.05;

    pub fn new(b: T, statistic: Statistic, scheme: SimulationScheme<T>) -> Self {
        Self {
            b,
            statistic,
            scheme,
            draws: Self::DEFAULT_DRAWS,
            alpha: Self::DEFAULT_ALPHA,
            sidedness: Sidedness::default(),
            seed: 0,
            demean: false,
            cluster_robust: false,
        }
    }

    pub fn with_draws(mut self, draws: usize) -> Self {
        self.draws = draws;
        self
    }

    pub fn with_alpha(mut self, alpha: f64) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_sidedness(mut self, sidedness: Sidedness) -> Self {
        self.sidedness = sidedness;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_demean(mut self, demean: bool) -> Self {
        self.demean = demean;
        self
    }

    pub fn with_cluster_robust(mut self, on: bool) -> Self {
        self.cluster_robust = on;
        self
    }

    pub fn at(&self, b: T) -> Self {
        Self { b, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.b.is_finite() {
            return Err(Error::InvalidSpec("null value b must be finite".into()));
        }
        if self.draws == 0 {
            return Err(Error::InvalidSpec("number of draws L must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!("alpha must lie in (0, 1), got {}", self.alpha)));
        }
        self.scheme.validate()
    }
}

/// Outcome of a randomization test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RITestResult<T> {
    pub b: T,
    pub statistic: Statistic,
    pub scheme: String,
    pub sidedness: Sidedness,
    pub alpha: f64,
    /// `L` for sampled tests, the group size for exact enumeration.
    pub draws: usize,
    pub exact: bool,
    pub t_obs: T,
    pub t_sims: Vec<T>,
    pub p_value: f64,
    pub reject: bool,
    pub n_degenerate_redraws: usize,
}
