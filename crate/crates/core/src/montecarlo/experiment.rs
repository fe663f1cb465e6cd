//! Size and power experiments.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::ShiftShareDesign;
use crate::error::{Error, Result};
use crate::estimator::{shift_share_estimate, variance_clustered, variance_conventional, variance_null_imposed};
use crate::randomization::{exact_enumeration_test, ri_test, Sidedness, SimulationScheme, Statistic, TestSpec};
use crate::rng::{derive_seed, domain};

use super::dgp::{DgpSpec, FixedDesign, ShockLaw};

/// Seed domain of the randomization draws inside each replication.
const RI_SEED: u64 = 0x13;

/// Minimum number of replications per experiment.
pub const MIN_REPS: usize = 100;

/// Share of failed replications above which a method is flagged invalid.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// A simulation scheme as named in configs; `Known` resolves to the data
/// generating shock law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeChoice {
    Known,
    Normal { sigma: f64 },
    Bootstrap,
    SignChange { m: f64 },
    ClusterSignChange { m: f64 },
    Permutation,
}

impl SchemeChoice {
    pub fn resolve(&self, law: ShockLaw) -> SimulationScheme<f64> {
        match *self {
            Self::Known => SimulationScheme::Known(Arc::new(law)),
            Self::Normal { sigma } => SimulationScheme::IidNormal { sigma },
            Self::Bootstrap => SimulationScheme::RecentredBootstrap,
            Self::SignChange { m } => SimulationScheme::SignChange { m },
            Self::ClusterSignChange { m } => SimulationScheme::ClusterSignChange { m },
            Self::Permutation => SimulationScheme::Permutation,
        }
    }
}

fn parse_param(name: &str, text: Option<&str>, default: f64) -> Result<f64> {
    match text {
        None => Ok(default),
        Some(t) => t
            .parse()
            .map_err(|_| Error::InvalidSpec(format!("bad parameter `{t}` for scheme {name}"))),
    }
}

impl FromStr for SchemeChoice {
    type Err = Error;

    /// `known`, `normal[:sigma]`, `bootstrap`, `sign-change[:m]`,
    /// `cluster-sign-change[:m]` or `permutation`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let (name, param) = match s.split_once(':') {
            Some((n, p)) => (n, Some(p)),
            None => (s.as_str(), None),
        };
        let no_param = |v: Self| match param {
            Some(p) => Err(Error::InvalidSpec(format!("scheme {name} takes no parameter, got `{p}`"))),
            None => Ok(v),
        };
        match name {
            "known" => no_param(Self::Known),
            "normal" => Ok(Self::Normal {
                sigma: parse_param(name, param, 1.0)?,
            }),
            "bootstrap" => no_param(Self::Bootstrap),
            "sign-change" => Ok(Self::SignChange {
                m: parse_param(name, param, 0.0)?,
            }),
            "cluster-sign-change" => Ok(Self::ClusterSignChange {
                m: parse_param(name, param, 0.0)?,
            }),
            "permutation" => no_param(Self::Permutation),
            other => Err(Error::InvalidSpec(format!("unknown scheme `{other}`"))),
        }
    }
}

impl fmt::Display for SchemeChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Known => write!(f, "known"),
            Self::Normal { sigma } => write!(f, "normal:{sigma}"),
            Self::Bootstrap => write!(f, "bootstrap"),
            Self::SignChange { m } => write!(f, "sign-change:{m}"),
            Self::ClusterSignChange { m } => write!(f, "cluster-sign-change:{m}"),
            Self::Permutation => write!(f, "permutation"),
        }
    }
}

/// A testing procedure compared in an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Sampled randomization test.
    Ri { statistic: Statistic, scheme: SchemeChoice },
    /// Randomization test over the full transformation group.
    Enumeration { statistic: Statistic, scheme: SchemeChoice },
    /// `|beta_hat - b| / se` against normal critical values, with the
    /// conventional variance (residuals at `beta_hat`).
    AkmNormal,
    /// As `AkmNormal` with the null-imposed variance.
    AkmNullNormal,
}

fn statistic_name(s: Statistic) -> &'static str {
    match s {
        Statistic::T0 => "T0",
        Statistic::T1 => "T1",
        Statistic::T2 => "T2",
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Ri { statistic, scheme } => write!(f, "RI-{}:{scheme}", statistic_name(*statistic)),
            Self::Enumeration { statistic, scheme } => write!(f, "enum-{}:{scheme}", statistic_name(*statistic)),
            Self::AkmNormal => write!(f, "AKM-normal"),
            Self::AkmNullNormal => write!(f, "AKM0-normal"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `ri-t1:known`, `enum-t1:sign-change`, `akm-normal`, `akm0-normal`.
    fn from_str(s: &str) -> Result<Self> {
        let lower = s.trim().to_ascii_lowercase();
        match lower.as_str() {
            "akm-normal" => return Ok(Self::AkmNormal),
            "akm0-normal" => return Ok(Self::AkmNullNormal),
            _ => {}
        }
        let (head, scheme) = lower
            .split_once(':')
            .ok_or_else(|| Error::InvalidSpec(format!("method `{s}` needs a scheme, as in ri-t1:known")))?;
        let (kind, stat) = head
            .split_once('-')
            .ok_or_else(|| Error::InvalidSpec(format!("unknown method `{s}`")))?;
        let statistic = match stat {
            "t0" => Statistic::T0,
            "t1" => Statistic::T1,
            "t2" => Statistic::T2,
            other => return Err(Error::InvalidSpec(format!("unknown statistic `{other}` in method `{s}`"))),
        };
        let scheme: SchemeChoice = scheme.parse()?;
        match kind {
            "ri" => Ok(Self::Ri { statistic, scheme }),
            "enum" => Ok(Self::Enumeration { statistic, scheme }),
            other => Err(Error::InvalidSpec(format!("unknown method family `{other}`"))),
        }
    }
}

/// Test settings shared by all methods of an experiment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiSettings {
    pub draws: usize,
    pub alpha: f64,
    pub sidedness: Sidedness,
    pub demean: bool,
    pub cluster_robust: bool,
}

impl Default for RiSettings {
    fn default() -> Self {
        Self {
            draws: 999,
            alpha: 0.05,
            sidedness: Sidedness::TwoSidedAbs,
            demean: false,
            cluster_robust: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub method: String,
    /// Null value tested; the average true `beta_J` in size experiments.
    pub b: f64,
    pub reject_rate: f64,
    pub mc_se: f64,
    /// Replications with a decision.
    pub reps: usize,
    pub failures: usize,
    /// More than `MAX_FAILURE_RATE` of replications failed.
    pub invalid: bool,
}

impl ExperimentResult {
    fn from_outcomes(method: String, b: f64, outcomes: &[Option<bool>]) -> Self {
        let reps = outcomes.iter().flatten().count();
        let failures = outcomes.len() - reps;
        let rejections = outcomes.iter().flatten().filter(|&&r| r).count();
        let rate = if reps == 0 { f64::NAN } else { rejections as f64 / reps as f64 };
        Self {
            method,
            b,
            reject_rate: rate,
            mc_se: (rate * (1.0 - rate) / reps as f64).sqrt(),
            reps,
            failures,
            invalid: failures as f64 > MAX_FAILURE_RATE * outcomes.len() as f64,
        }
    }
}

fn normal_decision(t: f64, alpha: f64, sidedness: Sidedness) -> bool {
    let phi = Normal::standard();
    match sidedness {
        Sidedness::TwoSidedAbs | Sidedness::EqualTail => t.abs() > phi.inverse_cdf(1.0 - alpha / 2.0),
        Sidedness::RightTail => t > phi.inverse_cdf(1.0 - alpha),
        Sidedness::LeftTail => t < phi.inverse_cdf(alpha),
    }
}

fn decide(
    method: &Method,
    design: &ShiftShareDesign<f64>,
    law: ShockLaw,
    b: f64,
    settings: &RiSettings,
    seed: u64,
) -> Result<bool> {
    let spec = |statistic, scheme: &SchemeChoice| TestSpec {
        b,
        statistic,
        scheme: scheme.resolve(law),
        draws: settings.draws,
        alpha: settings.alpha,
        sidedness: settings.sidedness,
        seed,
        demean: settings.demean,
        cluster_robust: settings.cluster_robust,
    };
    match method {
        Method::Ri { statistic, scheme } => Ok(ri_test(design, &spec(*statistic, scheme))?.reject),
        Method::Enumeration { statistic, scheme } => Ok(exact_enumeration_test(design, &spec(*statistic, scheme))?.reject),
        Method::AkmNormal | Method::AkmNullNormal => {
            let est = shift_share_estimate(design)?;
            let v = match (method, settings.cluster_robust) {
                (Method::AkmNormal, c) => variance_conventional(design, c)?,
                (_, true) => variance_clustered(design, b)?,
                (_, false) => variance_null_imposed(design, b)?,
            };
            if !(v.value > 0.0) {
                return Err(Error::ZeroVariance);
            }
            Ok(normal_decision((est.beta_hat - b) / v.value.sqrt(), settings.alpha, settings.sidedness))
        }
    }
}

/// Null values tested in each replication.
enum Nulls<'a> {
    Truth,
    Grid(&'a [f64]),
}

fn run(
    dgp: &DgpSpec,
    methods: &[Method],
    settings: &RiSettings,
    reps: usize,
    master_seed: u64,
    nulls: Nulls<'_>,
) -> Result<Vec<ExperimentResult>> {
    if reps < MIN_REPS {
        return Err(Error::InvalidSpec(format!("need at least {MIN_REPS} replications, got {reps}")));
    }
    if methods.is_empty() {
        return Err(Error::InvalidSpec("no methods to compare".into()));
    }
    if let Nulls::Grid(grid) = nulls {
        if grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if grid.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidSpec("b grid must be finite".into()));
        }
    }
    TestSpec::new(0.0, Statistic::T1, SimulationScheme::Permutation)
        .with_draws(settings.draws)
        .with_alpha(settings.alpha)
        .validate()?;
    let fixed = FixedDesign::new(dgp, master_seed)?;
    let n_b = match nulls {
        Nulls::Truth => 1,
        Nulls::Grid(g) => g.len(),
    };

    // outcomes[rep] = (beta_J, [b][method] decisions)
    let outcomes: Vec<(f64, Vec<Vec<Option<bool>>>)> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let data = match fixed.draw(derive_seed(master_seed, domain::REP_SEED, r as u64)) {
                Ok(d) => d,
                Err(_) => return (f64::NAN, vec![vec![None; methods.len()]; n_b]),
            };
            let ri_seed = derive_seed(master_seed, RI_SEED, r as u64);
            let bs: Vec<f64> = match nulls {
                Nulls::Truth => vec![data.beta_j],
                Nulls::Grid(g) => g.to_vec(),
            };
            let decisions = bs
                .iter()
                .map(|&b| {
                    methods
                        .iter()
                        .map(|m| decide(m, &data.design, dgp.shocks, b, settings, ri_seed).ok())
                        .collect()
                })
                .collect();
            (data.beta_j, decisions)
        })
        .collect();

    let mut results = Vec::with_capacity(n_b * methods.len());
    for k in 0..n_b {
        let b = match nulls {
            Nulls::Truth => {
                let betas: Vec<f64> = outcomes.iter().map(|o| o.0).filter(|b| b.is_finite()).collect();
                crate::scalar::mean(&betas)
            }
            Nulls::Grid(g) => g[k],
        };
        for (mi, m) in methods.iter().enumerate() {
            let col: Vec<Option<bool>> = outcomes.iter().map(|o| o.1[k][mi]).collect();
            results.push(ExperimentResult::from_outcomes(m.to_string(), b, &col));
        }
    }
    Ok(results)
}

/// Rejection rates of the true null `b = beta_J` over `reps` replications.
/// Exposures and unit effects are fixed by `master_seed`; shocks and errors
/// are redrawn in each replication. Every method sees the same data and the
/// same randomization seed within a replication.
pub fn size_experiment(
    dgp: &DgpSpec,
    methods: &[Method],
    settings: &RiSettings,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<ExperimentResult>> {
    run(dgp, methods, settings, reps, master_seed, Nulls::Truth)
}

/// Rejection rates at each null value in `b_grid`, with the same data and
/// randomization draws as `size_experiment` under the same seed.
pub fn power_curve(
    dgp: &DgpSpec,
    b_grid: &[f64],
    methods: &[Method],
    settings: &RiSettings,
    reps: usize,
    master_seed: u64,
) -> Result<Vec<ExperimentResult>> {
    run(dgp, methods, settings, reps, master_seed, Nulls::Grid(b_grid))
}

/// CSV with columns `method,b,reject_rate,mc_se,reps,failures`.
pub fn results_to_csv(results: &[ExperimentResult]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["method", "b", "reject_rate", "mc_se", "reps", "failures"])
        .expect("writing to memory");
    for r in results {
        w.write_record([
            r.method.clone(),
            r.b.to_string(),
            r.reject_rate.to_string(),
            r.mc_se.to_string(),
            r.reps.to_string(),
            r.failures.to_string(),
        ])
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}
