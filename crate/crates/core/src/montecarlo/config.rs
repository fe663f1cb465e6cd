//! Plain-text experiment configuration.
//!
//! One `key = value` pair per line; `#` starts a comment. Parameters of a
//! value are separated by colons, lists by commas:
//!
//! ```text
//! n_sectors = 10
//! exposure  = single                # dirichlet:<c> | concentrated:<k>
//! shocks    = normal:1              # uniform:<a> | rademacher:<s> | clustered:<block>:<rho>
//! errors    = factor:lognormal:1:0.5
//! methods   = ri-t1:known, ri-t1:sign-change, akm-normal
//! reps      = 500
//! ```

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::randomization::Sidedness;

use super::dgp::{BetaHeterogeneity, BetaTarget, DgpSpec, ErrorModel, ExposureDesign, FirstStage, Loading, ShockLaw};
use super::experiment::{power_curve, size_experiment, ExperimentResult, Method, RiSettings};

pub const KEYS: &[&str] = &[
    "n_units",
    "n_sectors",
    "exposure",
    "shocks",
    "beta",
    "heterogeneity",
    "errors",
    "first_stage",
    "beta_target",
    "methods",
    "reps",
    "seed",
    "alpha",
    "draws",
    "sidedness",
    "demean",
    "cluster_robust",
    "b_grid",
];

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dgp: DgpSpec,
    pub methods: Vec<Method>,
    pub settings: RiSettings,
    pub reps: usize,
    pub seed: u64,
    /// Null values for a power curve; `None` runs a size experiment.
    pub b_grid: Option<Vec<f64>>,
}

fn bad(key: &str, message: impl Into<String>) -> Error {
    Error::Config {
        key: key.to_string(),
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(key: &str, text: &str) -> Result<T> {
    text.trim()
        .parse()
        .map_err(|_| bad(key, format!("cannot parse `{}`", text.trim())))
}

fn parts(value: &str) -> Vec<&str> {
    value.split(':').map(str::trim).collect()
}

fn arity(key: &str, p: &[&str], allowed: &[usize]) -> Result<()> {
    if allowed.contains(&p.len()) {
        Ok(())
    } else {
        Err(bad(key, format!("wrong number of parameters in `{}`", p.join(":"))))
    }
}

fn opt_num(key: &str, p: &[&str], idx: usize, default: f64) -> Result<f64> {
    p.get(idx).map_or(Ok(default), |t| num(key, t))
}

fn parse_exposure(key: &str, v: &str) -> Result<ExposureDesign> {
    let p = parts(v);
    match p[0] {
        "single" => arity(key, &p, &[1]).map(|_| ExposureDesign::SingleExposure),
        "dirichlet" => {
            arity(key, &p, &[2])?;
            Ok(ExposureDesign::DirichletRows {
                concentration: num(key, p[1])?,
            })
        }
        "concentrated" => {
            arity(key, &p, &[2])?;
            Ok(ExposureDesign::Concentrated {
                k_dominant: num(key, p[1])?,
            })
        }
        other => Err(bad(key, format!("unknown exposure design `{other}`"))),
    }
}

fn parse_shocks(key: &str, v: &str) -> Result<ShockLaw> {
    let p = parts(v);
    match p[0] {
        "normal" => {
            arity(key, &p, &[1, 2])?;
            Ok(ShockLaw::Normal {
                sd: opt_num(key, &p, 1, 1.0)?,
            })
        }
        "uniform" => {
            arity(key, &p, &[1, 2])?;
            Ok(ShockLaw::Uniform {
                a: opt_num(key, &p, 1, 1.0)?,
            })
        }
        "rademacher" => {
            arity(key, &p, &[1, 2])?;
            Ok(ShockLaw::Rademacher {
                scale: opt_num(key, &p, 1, 1.0)?,
            })
        }
        "clustered" => {
            arity(key, &p, &[3])?;
            Ok(ShockLaw::Clustered {
                block: num(key, p[1])?,
                rho: num(key, p[2])?,
            })
        }
        other => Err(bad(key, format!("unknown shock law `{other}`"))),
    }
}

fn parse_heterogeneity(key: &str, v: &str) -> Result<BetaHeterogeneity> {
    let p = parts(v);
    match p[0] {
        "none" => arity(key, &p, &[1]).map(|_| BetaHeterogeneity::None),
        "iid" => {
            arity(key, &p, &[2])?;
            Ok(BetaHeterogeneity::IidAround { sd: num(key, p[1])? })
        }
        "correlated" => {
            arity(key, &p, &[2])?;
            Ok(BetaHeterogeneity::CorrelatedWithExposure {
                strength: num(key, p[1])?,
            })
        }
        other => Err(bad(key, format!("unknown heterogeneity `{other}`"))),
    }
}

fn parse_errors(key: &str, v: &str) -> Result<ErrorModel> {
    let p = parts(v);
    match p[0] {
        "iid" => {
            arity(key, &p, &[1, 2])?;
            Ok(ErrorModel::Iid {
                sd: opt_num(key, &p, 1, 1.0)?,
            })
        }
        "factor" => {
            arity(key, &p, &[4])?;
            let loading = match p[1] {
                "constant" => Loading::Constant { value: num(key, p[2])? },
                "lognormal" => Loading::LogNormal { sigma: num(key, p[2])? },
                other => return Err(bad(key, format!("unknown loading law `{other}`"))),
            };
            Ok(ErrorModel::SectorFactor {
                loading,
                noise_sd: num(key, p[3])?,
            })
        }
        other => Err(bad(key, format!("unknown error model `{other}`"))),
    }
}

fn parse_first_stage(key: &str, v: &str) -> Result<FirstStage> {
    let p = parts(v);
    match p[0] {
        "reduced" => arity(key, &p, &[1]).map(|_| FirstStage::ReducedForm),
        "iv" => {
            arity(key, &p, &[3])?;
            Ok(FirstStage::Iv {
                pi: num(key, p[1])?,
                noise_sd: num(key, p[2])?,
            })
        }
        other => Err(bad(key, format!("unknown first stage `{other}`"))),
    }
}

pub fn parse_sidedness(text: &str) -> Option<Sidedness> {
    match text.trim() {
        "two-sided" | "two-sided-abs" | "abs" => Some(Sidedness::TwoSidedAbs),
        "right" | "right-tail" => Some(Sidedness::RightTail),
        "left" | "left-tail" => Some(Sidedness::LeftTail),
        "equal" | "equal-tail" => Some(Sidedness::EqualTail),
        _ => None,
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, format!("expected true or false, got `{v}`"))),
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut n_units = None;
        let mut n_sectors = None;
        let mut dgp = DgpSpec::single_exposure(2);
        let mut methods = None;
        let mut settings = RiSettings::default();
        let mut reps = 1000;
        let mut seed = 0;
        let mut b_grid = None;

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                key: line.to_string(),
                message: format!("line {} is not of the form key = value", lineno + 1),
            })?;
            let key = key.trim();
            let value = value.trim().to_ascii_lowercase();
            if !KEYS.contains(&key) {
                return Err(bad(key, "unknown key"));
            }
            if !seen.insert(key.to_string()) {
                return Err(bad(key, "given more than once"));
            }
            let v = value.as_str();
            match key {
                "n_units" => n_units = Some(num(key, v)?),
                "n_sectors" => n_sectors = Some(num(key, v)?),
                "exposure" => dgp.exposure = parse_exposure(key, v)?,
                "shocks" => dgp.shocks = parse_shocks(key, v)?,
                "beta" => dgp.beta = num(key, v)?,
                "heterogeneity" => dgp.heterogeneity = parse_heterogeneity(key, v)?,
                "errors" => dgp.errors = parse_errors(key, v)?,
                "first_stage" => dgp.first_stage = parse_first_stage(key, v)?,
                "beta_target" => {
                    dgp.beta_target = match v {
                        "analytic" => BetaTarget::Analytic,
                        "sample" => BetaTarget::SampleMoment,
                        _ => return Err(bad(key, format!("expected analytic or sample, got `{v}`"))),
                    }
                }
                "methods" => {
                    let list = v
                        .split(',')
                        .map(|m| m.parse::<Method>().map_err(|e| bad(key, e.to_string())))
                        .collect::<Result<Vec<_>>>()?;
                    methods = Some(list);
                }
                "reps" => reps = num(key, v)?,
                "seed" => seed = num(key, v)?,
                "alpha" => settings.alpha = num(key, v)?,
                "draws" => settings.draws = num(key, v)?,
                "sidedness" => {
                    settings.sidedness = parse_sidedness(v).ok_or_else(|| bad(key, format!("unknown sidedness `{v}`")))?
                }
                "demean" => settings.demean = parse_bool(key, v)?,
                "cluster_robust" => settings.cluster_robust = parse_bool(key, v)?,
                "b_grid" => b_grid = Some(v.split(',').map(|b| num(key, b)).collect::<Result<Vec<f64>>>()?),
                _ => unreachable!("key list checked above"),
            }
        }
        dgp.n_sectors = n_sectors.ok_or_else(|| bad("n_sectors", "required"))?;
        dgp.n_units = match (n_units, dgp.exposure) {
            (Some(n), _) => n,
            (None, ExposureDesign::SingleExposure) => dgp.n_sectors,
            (None, _) => return Err(bad("n_units", "required unless exposure = single")),
        };
        dgp.validate()?;
        Ok(Self {
            dgp,
            methods: methods.ok_or_else(|| bad("methods", "required"))?,
            settings,
            reps,
            seed,
            b_grid,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn run(&self) -> Result<Vec<ExperimentResult>> {
        match &self.b_grid {
            Some(grid) => power_curve(&self.dgp, grid, &self.methods, &self.settings, self.reps, self.seed),
            None => size_experiment(&self.dgp, &self.methods, &self.settings, self.reps, self.seed),
        }
    }
}
