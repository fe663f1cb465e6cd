//! Synthetic shift-share data generating processes.

use rand::Rng;
use rand_distr::{Distribution, Gamma, LogNormal, StandardNormal};
use serde::Serialize;

use crate::design::{Exposures, ReducedFormMode, ShiftShareDesign};
use crate::error::{Error, Result};
use crate::randomization::ShockSampler;
use crate::rng::{domain, stream, SimRng};
use crate::scalar;

/// Share of the dominant sector in the `Concentrated` design.
pub const DOMINANT_SHARE: f64 = 0.9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExposureDesign {
    /// `N = J`, unit `i` has unit exposure to sector `i` only.
    SingleExposure,
    /// Rows drawn from a symmetric Dirichlet with the given concentration.
    DirichletRows { concentration: f64 },
    /// Unit `i` puts `DOMINANT_SHARE` on sector `i mod k` and spreads the
    /// rest evenly over the other sectors.
    Concentrated { k_dominant: usize },
}

/// Shock distributions; all have mean zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShockLaw {
    Normal { sd: f64 },
    Uniform { a: f64 },
    Rademacher { scale: f64 },
    /// Unit variance, correlation `rho` within consecutive blocks of `block`
    /// sectors: `g = sqrt(rho) f_c + sqrt(1 - rho) z`.
    Clustered { block: usize, rho: f64 },
}

impl ShockLaw {
    pub fn variance(&self) -> f64 {
        match *self {
            Self::Normal { sd } => sd * sd,
            Self::Uniform { a } => a * a / 3.0,
            Self::Rademacher { scale } => scale * scale,
            Self::Clustered { .. } => 1.0,
        }
    }

    pub fn draw(&self, j: usize, rng: &mut SimRng) -> Vec<f64> {
        match *self {
            Self::Normal { sd } => (0..j).map(|_| sd * rng.sample::<f64, _>(StandardNormal)).collect(),
            Self::Uniform { a } => (0..j).map(|_| rng.random_range(-a..=a)).collect(),
            Self::Rademacher { scale } => (0..j).map(|_| if rng.random() { scale } else { -scale }).collect(),
            Self::Clustered { block, rho } => {
                let f: Vec<f64> = (0..j / block).map(|_| rng.sample(StandardNormal)).collect();
                (0..j)
                    .map(|k| rho.sqrt() * f[k / block] + (1.0 - rho).sqrt() * rng.sample::<f64, _>(StandardNormal))
                    .collect()
            }
        }
    }

    fn validate(&self, j: usize) -> Result<()> {
        let ok = match *self {
            Self::Normal { sd } => sd > 0.0 && sd.is_finite(),
            Self::Uniform { a } => a > 0.0 && a.is_finite(),
            Self::Rademacher { scale } => scale > 0.0 && scale.is_finite(),
            Self::Clustered { block, rho } => {
                if block == 0 || !j.is_multiple_of(block) {
                    return Err(Error::InvalidDesign(format!("cluster block size {block} does not divide J = {j}")));
                }
                (0.0..1.0).contains(&rho)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDesign(format!("invalid shock law parameters: {self:?}")))
        }
    }
}

/// The data generating shock law used as a correctly specified scheme.
impl ShockSampler<f64> for ShockLaw {
    fn name(&self) -> String {
        match self {
            Self::Normal { sd } => format!("normal({sd})"),
            Self::Uniform { a } => format!("uniform({a})"),
            Self::Rademacher { scale } => format!("rademacher({scale})"),
            Self::Clustered { block, rho } => format!("clustered({block},{rho})"),
        }
    }

    fn draw(&self, exposures: &Exposures<f64>, _: &[f64], rng: &mut SimRng) -> Vec<f64> {
        ShockLaw::draw(self, exposures.n_sectors(), rng)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaHeterogeneity {
    None,
    IidAround { sd: f64 },
    /// `beta_i = beta + strength * w_i` with `w_i` the standardized
    /// exposure-weighted sector index `sum_j s_ij (j + 1) / J`.
    CorrelatedWithExposure { strength: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Loading {
    Constant { value: f64 },
    LogNormal { sigma: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ErrorModel {
    Iid { sd: f64 },
    /// `eps_i = lambda_i (s_i' f) + noise_sd * nu_i` with sector factors
    /// `f ~ N(0, I)` drawn each replication and fixed unit loadings.
    SectorFactor { loading: Loading, noise_sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FirstStage {
    ReducedForm,
    /// `X = pi Z + noise_sd (eps + zeta)`, endogenous through `eps`.
    Iv { pi: f64, noise_sd: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BetaTarget {
    /// Weights `E[X_i Z_i]` from the model.
    #[default]
    Analytic,
    /// Weights `X_i Z_i` from the realized sample.
    SampleMoment,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DgpSpec {
    pub n_units: usize,
    pub n_sectors: usize,
    pub exposure: ExposureDesign,
    pub shocks: ShockLaw,
    pub beta: f64,
    pub heterogeneity: BetaHeterogeneity,
    pub errors: ErrorModel,
    pub first_stage: FirstStage,
    pub beta_target: BetaTarget,
}

impl DgpSpec {
    /// `N = J` single-exposure design with standard normal shocks, iid
    /// errors and the reduced form.
    pub fn single_exposure(j: usize) -> Self {
        Self {
            n_units: j,
            n_sectors: j,
            exposure: ExposureDesign::SingleExposure,
            shocks: ShockLaw::Normal { sd: 1.0 },
            beta: 1.0,
            heterogeneity: BetaHeterogeneity::None,
            errors: ErrorModel::Iid { sd: 1.0 },
            first_stage: FirstStage::ReducedForm,
            beta_target: BetaTarget::Analytic,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (n, j) = (self.n_units, self.n_sectors);
        if n < 2 || j < 2 {
            return Err(Error::InvalidDesign(format!("need N >= 2 and J >= 2, got N = {n}, J = {j}")));
        }
        match self.exposure {
            ExposureDesign::SingleExposure if n != j => {
                return Err(Error::InvalidDesign(format!("single exposure needs N = J, got N = {n}, J = {j}")));
            }
            ExposureDesign::DirichletRows { concentration } if !(concentration > 0.0 && concentration.is_finite()) => {
                return Err(Error::InvalidDesign("Dirichlet concentration must be positive".into()));
            }
            ExposureDesign::Concentrated { k_dominant } if k_dominant == 0 || k_dominant > j => {
                return Err(Error::InvalidDesign(format!("k_dominant must lie in 1..={j}, got {k_dominant}")));
            }
            _ => {}
        }
        self.shocks.validate(j)?;
        if !self.beta.is_finite() {
            return Err(Error::InvalidDesign("beta must be finite".into()));
        }
        let nonneg = |v: f64| v >= 0.0 && v.is_finite();
        let ok = match self.heterogeneity {
            BetaHeterogeneity::None => true,
            BetaHeterogeneity::IidAround { sd } => nonneg(sd),
            BetaHeterogeneity::CorrelatedWithExposure { strength } => strength.is_finite(),
        } && match self.errors {
            ErrorModel::Iid { sd } => nonneg(sd),
            ErrorModel::SectorFactor { loading, noise_sd } => {
                nonneg(noise_sd)
                    && match loading {
                        Loading::Constant { value } => value.is_finite(),
                        Loading::LogNormal { sigma } => nonneg(sigma),
                    }
            }
        } && match self.first_stage {
            FirstStage::ReducedForm => true,
            FirstStage::Iv { pi, noise_sd } => pi.is_finite() && pi != 0.0 && nonneg(noise_sd),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidDesign("invalid heterogeneity, error or first-stage parameters".into()))
        }
    }

    fn cluster_labels(&self) -> Option<Vec<i64>> {
        match self.shocks {
            ShockLaw::Clustered { block, .. } => Some((0..self.n_sectors).map(|k| (k / block) as i64).collect()),
            _ => None,
        }
    }
}

/// Parts of a DGP held fixed across replications of one experiment.
#[derive(Debug, Clone)]
pub struct FixedDesign {
    spec: DgpSpec,
    exposures: Exposures<f64>,
    beta_i: Vec<f64>,
    loadings: Vec<f64>,
    /// `E[X_i Z_i]`.
    xz_weights: Vec<f64>,
    beta_j: f64,
}

fn build_exposures(spec: &DgpSpec, rng: &mut SimRng) -> Result<Exposures<f64>> {
    let (n, j) = (spec.n_units, spec.n_sectors);
    match spec.exposure {
        ExposureDesign::SingleExposure => Ok(Exposures::identity(n)),
        ExposureDesign::DirichletRows { concentration } => {
            let gamma = Gamma::new(concentration, 1.0).map_err(|e| Error::InvalidDesign(e.to_string()))?;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let raw: Vec<f64> = (0..j).map(|_| gamma.sample(rng)).collect();
                    let total: f64 = raw.iter().sum();
                    if total > 0.0 {
                        raw.iter().map(|v| v / total).collect()
                    } else {
                        vec![1.0 / j as f64; j]
                    }
                })
                .collect();
            Exposures::from_dense(&rows)
        }
        ExposureDesign::Concentrated { k_dominant } => {
            let rest = (1.0 - DOMINANT_SHARE) / (j - 1) as f64;
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|i| (0..j).map(|k| if k == i % k_dominant { DOMINANT_SHARE } else { rest }).collect())
                .collect();
            Exposures::from_dense(&rows)
        }
    }
}

/// `E[Z_i^2] = s_i' Cov(g) s_i`.
fn instrument_second_moments(spec: &DgpSpec, s: &Exposures<f64>) -> Vec<f64> {
    (0..s.n_units())
        .map(|i| match spec.shocks {
            ShockLaw::Clustered { block, rho } => {
                let own = scalar::sum(s.row(i).map(|(_, v)| v * v));
                let mut blocks = vec![0.0; spec.n_sectors / block];
                for (k, v) in s.row(i) {
                    blocks[k / block] += v;
                }
                (1.0 - rho) * own + rho * scalar::sum(blocks.iter().map(|b| b * b))
            }
            law => law.variance() * scalar::sum(s.row(i).map(|(_, v)| v * v)),
        })
        .collect()
}

fn weighted_beta(beta: &[f64], w: &[f64]) -> Result<f64> {
    let den = scalar::sum(w.iter().copied());
    if den == 0.0 || !den.is_finite() {
        return Err(Error::InvalidDesign("first-stage weights sum to zero".into()));
    }
    Ok(scalar::dot(beta, w) / den)
}

impl FixedDesign {
    /// Draws the exposures, unit effects and loadings from `seed`.
    pub fn new(spec: &DgpSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut rng = stream(seed, domain::DESIGN, 0);
        let exposures = build_exposures(spec, &mut rng)?;
        let n = spec.n_units;
        let beta_i: Vec<f64> = match spec.heterogeneity {
            BetaHeterogeneity::None => vec![spec.beta; n],
            BetaHeterogeneity::IidAround { sd } => {
                (0..n).map(|_| spec.beta + sd * rng.sample::<f64, _>(StandardNormal)).collect()
            }
            BetaHeterogeneity::CorrelatedWithExposure { strength } => {
                let j = spec.n_sectors as f64;
                let w: Vec<f64> = (0..n).map(|i| scalar::sum(exposures.row(i).map(|(k, v)| v * (k + 1) as f64 / j))).collect();
                let mean = scalar::mean(&w);
                let sd = (scalar::sum(w.iter().map(|v| (v - mean).powi(2))) / n as f64).sqrt();
                w.iter()
                    .map(|v| spec.beta + if sd > 0.0 { strength * (v - mean) / sd } else { 0.0 })
                    .collect()
            }
        };
        let loadings = match spec.errors {
            ErrorModel::SectorFactor { loading: Loading::Constant { value }, .. } => vec![value; n],
            ErrorModel::SectorFactor { loading: Loading::LogNormal { sigma }, .. } => {
                let ln = LogNormal::new(0.0, sigma).map_err(|e| Error::InvalidDesign(e.to_string()))?;
                (0..n).map(|_| ln.sample(&mut rng)).collect()
            }
            ErrorModel::Iid { .. } => Vec::new(),
        };
        let ez2 = instrument_second_moments(spec, &exposures);
        let xz_weights = match spec.first_stage {
            FirstStage::ReducedForm => ez2,
            FirstStage::Iv { pi, .. } => ez2.iter().map(|v| pi * v).collect(),
        };
        let beta_j = match spec.heterogeneity {
            BetaHeterogeneity::None => spec.beta,
            _ => weighted_beta(&beta_i, &xz_weights)?,
        };
        Ok(Self {
            spec: spec.clone(),
            exposures,
            beta_i,
            loadings,
            xz_weights,
            beta_j,
        })
    }

    pub fn spec(&self) -> &DgpSpec {
        &self.spec
    }

    pub fn exposures(&self) -> &Exposures<f64> {
        &self.exposures
    }

    pub fn beta_i(&self) -> &[f64] {
        &self.beta_i
    }

    /// Model-implied `E[X_i Z_i]`.
    pub fn xz_weights(&self) -> &[f64] {
        &self.xz_weights
    }

    /// One replication: fresh shocks, factors and noise from `seed`.
    pub fn draw(&self, seed: u64) -> Result<GeneratedData> {
        let spec = &self.spec;
        let (n, j) = (spec.n_units, spec.n_sectors);
        let mut rng = stream(seed, domain::DATA, 0);
        let g = spec.shocks.draw(j, &mut rng);
        let mut normal = |k: usize| -> Vec<f64> { (0..k).map(|_| rng.sample(StandardNormal)).collect() };
        let epsilon: Vec<f64> = match spec.errors {
            ErrorModel::Iid { sd } => normal(n).into_iter().map(|v| sd * v).collect(),
            ErrorModel::SectorFactor { noise_sd, .. } => {
                let f = normal(j);
                let loaded = self.exposures.mul_vec(&f);
                let noise = normal(n);
                (0..n).map(|i| self.loadings[i] * loaded[i] + noise_sd * noise[i]).collect()
            }
        };
        let z = self.exposures.mul_vec(&g);
        let x = match spec.first_stage {
            FirstStage::ReducedForm => None,
            FirstStage::Iv { pi, noise_sd } => {
                let zeta = normal(n);
                Some((0..n).map(|i| pi * z[i] + noise_sd * (epsilon[i] + zeta[i])).collect::<Vec<_>>())
            }
        };
        let xs = x.as_deref().unwrap_or(&z);
        let y: Vec<f64> = (0..n).map(|i| self.beta_i[i] * xs[i] + epsilon[i]).collect();
        let beta_j = match (spec.beta_target, spec.heterogeneity) {
            (_, BetaHeterogeneity::None) | (BetaTarget::Analytic, _) => self.beta_j,
            (BetaTarget::SampleMoment, _) => {
                let w: Vec<f64> = xs.iter().zip(&z).map(|(x, z)| x * z).collect();
                weighted_beta(&self.beta_i, &w)?
            }
        };
        let mode = match spec.first_stage {
            FirstStage::ReducedForm => ReducedFormMode::Force(true),
            FirstStage::Iv { .. } => ReducedFormMode::Force(false),
        };
        let mut design = ShiftShareDesign::new(y, x, self.exposures.clone(), g, mode)?;
        if let Some(labels) = spec.cluster_labels() {
            design = design.with_clusters(&labels)?;
        }
        Ok(GeneratedData {
            design,
            beta_i: self.beta_i.clone(),
            beta_j,
            epsilon,
        })
    }
}

/// A generated sample with its ground truth.
#[derive(Debug, Clone)]
pub struct GeneratedData {
    pub design: ShiftShareDesign<f64>,
    pub beta_i: Vec<f64>,
    pub beta_j: f64,
    pub epsilon: Vec<f64>,
}

/// Fixed parts and one replication, both from `seed`.
pub fn generate_dataset(spec: &DgpSpec, seed: u64) -> Result<GeneratedData> {
    FixedDesign::new(spec, seed)?.draw(seed)
}
