//! Finite-sample magnitudes of the quantities that govern the asymptotic
//! validity of randomization tests with misspecified shock distributions.
//!
//! The theory is stated in terms of a composite residual that cannot be
//! observed piece by piece; everything here uses the null residual `e_b`,
//! which equals that composite under the null model.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::design::{null_residuals, Exposures, ShiftShareDesign};
use crate::error::{Error, Result};
use crate::randomization::{closed_form_moments, simulate_statistics, DrawContext, SimulationScheme, Statistic, TestSpec};
use crate::rng::{domain, stream};
use crate::scalar::{self, Accumulator, Scalar};

/// Heuristic warning levels. They are rules of thumb, not theory.
pub const COND3_WARN: f64 = 0.1;
pub const HHI_WARN: f64 = 0.15;

const BLOCK: usize = 1024;

/// `v_J = sum_j (sum_i s_ij)^2`.
pub fn compute_vj<T: Scalar>(exposures: &Exposures<T>) -> T {
    scalar::sum(exposures.column_sums().into_iter().map(|c| c * c))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcentrationReport {
    pub v_j: f64,
    /// `(sum_i s_ij)^2 / v_J`, one entry per sector.
    pub importance: Vec<f64>,
    pub hhi: f64,
}

pub fn concentration_report<T: Scalar>(exposures: &Exposures<T>) -> ConcentrationReport {
    let cols: Vec<f64> = exposures.column_sums().iter().map(|c| c.as_f64()).collect();
    let v_j = compute_vj(exposures).as_f64();
    let importance: Vec<f64> = cols.iter().map(|c| c * c / v_j).collect();
    let hhi = scalar::sum(importance.iter().map(|w| w * w));
    ConcentrationReport { v_j, importance, hhi }
}

/// Weights `omega_j = (S' e_b)_j / sqrt(v_J)`.
fn omega<T: Scalar>(design: &ShiftShareDesign<T>, b: T) -> Vec<f64> {
    let e_b = null_residuals(design, b).e_b;
    let root = compute_vj(design.exposures()).as_f64().sqrt();
    design.exposures().tmul_vec(&e_b).iter().map(|u| u.as_f64() / root).collect()
}

/// Monte Carlo estimates of `E[g*_j^k]` for `k = 1, 2, 4` with standard
/// errors.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentEstimates {
    pub mean: [Vec<f64>; 3],
    pub se: [Vec<f64>; 3],
}

/// Block-wise sums of `g, g^2, g^4, g^8` per coordinate; the fixed block
/// layout keeps the result independent of the thread count.
fn power_sums<T: Scalar>(
    design: &ShiftShareDesign<T>,
    b: T,
    scheme: &SimulationScheme<T>,
    n_draws: usize,
    seed: u64,
) -> Result<[Vec<f64>; 4]> {
    let e_b = null_residuals(design, b).e_b;
    let ctx = DrawContext {
        exposures: design.exposures(),
        e_b: &e_b,
        shocks: design.shocks(),
        cluster_ids: design.cluster_ids(),
    };
    let drawer = crate::randomization::Drawer::new(scheme, ctx)?;
    let j = design.n_sectors();
    let blocks: Vec<[Vec<Accumulator<f64>>; 4]> = (0..n_draws.div_ceil(BLOCK))
        .into_par_iter()
        .map(|blk| {
            let mut acc: [Vec<Accumulator<f64>>; 4] = std::array::from_fn(|_| vec![Accumulator::new(); j]);
            for l in blk * BLOCK..((blk + 1) * BLOCK).min(n_draws) {
                let mut rng = stream(seed, domain::MOMENTS, l as u64);
                let g = drawer.draw(&mut rng)?;
                for (k, v) in g.iter().enumerate() {
                    let v = v.as_f64();
                    let (v2, v4) = (v * v, v.powi(4));
                    acc[0][k].add(v);
                    acc[1][k].add(v2);
                    acc[2][k].add(v4);
                    acc[3][k].add(v4 * v4);
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut out: [Vec<Accumulator<f64>>; 4] = std::array::from_fn(|_| vec![Accumulator::new(); j]);
    for blk in &blocks {
        for (o, b) in out.iter_mut().zip(blk) {
            for (x, y) in o.iter_mut().zip(b) {
                x.add(y.value());
            }
        }
    }
    Ok(out.map(|v| v.iter().map(|a| a.value()).collect()))
}

pub fn monte_carlo_moments<T: Scalar>(
    design: &ShiftShareDesign<T>,
    b: T,
    scheme: &SimulationScheme<T>,
    n_draws: usize,
    seed: u64,
) -> Result<MomentEstimates> {
    if n_draws < 2 {
        return Err(Error::InvalidSpec("moment estimation needs at least 2 draws".into()));
    }
    let [s1, s2, s4, s8] = power_sums(design, b, scheme, n_draws, seed)?;
    let n = n_draws as f64;
    let mean = |s: &[f64]| s.iter().map(|v| v / n).collect::<Vec<_>>();
    let se = |lo: &[f64], hi: &[f64]| {
        lo.iter()
            .zip(hi)
            .map(|(a, b)| ((b / n - (a / n).powi(2)).max(0.0) / (n - 1.0)).sqrt())
            .collect::<Vec<_>>()
    };
    Ok(MomentEstimates {
        se: [se(&s1, &s2), se(&s2, &s4), se(&s4, &s8)],
        mean: [mean(&s1), mean(&s2), mean(&s4)],
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop2Conditions {
    /// `sum_j omega_j E[g*_j]`; should be near 0.
    pub cond1: f64,
    /// `sum_j omega_j^2 E[g*_j^2]`; estimates the limiting variance.
    pub cond2: f64,
    /// `sum_j omega_j^4 E[g*_j^4]`; should be near 0.
    pub cond3: f64,
    /// Whether the moments came from closed forms or simulation.
    pub closed_form: bool,
}

/// Conditions for asymptotic normality of the simulated T1 statistic.
/// Moments are exact where the scheme allows it and simulated with
/// `n_draws` draws otherwise.
pub fn prop2_conditions<T: Scalar>(
    design: &ShiftShareDesign<T>,
    b: T,
    scheme: &SimulationScheme<T>,
    n_draws: usize,
    seed: u64,
) -> Result<Prop2Conditions> {
    let w = omega(design, b);
    let (moments, closed_form) = match closed_form_moments(scheme, design.shocks()) {
        Some(m) => (m, true),
        None => {
            let mc = monte_carlo_moments(design, b, scheme, n_draws, seed)?;
            let m = (0..w.len()).map(|k| [mc.mean[0][k], mc.mean[1][k], mc.mean[2][k]]).collect();
            (m, false)
        }
    };
    let term = |f: &dyn Fn(f64, &[f64; 3]) -> f64| scalar::sum(w.iter().zip(&moments).map(|(&o, m)| f(o, m)));
    Ok(Prop2Conditions {
        cond1: term(&|o, m| o * m[0]),
        cond2: term(&|o, m| o * o * m[1]),
        cond3: term(&|o, m| o.powi(4) * m[2]),
        closed_form,
    })
}

/// Per-draw strong-shock quantities at simulated shocks `g_star`, given
/// residuals `r`: `(1/N) sum Z*^2`, the cross term relative to
/// `N / sqrt(v_J)` and the quadratic term relative to `N^2 / v_J`.
pub fn prop3_terms<T: Scalar>(exposures: &Exposures<T>, r: &[T], g_star: &[T]) -> [f64; 3] {
    let n = exposures.n_units() as f64;
    let v_j = compute_vj(exposures).as_f64();
    let z = exposures.mul_vec(g_star);
    let u = exposures.tmul_vec(r);
    let w = exposures.tmul_vec(&z);
    let strength = scalar::sum(z.iter().map(|z| z.as_f64().powi(2))) / n;
    let g2: Vec<f64> = g_star.iter().map(|g| g.as_f64().powi(2)).collect();
    let cross = scalar::sum((0..g2.len()).map(|k| 2.0 * u[k].as_f64() * w[k].as_f64() * g2[k])) / v_j;
    let quad = scalar::sum((0..g2.len()).map(|k| w[k].as_f64().powi(2) * g2[k])) / v_j;
    [strength, cross / (n / v_j.sqrt()), quad / (n * n / v_j)]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Prop3Conditions {
    /// Mean of `(1/N) sum_i (s_i' g*)^2`.
    pub strength: f64,
    /// Mean absolute cross term, rate-normalized.
    pub cross: f64,
    /// Mean quadratic term, rate-normalized.
    pub quad: f64,
}

/// Conditions for asymptotic normality of the simulated T2 statistic,
/// averaged over `n_draws` simulated shock vectors.
pub fn prop3_conditions<T: Scalar>(
    design: &ShiftShareDesign<T>,
    b: T,
    scheme: &SimulationScheme<T>,
    n_draws: usize,
    seed: u64,
) -> Result<Prop3Conditions> {
    if n_draws == 0 {
        return Err(Error::InvalidSpec("need at least one draw".into()));
    }
    let e_b = null_residuals(design, b).e_b;
    let ctx = DrawContext {
        exposures: design.exposures(),
        e_b: &e_b,
        shocks: design.shocks(),
        cluster_ids: design.cluster_ids(),
    };
    let drawer = crate::randomization::Drawer::new(scheme, ctx)?;
    let terms: Vec<[f64; 3]> = (0..n_draws)
        .into_par_iter()
        .map(|l| {
            let mut rng = stream(seed, domain::MOMENTS, l as u64);
            let g = drawer.draw(&mut rng)?;
            Ok(prop3_terms(design.exposures(), &e_b, &g))
        })
        .collect::<Result<_>>()?;
    let n = n_draws as f64;
    Ok(Prop3Conditions {
        strength: scalar::sum(terms.iter().map(|t| t[0])) / n,
        cross: scalar::sum(terms.iter().map(|t| t[1].abs())) / n,
        quad: scalar::sum(terms.iter().map(|t| t[2])) / n,
    })
}

/// Kolmogorov distance between the empirical CDF of `sample` and the
/// standard normal CDF, evaluated exactly at the jump points.
pub fn ks_distance(sample: &[f64]) -> f64 {
    if sample.is_empty() {
        return 1.0;
    }
    let phi = Normal::standard();
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = phi.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Distance to normality of the simulated statistic under `spec`, which
/// must use a studentized statistic.
pub fn normality_distance<T: Scalar>(design: &ShiftShareDesign<T>, spec: &TestSpec<T>) -> Result<f64> {
    if spec.statistic == Statistic::T0 {
        return Err(Error::InvalidSpec("normality distance needs a studentized statistic (t1 or t2)".into()));
    }
    let sims = simulate_statistics(design, spec)?;
    Ok(ks_distance(&sims.t_sims.iter().map(|t| t.as_f64()).collect::<Vec<_>>()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsymptoticReport {
    pub v_j: f64,
    pub cond1: f64,
    pub cond2: f64,
    pub cond3: f64,
    pub p3_strength: f64,
    pub p3_cross: f64,
    pub p3_quad: f64,
    pub hhi: f64,
    pub ks_distance: f64,
    pub importance: Vec<f64>,
    pub moments_closed_form: bool,
    pub warnings: Vec<String>,
}

/// All diagnostics for one design and null value. T0 specs are evaluated
/// with T1 for the normality distance.
pub fn diagnose<T: Scalar>(design: &ShiftShareDesign<T>, spec: &TestSpec<T>, n_draws: usize) -> Result<AsymptoticReport> {
    let conc = concentration_report(design.exposures());
    let p2 = prop2_conditions(design, spec.b, &spec.scheme, n_draws, spec.seed)?;
    let p3 = prop3_conditions(design, spec.b, &spec.scheme, n_draws, spec.seed)?;
    let ks_spec = match spec.statistic {
        Statistic::T0 => TestSpec {
            statistic: Statistic::T1,
            ..spec.clone()
        },
        _ => spec.clone(),
    };
    let ks = normality_distance(design, &ks_spec)?;

    let mut warnings = Vec::new();
    if p2.cond3 > COND3_WARN {
        warnings.push(format!("fourth-moment condition is large ({:.3} > {COND3_WARN})", p2.cond3));
    }
    if conc.hhi > HHI_WARN {
        warnings.push(format!("sector importance is concentrated (hhi {:.3} > {HHI_WARN})", conc.hhi));
    }
    if !(p3.strength > 0.0) {
        warnings.push("simulated instrument has zero strength".to_string());
    }
    Ok(AsymptoticReport {
        v_j: conc.v_j,
        cond1: p2.cond1,
        cond2: p2.cond2,
        cond3: p2.cond3,
        p3_strength: p3.strength,
        p3_cross: p3.cross,
        p3_quad: p3.quad,
        hhi: conc.hhi,
        ks_distance: ks,
        importance: conc.importance,
        moments_closed_form: p2.closed_form,
        warnings,
    })
}
