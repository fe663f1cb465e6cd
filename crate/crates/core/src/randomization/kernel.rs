//! Null-form statistics `T(g*, S, e_b)` evaluated repeatedly for many shock
//! vectors. `u = S' e_b` is computed once, so T0 and T1 cost O(J) per draw
//! and T2 costs O(nnz(S)).

use crate::design::{demean_shocks, null_residuals, ShiftShareDesign};
use crate::error::{Error, Result};
use crate::estimator::{cluster_terms, nondegenerate_cross, STUDENTIZER_FLOOR};
use crate::scalar::{self, Scalar};

use super::Statistic;

pub(crate) struct NullStatistic<'a, T> {
    design: &'a ShiftShareDesign<T>,
    e_b: Vec<T>,
    u: Vec<T>,
    statistic: Statistic,
    demean: bool,
    clusters: Option<(&'a [usize], usize)>,
}

impl<'a, T: Scalar> NullStatistic<'a, T> {
    pub(crate) fn new(
        design: &'a ShiftShareDesign<T>,
        b: T,
        statistic: Statistic,
        demean: bool,
        cluster_robust: bool,
    ) -> Result<Self> {
        if statistic == Statistic::T2 && !design.reduced_form() {
            return Err(Error::NotReducedForm);
        }
        let clusters = if cluster_robust {
            let ids = design.cluster_ids().ok_or(Error::MissingClusters)?;
            Some((ids, design.n_clusters().unwrap_or(0)))
        } else {
            None
        };
        let e_b = null_residuals(design, b).e_b;
        let u = design.exposures().tmul_vec(&e_b);
        Ok(Self {
            design,
            e_b,
            u,
            statistic,
            demean,
            clusters,
        })
    }

    pub(crate) fn residuals(&self) -> &[T] {
        &self.e_b
    }

    fn squared_studentizer(&self, sector_sums: &[T], g: &[T]) -> T {
        match self.clusters {
            Some((ids, n)) => scalar::sum(cluster_terms(sector_sums, g, ids, n)),
            None => scalar::sum(sector_sums.iter().zip(g).map(|(&u, &g)| (u * g) * (u * g))),
        }
    }

    /// Statistic at shock vector `g` (observed or simulated).
    pub(crate) fn eval(&self, g: &[T]) -> Result<T> {
        let demeaned;
        let gg = if self.demean {
            demeaned = demean_shocks(g);
            &demeaned[..]
        } else {
            g
        };
        match self.statistic {
            Statistic::T0 => Ok(scalar::dot(gg, &self.u) / T::of(self.e_b.len() as f64)),
            Statistic::T1 => {
                let num = scalar::dot(gg, &self.u);
                let den = self.squared_studentizer(&self.u, gg).sqrt();
                if !(den > T::of(STUDENTIZER_FLOOR)) {
                    return Err(Error::ZeroVariance);
                }
                Ok(num / den)
            }
            Statistic::T2 => {
                // Y* = b X* + e_b with X* = S g; instrument S g~ (g~ = g unless demeaning).
                let s = self.design.exposures();
                let x_star = s.mul_vec(g);
                let z_star = if self.demean { s.mul_vec(gg) } else { x_star.clone() };
                let zx = nondegenerate_cross(&z_star, &x_star)?;
                let diff = scalar::dot(gg, &self.u) / zx;
                let w = s.tmul_vec(&x_star);
                let resid_sums: Vec<T> = self.u.iter().zip(&w).map(|(&u, &w)| u - diff * w).collect();
                let den = self.squared_studentizer(&resid_sums, gg).sqrt();
                if !(den > T::of(STUDENTIZER_FLOOR)) {
                    return Err(Error::ZeroVariance);
                }
                Ok(diff / (den / zx.abs()))
            }
        }
    }
}

pub(crate) fn is_degenerate(e: &Error) -> bool {
    matches!(e, Error::ZeroVariance | Error::DegenerateInstrument)
}
