//! Sign-change tests with an unknown symmetry point.

use serde::Serialize;

use crate::design::ShiftShareDesign;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{exact_enumeration_test, ri_test, SimulationScheme, TestSpec};

/// Confidence set `[lower, upper]` for the symmetry point `m`, held with
/// probability `confidence = 1 - gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SymmetryInterval<T> {
    pub lower: T,
    pub upper: T,
    pub confidence: f64,
}

impl<T: Scalar> SymmetryInterval<T> {
    pub fn point(m: T) -> Self {
        Self {
            lower: m,
            upper: m,
            confidence: 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.lower.is_finite() && self.upper.is_finite()) || self.lower > self.upper {
            return Err(Error::InvalidInterval(format!("[{}, {}]", self.lower, self.upper)));
        }
        if !(self.confidence > 0.0 && self.confidence <= 1.0) {
            return Err(Error::InvalidInterval(format!("confidence level {} outside (0, 1]", self.confidence)));
        }
        Ok(())
    }

    /// `n` equally spaced points; a single point for a degenerate interval.
    pub fn grid(&self, n: usize) -> Vec<T> {
        if self.lower == self.upper {
            return vec![self.lower];
        }
        let step = (self.upper - self.lower) / T::of((n - 1) as f64);
        (0..n)
            .map(|k| if k + 1 == n { self.upper } else { self.lower + step * T::of(k as f64) })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BergerBoosResult<T> {
    /// `min(1, sup_p + gamma)`.
    pub p_value: f64,
    pub sup_p: f64,
    pub gamma: f64,
    /// `(m, p(m))` at each grid point.
    pub grid: Vec<(T, f64)>,
}

/// Supremum of sign-change p-values over the symmetry-point set plus
/// `gamma`. All grid points share the spec's seed, so the same sign vectors
/// are used throughout.
pub fn berger_boos_test<T: Scalar>(
    design: &ShiftShareDesign<T>,
    spec: &TestSpec<T>,
    set: SymmetryInterval<T>,
    grid_size: usize,
    exact: bool,
) -> Result<BergerBoosResult<T>> {
    set.validate()?;
    if grid_size < 2 {
        return Err(Error::InvalidInterval(format!("grid size must be at least 2, got {grid_size}")));
    }
    let clustered = match spec.scheme {
        SimulationScheme::SignChange { .. } => false,
        SimulationScheme::ClusterSignChange { .. } => true,
        _ => return Err(Error::InvalidSpec("the Berger-Boos correction needs a sign-change scheme".into())),
    };
    let grid = set
        .grid(grid_size)
        .into_iter()
        .map(|m| {
            let scheme = if clustered {
                SimulationScheme::ClusterSignChange { m }
            } else {
                SimulationScheme::SignChange { m }
            };
            let at_m = TestSpec { scheme, ..spec.clone() };
            let r = if exact {
                exact_enumeration_test(design, &at_m)?
            } else {
                ri_test(design, &at_m)?
            };
            Ok((m, r.p_value))
        })
        .collect::<Result<Vec<_>>>()?;
    let sup_p = grid.iter().map(|g| g.1).fold(0.0, f64::max);
    let gamma = 1.0 - set.confidence;
    Ok(BergerBoosResult {
        p_value: (sup_p + gamma).min(1.0),
        sup_p,
        gamma,
        grid,
    })
}
