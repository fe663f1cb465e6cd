//! Confidence sets by inverting randomization tests over a grid of nulls.

use serde::Serialize;

use crate::design::ShiftShareDesign;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::{ri_test, TestSpec};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridPoint<T> {
    pub b: T,
    pub p_value: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfidenceSet<T> {
    pub points: Vec<GridPoint<T>>,
    pub retained: Vec<T>,
    /// `[min, max]` of the retained points.
    pub hull: Option<(T, T)>,
    /// Maximal runs of consecutive retained grid points.
    pub components: Vec<(T, T)>,
    pub empty: bool,
    pub disconnected: bool,
}

impl<T: Scalar> ConfidenceSet<T> {
    /// Builds the set from grid points sorted by `b`.
    pub fn from_points(points: Vec<GridPoint<T>>) -> Self {
        let retained: Vec<T> = points.iter().filter(|p| !p.reject).map(|p| p.b).collect();
        let mut components = Vec::new();
        let mut run: Option<(T, T)> = None;
        for p in &points {
            run = match (run, p.reject) {
                (None, false) => Some((p.b, p.b)),
                (Some((lo, _)), false) => Some((lo, p.b)),
                (Some(r), true) => {
                    components.push(r);
                    None
                }
                (None, true) => None,
            };
        }
        components.extend(run);
        Self {
            hull: retained.first().zip(retained.last()).map(|(&a, &b)| (a, b)),
            empty: retained.is_empty(),
            disconnected: components.len() > 1,
            retained,
            components,
            points,
        }
    }
}

/// Retains every `b` in the grid at which the test does not reject. The
/// template's seed is reused at each grid point.
pub fn confidence_interval<T: Scalar>(
    design: &ShiftShareDesign<T>,
    template: &TestSpec<T>,
    b_grid: &[T],
) -> Result<ConfidenceSet<T>> {
    if b_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    if b_grid.iter().any(|b| !b.is_finite()) {
        return Err(Error::InvalidSpec("b grid must be finite".into()));
    }
    if b_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidSpec("b grid must be sorted".into()));
    }
    let points = b_grid
        .iter()
        .map(|&b| {
            let r = ri_test(design, &template.at(b))?;
            Ok(GridPoint {
                b,
                p_value: r.p_value,
                reject: r.reject,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ConfidenceSet::from_points(points))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{Exposures, ReducedFormMode};
    use crate::estimator::shift_share_estimate;
    use crate::randomization::{SimulationScheme, Statistic};
    use crate::rng::stream;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn pt(b: f64, p: f64) -> GridPoint<f64> {
        GridPoint { b, p_value: p, reject: p <= 0.05 }
    }

    #[test]
    fn inversion_by_definition() {
        let set = ConfidenceSet::from_points(vec![pt(-1.0, 0.01), pt(0.0, 0.5), pt(1.0, 0.02)]);
        assert_eq!(set.retained, vec![0.0]);
        assert_eq!(set.hull, Some((0.0, 0.0)));
        assert!(!set.disconnected);
    }

    #[test]
    fn empty_and_disconnected() {
        let set = ConfidenceSet::from_points(vec![pt(0.0, 0.01), pt(1.0, 0.01)]);
        assert!(set.empty);
        assert_eq!(set.hull, None);
        let set = ConfidenceSet::from_points(vec![pt(0.0, 0.3), pt(1.0, 0.01), pt(2.0, 0.4), pt(3.0, 0.5)]);
        assert!(set.disconnected);
        assert_eq!(set.components, vec![(0.0, 0.0), (2.0, 3.0)]);
        assert_eq!(set.hull, Some((0.0, 3.0)));
    }

    fn symmetric_design(seed: u64) -> ShiftShareDesign<f64> {
        let mut rng = stream(seed, 7, 0);
        let j = 40;
        let s = Exposures::identity(j);
        let g: Vec<f64> = (0..j).map(|_| rng.sample(StandardNormal)).collect();
        let y = g.iter().map(|g| 1.0 * g + rng.sample::<f64, _>(StandardNormal)).collect();
        ShiftShareDesign::new(y, None, s, g, ReducedFormMode::Auto).unwrap()
    }

    #[test]
    fn point_estimate_is_usually_retained() {
        let mut kept = 0;
        for seed in 0..20 {
            let d = symmetric_design(seed);
            let bhat = shift_share_estimate(&d).unwrap().beta_hat;
            let spec = TestSpec::new(0.0, Statistic::T1, SimulationScheme::SignChange { m: 0.0 })
                .with_draws(199)
                .with_seed(seed);
            let set = confidence_interval(&d, &spec, &[bhat - 5.0, bhat, bhat + 5.0]).unwrap();
            kept += usize::from(set.retained.contains(&bhat));
        }
        assert!(kept >= 19);
    }

    #[test]
    fn lower_alpha_gives_larger_set() {
        let d = symmetric_design(3);
        let grid: Vec<f64> = (0..41).map(|k| 0.5 + 0.025 * k as f64).collect();
        let base = TestSpec::new(0.0, Statistic::T1, SimulationScheme::SignChange { m: 0.0 })
            .with_draws(199)
            .with_seed(1);
        let wide = confidence_interval(&d, &base.clone().with_alpha(0.01), &grid).unwrap();
        let narrow = confidence_interval(&d, &base.with_alpha(0.5), &grid).unwrap();
        for b in &narrow.retained {
            assert!(wide.retained.contains(b));
        }
    }

    #[test]
    fn grid_errors() {
        let d = symmetric_design(1);
        let spec = TestSpec::new(0.0, Statistic::T1, SimulationScheme::Permutation);
        assert!(matches!(confidence_interval(&d, &spec, &[]), Err(Error::EmptyGrid)));
        assert!(confidence_interval(&d, &spec, &[1.0, 0.0]).is_err());
    }
}
