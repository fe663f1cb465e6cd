//! Shift-share point estimate, shock-robust variances and the three test
//! statistics.
//!
//! `stat_t1` uses the residual form `sum_i Z_i e_i / sqrt(sum_j u_j^2 g_j^2)`
//! with `u = S' e_b`. It equals the ratio form `(beta_hat - b) / se` when
//! `sum_i Z_i X_i > 0` (always the case in the reduced form) and differs from
//! it by a sign otherwise; only the residual form is a function of
//! `(g, S, e_b)` alone, so it is the one the randomization engine uses.

use serde::Serialize;

use crate::design::{null_residuals, Exposures, ShiftShareDesign};
use crate::error::{Error, Result};
use crate::scalar::{self, Scalar};

/// Studentizers at or below this are treated as zero.
pub const STUDENTIZER_FLOOR: f64 = 1e-300;

/// Relative size below which a cross moment counts as zero.
pub const DEGENERACY_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateResult<T> {
    pub beta_hat: T,
    /// `sum_i Z_i X_i`.
    pub denom: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum VarianceKind {
    NullImposed,
    PlugIn,
    ClusteredNullImposed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VarianceResult<T> {
    pub value: T,
    pub kind: VarianceKind,
    /// Summands of the numerator, one per sector (or cluster).
    pub per_sector_terms: Vec<T>,
}

/// `sum_i a_i b_i`, rejected as degenerate when it is zero relative to
/// `sum_i |a_i b_i|`.
pub(crate) fn nondegenerate_cross<T: Scalar>(a: &[T], b: &[T]) -> Result<T> {
    let s = scalar::dot(a, b);
    let scale = scalar::sum(a.iter().zip(b).map(|(&x, &y)| (x * y).abs()));
    if scale == T::zero() || s.abs() <= T::of(DEGENERACY_TOL) * scale {
        return Err(Error::DegenerateInstrument);
    }
    Ok(s)
}

pub fn shift_share_estimate<T: Scalar>(design: &ShiftShareDesign<T>) -> Result<EstimateResult<T>> {
    let z = design.instrument();
    let denom = nondegenerate_cross(z, design.x())?;
    Ok(EstimateResult {
        beta_hat: scalar::dot(z, design.y()) / denom,
        denom,
    })
}

fn squared_terms<T: Scalar>(u: &[T], g: &[T]) -> Vec<T> {
    u.iter().zip(g).map(|(&u, &g)| (u * g) * (u * g)).collect()
}

/// Null-imposed shock-robust variance `V_{N,b}`.
pub fn variance_null_imposed<T: Scalar>(design: &ShiftShareDesign<T>, b: T) -> Result<VarianceResult<T>> {
    let denom = nondegenerate_cross(design.instrument(), design.x())?;
    let e = null_residuals(design, b).e_b;
    let u = design.exposures().tmul_vec(&e);
    let terms = squared_terms(&u, design.shocks());
    Ok(VarianceResult {
        value: scalar::sum(terms.iter().copied()) / (denom * denom),
        kind: VarianceKind::NullImposed,
        per_sector_terms: terms,
    })
}

/// Plug-in variance `V_F` with residuals at `beta_hat`; reduced form only.
pub fn variance_plugin<T: Scalar>(design: &ShiftShareDesign<T>) -> Result<VarianceResult<T>> {
    if !design.reduced_form() {
        return Err(Error::NotReducedForm);
    }
    let est = shift_share_estimate(design)?;
    let xx = nondegenerate_cross(design.x(), design.x())?;
    let r = null_residuals(design, est.beta_hat).e_b;
    let u = design.exposures().tmul_vec(&r);
    let terms = squared_terms(&u, design.shocks());
    Ok(VarianceResult {
        value: scalar::sum(terms.iter().copied()) / (xx * xx),
        kind: VarianceKind::PlugIn,
        per_sector_terms: terms,
    })
}

/// Per-cluster squared sums `(sum_{j in c} u_j g_j)^2`.
pub(crate) fn cluster_terms<T: Scalar>(u: &[T], g: &[T], ids: &[usize], n_clusters: usize) -> Vec<T> {
    let mut acc = vec![scalar::Accumulator::new(); n_clusters];
    for ((&u, &g), &c) in u.iter().zip(g).zip(ids) {
        acc[c].add(u * g);
    }
    acc.iter()
        .map(|a| {
            let v = a.value();
            v * v
        })
        .collect()
}

/// Null-imposed variance with shocks clustered by the design's cluster labels.
pub fn variance_clustered<T: Scalar>(design: &ShiftShareDesign<T>, b: T) -> Result<VarianceResult<T>> {
    let ids = design.cluster_ids().ok_or(Error::MissingClusters)?;
    let n_clusters = design.n_clusters().unwrap_or(0);
    let denom = nondegenerate_cross(design.instrument(), design.x())?;
    let e = null_residuals(design, b).e_b;
    let u = design.exposures().tmul_vec(&e);
    let terms = cluster_terms(&u, design.shocks(), ids, n_clusters);
    Ok(VarianceResult {
        value: scalar::sum(terms.iter().copied()) / (denom * denom),
        kind: VarianceKind::ClusteredNullImposed,
        per_sector_terms: terms,
    })
}

/// Conventional shock-robust variance with residuals at `beta_hat` and
/// denominator `(sum Z X)^2`; valid with or without a first stage. Sums
/// by shock cluster when `clustered` is set.
pub fn variance_conventional<T: Scalar>(design: &ShiftShareDesign<T>, clustered: bool) -> Result<VarianceResult<T>> {
    let est = shift_share_estimate(design)?;
    let r = null_residuals(design, est.beta_hat).e_b;
    let u = design.exposures().tmul_vec(&r);
    let terms = if clustered {
        let ids = design.cluster_ids().ok_or(Error::MissingClusters)?;
        cluster_terms(&u, design.shocks(), ids, design.n_clusters().unwrap_or(0))
    } else {
        squared_terms(&u, design.shocks())
    };
    Ok(VarianceResult {
        value: scalar::sum(terms.iter().copied()) / (est.denom * est.denom),
        kind: VarianceKind::PlugIn,
        per_sector_terms: terms,
    })
}

/// `(1/N) sum_i (s_i' g) e_i`. Not invariant to the scale of `g`.
pub fn stat_t0<T: Scalar>(g: &[T], exposures: &Exposures<T>, e_b: &[T]) -> Result<T> {
    if e_b.len() != exposures.n_units() {
        return Err(Error::DimensionMismatch(format!(
            "{} residuals for {} units",
            e_b.len(),
            exposures.n_units()
        )));
    }
    let z = crate::design::build_instrument(exposures, g)?;
    Ok(scalar::dot(&z, e_b) / T::of(e_b.len() as f64))
}

fn studentize<T: Scalar>(numerator: T, squared_studentizer: T) -> Result<T> {
    let den = squared_studentizer.sqrt();
    if !(den > T::of(STUDENTIZER_FLOOR)) {
        return Err(Error::ZeroVariance);
    }
    Ok(numerator / den)
}

/// Null-imposed t statistic, residual form.
pub fn stat_t1<T: Scalar>(design: &ShiftShareDesign<T>, b: T) -> Result<T> {
    let e = null_residuals(design, b).e_b;
    let u = design.exposures().tmul_vec(&e);
    let num = scalar::dot(design.instrument(), &e);
    studentize(num, scalar::sum(squared_terms(&u, design.shocks())))
}

/// Null-imposed t statistic, ratio form `(beta_hat - b) / sqrt(V_{N,b})`.
pub fn stat_t1_ratio<T: Scalar>(design: &ShiftShareDesign<T>, b: T) -> Result<T> {
    let v = variance_null_imposed(design, b)?;
    let denom = nondegenerate_cross(design.instrument(), design.x())?;
    let e = null_residuals(design, b).e_b;
    let diff = scalar::dot(design.instrument(), &e) / denom;
    let se = v.value.sqrt();
    if !(se * denom.abs() > T::of(STUDENTIZER_FLOOR)) {
        return Err(Error::ZeroVariance);
    }
    Ok(diff / se)
}

/// Plug-in t statistic `(beta_hat - b) / sqrt(V_F)`; reduced form only.
pub fn stat_t2<T: Scalar>(design: &ShiftShareDesign<T>, b: T) -> Result<T> {
    let v = variance_plugin(design)?;
    let denom = nondegenerate_cross(design.instrument(), design.x())?;
    let xx = scalar::dot(design.x(), design.x());
    let e = null_residuals(design, b).e_b;
    let diff = scalar::dot(design.instrument(), &e) / denom;
    let num_sq = scalar::sum(v.per_sector_terms.iter().copied());
    if !(num_sq.sqrt() > T::of(STUDENTIZER_FLOOR)) {
        return Err(Error::ZeroVariance);
    }
    Ok(diff / (num_sq.sqrt() / xx))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::ReducedFormMode;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn design(rows: &[&[f64]], g: &[f64], y: &[f64], x: Option<&[f64]>) -> ShiftShareDesign<f64> {
        let s = Exposures::from_dense(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap();
        ShiftShareDesign::new(y.to_vec(), x.map(<[f64]>::to_vec), s, g.to_vec(), ReducedFormMode::Auto).unwrap()
    }

    /// Direct evaluation of the displayed variance formulas with nested loops.
    fn oracle_variance(d: &ShiftShareDesign<f64>, resid_coef: f64, denom: f64) -> f64 {
        let s = d.exposures().to_dense();
        let mut num = 0.0;
        for j in 0..d.n_sectors() {
            let mut inner = 0.0;
            for i in 0..d.n_units() {
                inner += (d.y()[i] - resid_coef * d.x()[i]) * s[i][j];
            }
            num += inner * inner * d.shocks()[j] * d.shocks()[j];
        }
        num / (denom * denom)
    }

    fn random_design(rng: &mut impl Rng, n: usize, j: usize, reduced: bool) -> ShiftShareDesign<f64> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..j).map(|_| if rng.random_bool(0.6) { rng.random_range(0.01..1.0) } else { 0.0 }).collect())
            .map(|mut r: Vec<f64>| {
                if r.iter().all(|&v| v == 0.0) {
                    r[0] = 0.5;
                }
                r
            })
            .collect();
        let s = Exposures::from_dense(&rows).unwrap();
        let g: Vec<f64> = (0..j).map(|_| rng.random_range(-2.0..2.0)).collect();
        let z = s.mul_vec(&g);
        let x = if reduced {
            None
        } else {
            Some(z.iter().map(|z| 0.8 * z + rng.random_range(-0.3..0.3)).collect())
        };
        let xv = x.clone().unwrap_or_else(|| z.clone());
        let y = xv.iter().map(|x| 1.5 * x + rng.random_range(-1.0..1.0)).collect();
        ShiftShareDesign::new(y, x, s, g, ReducedFormMode::Auto).unwrap()
    }

    #[test]
    fn estimate_hand_case() {
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0], &[2.0, 4.0], Some(&[1.0, 1.0]));
        let est = shift_share_estimate(&d).unwrap();
        assert_eq!(est.denom, 2.0);
        assert_eq!(est.beta_hat, 3.0);
    }

    #[test]
    fn estimate_exact_fit() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let base = random_design(&mut rng, 12, 5, false);
        let y: Vec<f64> = base.x().iter().map(|x| -0.75 * x).collect();
        let d = ShiftShareDesign::new(y, Some(base.x().to_vec()), base.exposures().clone(), base.shocks().to_vec(), ReducedFormMode::Auto)
            .unwrap();
        assert!((shift_share_estimate(&d).unwrap().beta_hat + 0.75).abs() < 1e-12);
    }

    #[test]
    fn zero_shocks_are_degenerate() {
        let d = design(&[&[1.0, 0.5], &[0.0, 1.0]], &[0.0, 0.0], &[2.0, 4.0], Some(&[1.0, 1.0]));
        assert!(matches!(shift_share_estimate(&d), Err(Error::DegenerateInstrument)));
        assert!(matches!(variance_null_imposed(&d, 0.0), Err(Error::DegenerateInstrument)));
    }

    #[test]
    fn null_imposed_variance_hand_case() {
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[2.0, 0.0], &[3.0, 0.0], Some(&[1.0, 1.0]));
        let v = variance_null_imposed(&d, 1.0).unwrap();
        assert_eq!(v.per_sector_terms, vec![16.0, 0.0]);
        assert_eq!(v.value, 4.0);
        assert_eq!(v.kind, VarianceKind::NullImposed);
    }

    #[test]
    fn null_imposed_variance_zero_residuals() {
        let d = design(&[&[1.0, 0.3], &[0.2, 1.0]], &[2.0, -1.0], &[1.5, -0.5], Some(&[1.5, -0.5]));
        assert_eq!(variance_null_imposed(&d, 1.0).unwrap().value, 0.0);
    }

    #[test]
    fn null_imposed_variance_under_doubled_shocks() {
        // Reduced form: Z and X both double, so the numerator gains 2^2 and
        // the squared denominator gains 2^4. Both sides are re-evaluated
        // with the nested-loop oracle rather than assumed.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let d = random_design(&mut rng, 7, 4, true);
        let d2 = d.with_shocks(d.shocks().iter().map(|g| 2.0 * g).collect()).unwrap();
        let b = 0.4;
        let den = |d: &ShiftShareDesign<f64>| d.instrument().iter().zip(d.x()).map(|(z, x)| z * x).sum::<f64>();
        let v1 = variance_null_imposed(&d, b).unwrap().value;
        let v2 = variance_null_imposed(&d2, b).unwrap().value;
        let o1 = oracle_variance(&d, b, den(&d));
        let o2 = oracle_variance(&d2, b, den(&d2));
        assert!((v1 - o1).abs() <= 1e-12 * o1);
        assert!((v2 - o2).abs() <= 1e-12 * o2);
    }

    #[test]
    fn plugin_variance_cases() {
        // Y = beta X exactly.
        let s = [&[1.0, 0.0][..], &[0.5, 0.5]];
        let g = [2.0, -1.0];
        let z = [2.0, 0.5];
        let d = design(&s, &g, &[3.0 * z[0], 3.0 * z[1]], None);
        assert!(variance_plugin(&d).unwrap().value.abs() < 1e-28);

        // Single active sector: S = I, g = (2, 0), Z = X = (2, 0), Y = (3, 5).
        // beta_hat = 6 / 4 = 1.5, residuals (0, 5), terms (0 * 4, 25 * 0).
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[2.0, 0.0], &[3.0, 5.0], None);
        assert_eq!(variance_plugin(&d).unwrap().value, 0.0);

        // Both sectors active: g = (2, 1), Z = (2, 1), sum ZY = 11, sum Z^2 = 5,
        // beta_hat = 2.2, residuals (-1.4, 2.8), terms (1.96 * 4, 7.84 * 1),
        // V_F = 15.68 / 25 = 0.6272.
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[2.0, 1.0], &[3.0, 5.0], None);
        let v = variance_plugin(&d).unwrap();
        assert!((v.value - 0.6272).abs() < 1e-14);
        assert_eq!(v.kind, VarianceKind::PlugIn);
        let o = oracle_variance(&d, 2.2, 5.0);
        assert!((v.value - o).abs() < 1e-14);
    }

    #[test]
    fn plugin_requires_reduced_form() {
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[2.0, 1.0], &[3.0, 5.0], Some(&[1.0, 1.0]));
        assert!(matches!(variance_plugin(&d), Err(Error::NotReducedForm)));
        assert!(matches!(stat_t2(&d, 0.0), Err(Error::NotReducedForm)));
    }

    #[test]
    fn plugin_and_null_imposed_identity() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let d = random_design(&mut rng, 9, 4, true);
            let est = shift_share_estimate(&d).unwrap();
            let xx: f64 = d.x().iter().map(|x| x * x).sum();
            let lhs = variance_null_imposed(&d, est.beta_hat).unwrap().value * est.denom * est.denom;
            let rhs = variance_plugin(&d).unwrap().value * xx * xx;
            assert!((lhs - rhs).abs() <= 1e-10 * rhs.abs().max(1e-300));
        }
    }

    #[test]
    fn clustered_variance_cases() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let d = random_design(&mut rng, 8, 4, false);
        assert!(matches!(variance_clustered(&d, 0.3), Err(Error::MissingClusters)));

        let singletons = d.clone().with_clusters(&[0, 1, 2, 3]).unwrap();
        let a = variance_clustered(&singletons, 0.3).unwrap();
        let b = variance_null_imposed(&d, 0.3).unwrap();
        assert!((a.value - b.value).abs() <= 1e-12 * b.value);

        let one = d.clone().with_clusters(&[5, 5, 5, 5]).unwrap();
        let e = null_residuals(&d, 0.3).e_b;
        let u = d.exposures().tmul_vec(&e);
        let total: f64 = u.iter().zip(d.shocks()).map(|(u, g)| u * g).sum();
        let c = variance_clustered(&one, 0.3).unwrap();
        assert_eq!(c.per_sector_terms.len(), 1);
        assert!((c.per_sector_terms[0] - total * total).abs() <= 1e-12 * total * total);

        // Two clusters of two sectors, brute-force double loop.
        let two = d.clone().with_clusters(&[1, 2, 1, 2]).unwrap();
        let s = d.exposures().to_dense();
        let mut num = 0.0;
        for members in [[0usize, 2], [1, 3]] {
            let mut inner = 0.0;
            for &j in &members {
                for i in 0..d.n_units() {
                    inner += e[i] * s[i][j] * d.shocks()[j];
                }
            }
            num += inner * inner;
        }
        let den: f64 = d.instrument().iter().zip(d.x()).map(|(z, x)| z * x).sum();
        let v = variance_clustered(&two, 0.3).unwrap();
        assert!((v.value - num / (den * den)).abs() <= 1e-12 * v.value);
    }

    #[test]
    fn t0_cases() {
        let s = Exposures::<f64>::identity(2);
        assert_eq!(stat_t0(&[1.0, 1.0], &s, &[2.0, 4.0]).unwrap(), 3.0);
        assert_eq!(stat_t0(&[1.0, -7.0], &s, &[0.0, 0.0]).unwrap(), 0.0);
        assert_eq!(stat_t0(&[2.0, 2.0], &s, &[2.0, 4.0]).unwrap(), 6.0);
    }

    #[test]
    fn t1_hand_case() {
        // S = I, g = (1, 1), X = Z = (1, 1), Y = (3 + b, 4 + b) so e_b = (3, 4).
        let b = 0.5;
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0], &[3.5, 4.5], None);
        assert!((stat_t1(&d, b).unwrap() - 1.4).abs() < 1e-15);
        assert!((stat_t1_ratio(&d, b).unwrap() - 1.4).abs() < 1e-15);
    }

    #[test]
    fn t1_orthogonal_residuals() {
        // e_b = (1, -1) with Z = (1, 1): numerator zero, studentizer nonzero.
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0], &[1.0, -1.0], Some(&[0.0, 0.0]));
        assert_eq!(stat_t1(&d, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn t1_zero_variance() {
        let d = design(&[&[1.0, 0.0], &[0.0, 1.0]], &[1.0, 1.0], &[1.0, 1.0], None);
        assert!(matches!(stat_t1(&d, 1.0), Err(Error::ZeroVariance)));
    }

    #[test]
    fn t2_vanishes_at_point_estimate() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        let d = random_design(&mut rng, 10, 3, true);
        let est = shift_share_estimate(&d).unwrap();
        assert!(stat_t2(&d, est.beta_hat).unwrap().abs() < 1e-12);
    }

    #[test]
    fn conventional_variance_is_plugin_in_reduced_form() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(21);
        for _ in 0..10 {
            let d = random_design(&mut rng, 12, 4, true);
            let a = variance_conventional(&d, false).unwrap().value;
            let b = variance_plugin(&d).unwrap().value;
            assert!((a - b).abs() <= 1e-12 * b);
        }
        let d = random_design(&mut rng, 12, 4, false);
        assert!(variance_conventional(&d, false).unwrap().value > 0.0);
        assert!(matches!(variance_conventional(&d, true), Err(Error::MissingClusters)));
    }

    #[test]
    fn t2_hand_case() {
        // S = [[1,0],[0.5,0.5],[0,1]], g = (2, -1), X = Z = (2, 0.5, -1),
        // Y = (1, 2, -3): sum ZY = 6, sum Z^2 = 5.25.
        let d = design(&[&[1.0, 0.0], &[0.5, 0.5], &[0.0, 1.0]], &[2.0, -1.0], &[1.0, 2.0, -3.0], None);
        let beta: f64 = 6.0 / 5.25;
        let r = [1.0 - beta * 2.0, 2.0 - beta * 0.5, -3.0 + beta];
        let u = [r[0] + 0.5 * r[1], 0.5 * r[1] + r[2]];
        let vf = (u[0] * u[0] * 4.0 + u[1] * u[1] * 1.0) / (5.25f64 * 5.25);
        let b = 0.2;
        let expected = (beta - b) / vf.sqrt();
        assert!((stat_t2(&d, b).unwrap() - expected).abs() <= 1e-12 * expected.abs());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]
        #[test]
        fn studentized_statistics_are_scale_invariant(seed in any::<u64>(), c in 1e-3f64..1e3, b in -2.0f64..2.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = random_design(&mut rng, 8, 4, true);
            let dc = d.with_shocks_under_null(d.shocks().iter().map(|g| c * g).collect(), b).unwrap();
            let t1 = stat_t1(&d, b).unwrap();
            let t1c = stat_t1(&dc, b).unwrap();
            prop_assert!((t1 - t1c).abs() <= 1e-10 * t1.abs().max(1.0));
            let t2 = stat_t2(&d, b).unwrap();
            let t2c = stat_t2(&dc, b).unwrap();
            prop_assert!((t2 - t2c).abs() <= 1e-10 * t2.abs().max(1.0));
        }

        #[test]
        fn t1_forms_agree(seed in any::<u64>(), b in -3.0f64..3.0) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let reduced = rng.random_bool(0.5);
            let d = random_design(&mut rng, 10, 5, reduced);
            let est = shift_share_estimate(&d).unwrap();
            let resid = stat_t1(&d, b).unwrap();
            let ratio = stat_t1_ratio(&d, b).unwrap();
            let signed = if est.denom > 0.0 { resid } else { -resid };
            prop_assert!((signed - ratio).abs() <= 1e-10 * ratio.abs().max(1e-8));
        }

        #[test]
        fn t0_scales_linearly(seed in any::<u64>(), c in 1e-3f64..1e3) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = random_design(&mut rng, 6, 3, true);
            let e = null_residuals(&d, 0.7).e_b;
            let g = d.shocks();
            let gc: Vec<f64> = g.iter().map(|x| c * x).collect();
            let t = stat_t0(g, d.exposures(), &e).unwrap();
            let tc = stat_t0(&gc, d.exposures(), &e).unwrap();
            prop_assert!((tc - c * t).abs() <= 1e-12 * (c * t).abs().max(1e-300));
        }

        #[test]
        fn statistics_are_deterministic(seed in any::<u64>()) {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = random_design(&mut rng, 6, 3, true);
            prop_assert_eq!(stat_t1(&d, 0.1).unwrap().to_bits(), stat_t1(&d.clone(), 0.1).unwrap().to_bits());
            prop_assert_eq!(stat_t2(&d, 0.1).unwrap().to_bits(), stat_t2(&d.clone(), 0.1).unwrap().to_bits());
        }
    }
}
