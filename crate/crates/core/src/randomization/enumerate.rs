//! Exact randomization tests over the full transformation group.

use rayon::prelude::*;

use crate::design::ShiftShareDesign;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

use super::kernel::{is_degenerate, NullStatistic};
use super::scheme::sign_change;
use super::{RITestResult, Sidedness, SimulationScheme, TestSpec};

/// Largest group that will be enumerated.
pub const ENUMERATION_LIMIT: u128 = 1 << 20;

/// Cardinality of the transformation group of a scheme, or `None` for
/// schemes without one.
pub fn group_size<T: Scalar>(scheme: &SimulationScheme<T>, n_sectors: usize, n_clusters: Option<usize>) -> Option<u128> {
    let pow2 = |k: usize| if k >= 128 { u128::MAX } else { 1u128 << k };
    match scheme {
        SimulationScheme::SignChange { .. } => Some(pow2(n_sectors)),
        SimulationScheme::ClusterSignChange { .. } => n_clusters.map(pow2),
        SimulationScheme::Permutation => Some((1..=n_sectors as u128).fold(1u128, |acc, k| acc.saturating_mul(k))),
        _ => None,
    }
}

/// Permutation with lexicographic rank `k` (factorial number system).
fn unrank_permutation(mut k: u64, n: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..n).collect();
    let mut fact: Vec<u64> = vec![1; n.max(1)];
    for i in 1..n {
        fact[i] = fact[i - 1] * i as u64;
    }
    let mut out = Vec::with_capacity(n);
    for i in (0..n).rev() {
        let idx = (k / fact[i]) as usize;
        k %= fact[i];
        out.push(pool.remove(idx));
    }
    out
}

fn group_element<T: Scalar>(scheme: &SimulationScheme<T>, g: &[T], clusters: Option<&[usize]>, k: u64) -> Vec<T> {
    match scheme {
        SimulationScheme::SignChange { m } => sign_change(g, *m, |j| k >> j & 1 == 1),
        SimulationScheme::ClusterSignChange { m } => {
            let ids = clusters.expect("checked by group_size");
            sign_change(g, *m, |j| k >> ids[j] & 1 == 1)
        }
        SimulationScheme::Permutation => unrank_permutation(k, g.len()).into_iter().map(|j| g[j]).collect(),
        _ => unreachable!("not a group scheme"),
    }
}

/// Exact test: the statistic is evaluated at every group element, the
/// identity included, so `p = #{psi(T(h g)) >= psi(t_obs)} / |G|` and the
/// test rejects when `p <= alpha`. Elements where the statistic is
/// degenerate are dropped from both counts and reported.
pub fn exact_enumeration_test<T: Scalar>(design: &ShiftShareDesign<T>, spec: &TestSpec<T>) -> Result<RITestResult<T>> {
    spec.validate()?;
    let size = group_size(&spec.scheme, design.n_sectors(), design.n_clusters()).ok_or_else(|| {
        if matches!(spec.scheme, SimulationScheme::ClusterSignChange { .. }) {
            Error::MissingClusters
        } else {
            Error::InvalidSpec(format!("scheme {} has no finite group to enumerate", spec.scheme.label()))
        }
    })?;
    if size > ENUMERATION_LIMIT {
        return Err(Error::GroupTooLarge {
            size,
            limit: ENUMERATION_LIMIT,
        });
    }
    let kernel = NullStatistic::new(design, spec.b, spec.statistic, spec.demean, spec.cluster_robust)?;
    let t_obs = kernel.eval(design.shocks())?;
    let g = design.shocks();
    let clusters = design.cluster_ids();

    let evaluated: Vec<Option<T>> = (0..size as u64)
        .into_par_iter()
        .map(|k| match kernel.eval(&group_element(&spec.scheme, g, clusters, k)) {
            Ok(t) => Ok(Some(t)),
            Err(e) if is_degenerate(&e) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    let t_sims: Vec<T> = evaluated.iter().flatten().copied().collect();
    let n_degenerate = evaluated.len() - t_sims.len();

    let frac = |s: Sidedness| {
        let obs = super::psi(s, t_obs);
        t_sims.iter().filter(|&&t| super::psi(s, t) >= obs).count() as f64 / t_sims.len() as f64
    };
    let (p_value, reject) = match spec.sidedness {
        Sidedness::EqualTail => {
            let m = frac(Sidedness::RightTail).min(frac(Sidedness::LeftTail));
            ((2.0 * m).min(1.0), m <= spec.alpha / 2.0)
        }
        s => {
            let p = frac(s);
            (p, p <= spec.alpha)
        }
    };
    Ok(RITestResult {
        b: spec.b,
        statistic: spec.statistic,
        scheme: spec.scheme.label(),
        sidedness: spec.sidedness,
        alpha: spec.alpha,
        draws: size as usize,
        exact: true,
        t_obs,
        t_sims,
        p_value,
        reject,
        n_degenerate_redraws: n_degenerate,
    })
}
