//! Sampled randomization tests.

use rayon::prelude::*;

use crate::design::ShiftShareDesign;
use crate::error::{Error, Result};
use crate::rng::{domain, stream};
use crate::scalar::Scalar;

use super::kernel::{is_degenerate, NullStatistic};
use super::rules::{p_value, reject_by_order_statistic};
use super::scheme::{DrawContext, Drawer};
use super::{RITestResult, TestSpec};

/// A single draw index gives up after this many degenerate redraws in a row.
pub const MAX_CONSECUTIVE_REDRAWS: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedStatistics<T> {
    pub t_obs: T,
    pub t_sims: Vec<T>,
    pub n_degenerate_redraws: usize,
}

/// Observed statistic and `L` simulated null statistics.
///
/// Draw `l` uses its own generator stream keyed by `(seed, l)`, so results
/// do not depend on the number of worker threads. A degenerate draw is
/// replaced by the next value of the same stream.
pub fn simulate_statistics<T: Scalar>(design: &ShiftShareDesign<T>, spec: &TestSpec<T>) -> Result<SimulatedStatistics<T>> {
    spec.validate()?;
    let kernel = NullStatistic::new(design, spec.b, spec.statistic, spec.demean, spec.cluster_robust)?;
    let t_obs = kernel.eval(design.shocks())?;
    let ctx = DrawContext {
        exposures: design.exposures(),
        e_b: kernel.residuals(),
        shocks: design.shocks(),
        cluster_ids: design.cluster_ids(),
    };
    let drawer = Drawer::new(&spec.scheme, ctx)?;
    let limit = 9 * spec.draws;

    let draws: Vec<(T, usize)> = (0..spec.draws)
        .into_par_iter()
        .map(|l| {
            let mut rng = stream(spec.seed, domain::SHOCK_DRAWS, l as u64);
            let mut discarded = 0;
            loop {
                let g = drawer.draw(&mut rng)?;
                match kernel.eval(&g) {
                    Ok(t) => return Ok((t, discarded)),
                    Err(e) if is_degenerate(&e) => {
                        discarded += 1;
                        if discarded >= MAX_CONSECUTIVE_REDRAWS.min(limit.max(1)) {
                            return Err(Error::RedrawsExhausted { discarded, limit });
                        }
                    }
                    Err(e) => return Err(e),
                }
            }
        })
        .collect::<Result<_>>()?;

    let n_degenerate_redraws = draws.iter().map(|d| d.1).sum();
    if n_degenerate_redraws > limit {
        return Err(Error::RedrawsExhausted {
            discarded: n_degenerate_redraws,
            limit,
        });
    }
    Ok(SimulatedStatistics {
        t_obs,
        t_sims: draws.into_iter().map(|d| d.0).collect(),
        n_degenerate_redraws,
    })
}

/// Randomization test of `H0: beta = b` with `L` simulated draws.
pub fn ri_test<T: Scalar>(design: &ShiftShareDesign<T>, spec: &TestSpec<T>) -> Result<RITestResult<T>> {
    let sim = simulate_statistics(design, spec)?;
    Ok(RITestResult {
        b: spec.b,
        statistic: spec.statistic,
        scheme: spec.scheme.label(),
        sidedness: spec.sidedness,
        alpha: spec.alpha,
        draws: spec.draws,
        exact: false,
        p_value: p_value(sim.t_obs, &sim.t_sims, spec.sidedness),
        reject: reject_by_order_statistic(sim.t_obs, &sim.t_sims, spec.alpha, spec.sidedness),
        t_obs: sim.t_obs,
        t_sims: sim.t_sims,
        n_degenerate_redraws: sim.n_degenerate_redraws,
    })
}
