//! Shock simulation schemes.

use std::fmt;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::design::Exposures;
use crate::error::{Error, Result};
use crate::rng::SimRng;
use crate::scalar::{self, Scalar};

/// User-supplied shock assignment mechanism. Draws may depend on the
/// exposures and the null residuals.
pub trait ShockSampler<T>: Send + Sync {
    fn name(&self) -> String;

    fn draw(&self, exposures: &Exposures<T>, e_b: &[T], rng: &mut SimRng) -> Vec<T>;
}

/// How simulated shocks `g*` are produced from the observed shocks.
#[derive(Clone)]
pub enum SimulationScheme<T> {
    /// Draws from a fully specified distribution.
    Known(Arc<dyn ShockSampler<T>>),
    /// iid draws from the empirical distribution of `g_j - mean(g)`.
    RecentredBootstrap,
    /// iid `N(0, sigma^2)`.
    IidNormal { sigma: T },
    /// `g* = kappa * (g - m) + m` with independent uniform signs.
    SignChange { m: T },
    /// As `SignChange` but one sign per shock cluster.
    ClusterSignChange { m: T },
    /// Uniformly random permutation of `g`.
    Permutation,
}

impl<T: fmt::Debug> fmt::Debug for SimulationScheme<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Known(_) => f.write_str("Known(..)"),
            Self::RecentredBootstrap => f.write_str("RecentredBootstrap"),
            Self::IidNormal { sigma } => f.debug_struct("IidNormal").field("sigma", sigma).finish(),
            Self::SignChange { m } => f.debug_struct("SignChange").field("m", m).finish(),
            Self::ClusterSignChange { m } => f.debug_struct("ClusterSignChange").field("m", m).finish(),
            Self::Permutation => f.write_str("Permutation"),
        }
    }
}

impl<T: Scalar> SimulationScheme<T> {
    pub fn label(&self) -> String {
        match self {
            Self::Known(s) => format!("known({})", s.name()),
            Self::RecentredBootstrap => "bootstrap".into(),
            Self::IidNormal { sigma } => format!("normal({sigma})"),
            Self::SignChange { m } => format!("sign-change({m})"),
            Self::ClusterSignChange { m } => format!("cluster-sign-change({m})"),
            Self::Permutation => "permutation".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::IidNormal { sigma } if !(sigma.is_finite() && *sigma > T::zero()) => {
                Err(Error::InvalidSpec(format!("normal scheme needs sigma > 0, got {sigma}")))
            }
            Self::SignChange { m } | Self::ClusterSignChange { m } if !m.is_finite() => {
                Err(Error::InvalidSpec("symmetry point must be finite".into()))
            }
            _ => Ok(()),
        }
    }
}

impl<T: Scalar> Serialize for SimulationScheme<T> {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.label())
    }
}

/// Inputs a scheme may condition on.
#[derive(Debug, Clone, Copy)]
pub struct DrawContext<'a, T> {
    pub exposures: &'a Exposures<T>,
    pub e_b: &'a [T],
    pub shocks: &'a [T],
    pub cluster_ids: Option<&'a [usize]>,
}

/// A scheme bound to a context, with per-context precomputation done once.
pub struct Drawer<'a, T> {
    scheme: &'a SimulationScheme<T>,
    ctx: DrawContext<'a, T>,
    centred: Vec<T>,
    n_clusters: usize,
}

impl<'a, T: Scalar> Drawer<'a, T> {
    pub fn new(scheme: &'a SimulationScheme<T>, ctx: DrawContext<'a, T>) -> Result<Self> {
        scheme.validate()?;
        let centred = match scheme {
            SimulationScheme::RecentredBootstrap => crate::design::demean_shocks(ctx.shocks),
            _ => Vec::new(),
        };
        let n_clusters = match scheme {
            SimulationScheme::ClusterSignChange { .. } => {
                let ids = ctx.cluster_ids.ok_or(Error::MissingClusters)?;
                ids.iter().max().map_or(0, |m| m + 1)
            }
            _ => 0,
        };
        Ok(Self {
            scheme,
            ctx,
            centred,
            n_clusters,
        })
    }

    pub fn draw(&self, rng: &mut SimRng) -> Result<Vec<T>> {
        let g = self.ctx.shocks;
        let j = g.len();
        Ok(match self.scheme {
            SimulationScheme::Known(sampler) => {
                let out = sampler.draw(self.ctx.exposures, self.ctx.e_b, rng);
                if out.len() != j {
                    return Err(Error::Sampler(format!(
                        "{} returned {} shocks, expected {j}",
                        sampler.name(),
                        out.len()
                    )));
                }
                if let Some(k) = out.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Sampler(format!("{} returned a non-finite shock at {k}", sampler.name())));
                }
                out
            }
            SimulationScheme::RecentredBootstrap => (0..j).map(|_| self.centred[rng.random_range(0..j)]).collect(),
            SimulationScheme::IidNormal { sigma } => (0..j)
                .map(|_| T::of(rng.sample::<f64, _>(StandardNormal)) * *sigma)
                .collect(),
            SimulationScheme::SignChange { m } => {
                let flips: Vec<bool> = (0..j).map(|_| rng.random()).collect();
                sign_change(g, *m, |k| flips[k])
            }
            SimulationScheme::ClusterSignChange { m } => {
                let flips: Vec<bool> = (0..self.n_clusters).map(|_| rng.random()).collect();
                let ids = self.ctx.cluster_ids.expect("checked in Drawer::new");
                sign_change(g, *m, |k| flips[ids[k]])
            }
            SimulationScheme::Permutation => {
                let mut out = g.to_vec();
                out.shuffle(rng);
                out
            }
        })
    }
}

/// Reflects the flipped coordinates about `m`; unflipped ones are copied so
/// that the identity transformation reproduces `g` bit-for-bit.
pub(crate) fn sign_change<T: Scalar>(g: &[T], m: T, flipped: impl Fn(usize) -> bool) -> Vec<T> {
    g.iter()
        .enumerate()
        .map(|(k, &x)| if flipped(k) { m + (m - x) } else { x })
        .collect()
}

/// One draw of simulated shocks.
pub fn draw_shocks<T: Scalar>(scheme: &SimulationScheme<T>, ctx: DrawContext<'_, T>, rng: &mut SimRng) -> Result<Vec<T>> {
    Drawer::new(scheme, ctx)?.draw(rng)
}

/// Per-coordinate moments `E[g*_j], E[g*_j^2], E[g*_j^4]` where they are
/// available in closed form. `None` for user samplers.
pub(crate) fn closed_form_moments<T: Scalar>(scheme: &SimulationScheme<T>, g: &[T]) -> Option<Vec<[f64; 3]>> {
    let g: Vec<f64> = g.iter().map(|v| v.as_f64()).collect();
    let j = g.len();
    Some(match scheme {
        SimulationScheme::Known(_) => return None,
        SimulationScheme::IidNormal { sigma } => {
            let s2 = sigma.as_f64().powi(2);
            vec![[0.0, s2, 3.0 * s2 * s2]; j]
        }
        SimulationScheme::SignChange { m } | SimulationScheme::ClusterSignChange { m } => {
            let m = m.as_f64();
            g.iter()
                .map(|&x| {
                    let d = x - m;
                    [m, m * m + d * d, 0.5 * ((m + d).powi(4) + (m - d).powi(4))]
                })
                .collect()
        }
        SimulationScheme::RecentredBootstrap => {
            let c = crate::design::demean_shocks(&g);
            let m2 = scalar::mean(&c.iter().map(|v| v * v).collect::<Vec<_>>());
            let m4 = scalar::mean(&c.iter().map(|v| v.powi(4)).collect::<Vec<_>>());
            vec![[0.0, m2, m4]; j]
        }
        SimulationScheme::Permutation => {
            let m1 = scalar::mean(&g);
            let m2 = scalar::mean(&g.iter().map(|v| v * v).collect::<Vec<_>>());
            let m4 = scalar::mean(&g.iter().map(|v| v.powi(4)).collect::<Vec<_>>());
            vec![[m1, m2, m4]; j]
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn ctx<'a>(s: &'a Exposures<f64>, e: &'a [f64], g: &'a [f64], c: Option<&'a [usize]>) -> DrawContext<'a, f64> {
        DrawContext {
            exposures: s,
            e_b: e,
            shocks: g,
            cluster_ids: c,
        }
    }

    #[test]
    fn sign_change_definition() {
        assert_eq!(sign_change(&[1.0, -2.0], 0.0, |k| k == 0), vec![-1.0, -2.0]);
        let g = [0.1, 0.7, -3.3];
        assert_eq!(sign_change(&g, 0.37, |_| false), g.to_vec());
        assert_eq!(sign_change(&[1.0, 4.0], 2.0, |_| true), vec![3.0, 0.0]);
    }

    #[test]
    fn bootstrap_support_is_recentred_shocks() {
        let s = Exposures::identity(2);
        let e = [0.0, 0.0];
        let g = [1.0, 3.0];
        let scheme = SimulationScheme::RecentredBootstrap;
        let d = Drawer::new(&scheme, ctx(&s, &e, &g, None)).unwrap();
        let mut rng = stream(1, 1, 0);
        for _ in 0..200 {
            for v in d.draw(&mut rng).unwrap() {
                assert!(v == -1.0 || v == 1.0);
            }
        }
    }

    #[test]
    fn permutation_preserves_multiset() {
        let s = Exposures::identity(3);
        let e = [0.0; 3];
        let g = [5.0, 5.0, 5.0];
        let mut rng = stream(1, 1, 0);
        assert_eq!(draw_shocks(&SimulationScheme::Permutation, ctx(&s, &e, &g, None), &mut rng).unwrap(), g.to_vec());
        let g = [1.0, 2.0, 3.0];
        for _ in 0..20 {
            let mut d = draw_shocks(&SimulationScheme::Permutation, ctx(&s, &e, &g, None), &mut rng).unwrap();
            d.sort_by(f64::total_cmp);
            assert_eq!(d, g.to_vec());
        }
    }

    #[test]
    fn cluster_sign_change_flips_blocks_together() {
        let s = Exposures::identity(4);
        let e = [0.0; 4];
        let g = [1.0, 2.0, 3.0, 4.0];
        let ids = [0, 0, 1, 1];
        let scheme = SimulationScheme::ClusterSignChange { m: 0.0 };
        let d = Drawer::new(&scheme, ctx(&s, &e, &g, Some(&ids))).unwrap();
        let mut rng = stream(4, 1, 0);
        for _ in 0..50 {
            let x = d.draw(&mut rng).unwrap();
            assert_eq!(x[0].signum(), x[1].signum());
            assert_eq!(x[2].signum(), x[3].signum());
        }
        assert!(matches!(Drawer::new(&scheme, ctx(&s, &e, &g, None)), Err(Error::MissingClusters)));
    }

    struct Broken;
    impl ShockSampler<f64> for Broken {
        fn name(&self) -> String {
            "broken".into()
        }
        fn draw(&self, _: &Exposures<f64>, _: &[f64], _: &mut SimRng) -> Vec<f64> {
            vec![1.0]
        }
    }

    #[test]
    fn user_sampler_is_checked() {
        let s = Exposures::identity(2);
        let scheme = SimulationScheme::Known(Arc::new(Broken));
        let mut rng = stream(1, 1, 0);
        let e = draw_shocks(&scheme, ctx(&s, &[0.0, 0.0], &[1.0, 2.0], None), &mut rng).unwrap_err();
        assert!(matches!(e, Error::Sampler(_)));
    }

    #[test]
    fn invalid_parameters() {
        assert!(SimulationScheme::IidNormal { sigma: 0.0 }.validate().is_err());
        assert!(SimulationScheme::SignChange { m: f64::NAN }.validate().is_err());
        assert!(SimulationScheme::<f64>::Permutation.validate().is_ok());
    }

    #[test]
    fn closed_form_sign_change_moments() {
        let m = closed_form_moments(&SimulationScheme::SignChange { m: 0.0 }, &[2.0, -1.0]).unwrap();
        assert_eq!(m, vec![[0.0, 4.0, 16.0], [0.0, 1.0, 1.0]]);
        let m = closed_form_moments(&SimulationScheme::SignChange { m: 1.0 }, &[3.0]).unwrap();
        // support {3, -1}
        assert_eq!(m, vec![[1.0, 5.0, 41.0]]);
    }
}
