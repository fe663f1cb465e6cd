//! Finite-L p-values and the two equivalent rejection rules.

use std::cmp::Ordering;

use crate::scalar::Scalar;

use super::Sidedness;

/// Maps a statistic to the scale on which large values are extreme.
/// `EqualTail` is handled by combining the two one-sided maps.
pub fn psi<T: Scalar>(sidedness: Sidedness, t: T) -> T {
    match sidedness {
        Sidedness::TwoSidedAbs | Sidedness::EqualTail => t.abs(),
        Sidedness::RightTail => t,
        Sidedness::LeftTail => -t,
    }
}

/// `ceil(alpha * (L + 1))`, robust to representation error such as
/// `0.05 * 1000 = 50.000000000000007`.
pub fn critical_count(alpha: f64, draws: usize) -> usize {
    let x = alpha * (draws as f64 + 1.0);
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r as usize
    } else {
        x.ceil() as usize
    }
}

fn tail_count<T: Scalar>(sidedness: Sidedness, t_obs: T, t_sims: &[T]) -> usize {
    let obs = psi(sidedness, t_obs);
    t_sims.iter().filter(|&&t| psi(sidedness, t) >= obs).count()
}

/// `(1 + #{psi(t_l) >= psi(t_obs)}) / (L + 1)`; for `EqualTail`,
/// `min(1, 2 min(p_right, p_left))`.
pub fn p_value<T: Scalar>(t_obs: T, t_sims: &[T], sidedness: Sidedness) -> f64 {
    let denom = t_sims.len() as f64 + 1.0;
    let one = |s| (1 + tail_count(s, t_obs, t_sims)) as f64 / denom;
    match sidedness {
        Sidedness::EqualTail => (2.0 * one(Sidedness::RightTail).min(one(Sidedness::LeftTail))).min(1.0),
        s => one(s),
    }
}

/// Rejection through the p-value: `p <= ceil(alpha (L+1)) / (L+1)`.
pub fn reject_by_p_value<T: Scalar>(t_obs: T, t_sims: &[T], alpha: f64, sidedness: Sidedness) -> bool {
    let l = t_sims.len();
    let denom = l as f64 + 1.0;
    let one = |s, a| {
        let p = (1 + tail_count(s, t_obs, t_sims)) as f64 / denom;
        p <= critical_count(a, l) as f64 / denom
    };
    match sidedness {
        Sidedness::EqualTail => one(Sidedness::RightTail, alpha / 2.0) || one(Sidedness::LeftTail, alpha / 2.0),
        s => one(s, alpha),
    }
}

/// Rejection through order statistics: `psi(t_obs)` strictly exceeds the
/// k-th smallest simulated value, `k = L + 1 - ceil(alpha (L+1))`. `k = 0`
/// always rejects.
pub fn reject_by_order_statistic<T: Scalar>(t_obs: T, t_sims: &[T], alpha: f64, sidedness: Sidedness) -> bool {
    let one = |s, a| {
        let l = t_sims.len();
        let c = critical_count(a, l);
        if c > l {
            return true;
        }
        let k = l + 1 - c;
        let mut v: Vec<T> = t_sims.iter().map(|&t| psi(s, t)).collect();
        let (_, kth, _) = v.select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
        psi(s, t_obs) > *kth
    };
    match sidedness {
        Sidedness::EqualTail => one(Sidedness::RightTail, alpha / 2.0) || one(Sidedness::LeftTail, alpha / 2.0),
        s => one(s, alpha),
    }
}

/// The p-value together with the order-statistic decision.
pub fn p_value_rule<T: Scalar>(t_obs: T, t_sims: &[T], alpha: f64, sidedness: Sidedness) -> (f64, bool) {
    (
        p_value(t_obs, t_sims, sidedness),
        reject_by_order_statistic(t_obs, t_sims, alpha, sidedness),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn critical_count_handles_float_error() {
        assert_eq!(critical_count(0.05, 999), 50);
        assert_eq!(critical_count(0.05, 19), 1);
        assert_eq!(critical_count(0.10, 199), 20);
        assert_eq!(critical_count(0.05, 10), 1);
        assert_eq!(critical_count(0.07, 99), 7);
        assert_eq!(critical_count(0.01, 1), 1);
    }

    #[test]
    fn extreme_and_central_observations() {
        let sims: Vec<f64> = (1..=99).map(|k| k as f64 / 100.0).collect();
        assert_eq!(p_value(5.0, &sims, Sidedness::TwoSidedAbs), 0.01);
        assert_eq!(p_value(0.0, &sims, Sidedness::TwoSidedAbs), 1.0);
    }

    #[test]
    fn nineteen_draws_reject_only_above_max() {
        let sims: Vec<f64> = (0..19).map(|k| k as f64 - 9.0).collect();
        for (obs, expected) in [(9.5, true), (9.0, false), (-9.5, true), (3.0, false)] {
            assert_eq!(reject_by_order_statistic(obs, &sims, 0.05, Sidedness::TwoSidedAbs), expected, "{obs}");
            assert_eq!(reject_by_p_value(obs, &sims, 0.05, Sidedness::TwoSidedAbs), expected, "{obs}");
        }
        assert!(p_value(9.5, &sims, Sidedness::TwoSidedAbs) <= 0.05);
    }

    #[test]
    fn one_sided_maps() {
        let sims = [-2.0, -1.0, 1.0, 2.0];
        assert_eq!(p_value(1.5, &sims, Sidedness::RightTail), 2.0 / 5.0);
        assert_eq!(p_value(1.5, &sims, Sidedness::LeftTail), 4.0 / 5.0);
        assert_eq!(p_value(1.5, &sims, Sidedness::EqualTail), 4.0 / 5.0);
        assert_eq!(p_value(-3.0, &sims, Sidedness::EqualTail), 2.0 / 5.0);
    }

    #[test]
    fn ties_count_toward_p_value() {
        let sims = [1.0; 9];
        assert_eq!(p_value(1.0, &sims, Sidedness::RightTail), 1.0);
        assert!(!reject_by_order_statistic(1.0, &sims, 0.5, Sidedness::RightTail));
    }

    #[test]
    fn nested_draws_move_p_value_by_at_most_one_step() {
        let sims: Vec<f64> = (0..200).map(|k| ((k * 37) % 101) as f64 / 10.0 - 5.0).collect();
        for l in 1..sims.len() {
            let a = p_value(1.3, &sims[..l], Sidedness::TwoSidedAbs);
            let b = p_value(1.3, &sims[..=l], Sidedness::TwoSidedAbs);
            assert!((a - b).abs() <= 1.0 / (l as f64 + 1.0) + 1e-15);
        }
    }

    fn sidedness() -> impl Strategy<Value = Sidedness> {
        prop_oneof![
            Just(Sidedness::TwoSidedAbs),
            Just(Sidedness::RightTail),
            Just(Sidedness::LeftTail),
            Just(Sidedness::EqualTail),
        ]
    }

    proptest! {
        #[test]
        fn rules_agree_with_ties(
            obs in -5i32..=5,
            sims in prop::collection::vec(-5i32..=5, 1..60),
            alpha in 0.001f64..0.999,
            side in sidedness(),
        ) {
            let sims: Vec<f64> = sims.into_iter().map(f64::from).collect();
            let obs = f64::from(obs);
            prop_assert_eq!(
                reject_by_order_statistic(obs, &sims, alpha, side),
                reject_by_p_value(obs, &sims, alpha, side)
            );
        }

        #[test]
        fn p_value_in_unit_interval(obs in -3.0f64..3.0, sims in prop::collection::vec(-3.0f64..3.0, 1..40), side in sidedness()) {
            let p = p_value(obs, &sims, side);
            prop_assert!(p > 0.0 && p <= 1.0);
        }
    }
}
