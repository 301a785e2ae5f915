//! Threshold rounding of continuous bit counts onto the integer grid under
//! a sum budget.
//!
//! A value `r` is rounded down when its fractional part is at most `alpha`
//! and up otherwise. Lowering `alpha` rounds more values up, so the load is
//! non-increasing in `alpha` and `alpha = 1` (all floors) always fits when
//! the continuous values do. The threshold is found by bisection and the
//! feasible endpoint is kept.

use crate::model::{FronthaulAllocation, Scenario};

/// Values this close to an integer are treated as that integer, so that
/// allocations already on the grid survive floating-point noise.
const SNAP: f64 = 1e-9;

/// Bisection stops once the bracket on `alpha` is narrower than this.
const ALPHA_TOL: f64 = 1e-12;

fn snapped(r: f64) -> f64 {
    let nearest = r.round();
    if (r - nearest).abs() <= SNAP * nearest.abs().max(1.0) {
        nearest
    } else {
        r
    }
}

/// Rounds every value with threshold `alpha`. Negative inputs map to 0.
pub fn round_with_alpha(values: &[f64], alpha: f64) -> Vec<u32> {
    values
        .iter()
        .map(|&r| {
            let r = snapped(r.max(0.0));
            let fl = r.floor();
            if r - fl <= alpha {
                fl as u32
            } else {
                fl as u32 + 1
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rounded {
    pub bits: Vec<u32>,
    pub alpha: f64,
}

/// Rounds `values` so that `sum(bits) <= budget`, choosing the smallest
/// threshold that stays feasible. `budget` is in the same units as the
/// values and may be fractional.
pub fn round_to_budget(values: &[f64], budget: f64) -> Rounded {
    let cap = (budget + SNAP * budget.abs().max(1.0)).floor().max(0.0) as u64;
    let fits = |alpha: f64| {
        let bits = round_with_alpha(values, alpha);
        let load: u64 = bits.iter().map(|&d| d as u64).sum();
        (load <= cap, bits)
    };
    let (ok0, bits0) = fits(0.0);
    if ok0 {
        return Rounded { bits: bits0, alpha: 0.0 };
    }
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo >= ALPHA_TOL {
        let mid = 0.5 * (lo + hi);
        if fits(mid).0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Rounded {
        bits: fits(hi).1,
        alpha: hi,
    }
}

/// Rounds every RRH's rates onto the `2B/N` grid, each row against its own
/// capacity, in RRH index order.
pub fn round_fronthaul(scenario: &Scenario, t: &[Vec<f64>]) -> FronthaulAllocation {
    let step = scenario.bit_rate_step();
    let bits = t
        .iter()
        .enumerate()
        .map(|(m, row)| {
            let values: Vec<f64> = row.iter().map(|&t| t / step).collect();
            round_to_budget(&values, scenario.fronthaul_cap[m] / step).bits
        })
        .collect();
    FronthaulAllocation::from_bits(scenario, bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn on_grid_is_unchanged() {
        let v = [0.0, 1.0, 3.0, 7.0];
        for a in [0.0, 0.3, 1.0] {
            assert_eq!(round_with_alpha(&v, a), vec![0, 1, 3, 7]);
        }
        assert_eq!(round_to_budget(&v, 11.0).bits, vec![0, 1, 3, 7]);
        let noisy = [2.0 - 1e-12, 3.0 + 1e-12];
        assert_eq!(round_to_budget(&noisy, 5.0).bits, vec![2, 3]);
    }

    #[test]
    fn single_value_rounds_up_when_it_fits() {
        assert_eq!(round_to_budget(&[1.5], 2.0).bits, vec![2]);
        assert_eq!(round_to_budget(&[1.5], 1.5).bits, vec![1]);
    }

    #[test]
    fn tie_rounds_down() {
        assert_eq!(round_with_alpha(&[2.25], 0.25), vec![2]);
        assert_eq!(round_with_alpha(&[2.25], 0.2), vec![3]);
    }

    #[test]
    fn larger_fractions_win_the_spare_budget() {
        // Budget allows one extra unit; the 0.8 fraction takes it.
        let r = round_to_budget(&[1.3, 2.8, 0.6], 4.0);
        assert_eq!(r.bits, vec![1, 3, 0]);
        // One more unit lets the 0.6 fraction round up as well.
        let r = round_to_budget(&[1.3, 2.8, 0.6], 5.0);
        assert_eq!(r.bits, vec![1, 3, 1]);
    }

    proptest! {
        #[test]
        fn feasible_and_dominates_floor(values in prop::collection::vec(0.0f64..12.0, 1..20), slack in 0.0f64..5.0) {
            let budget = values.iter().sum::<f64>() + slack;
            let r = round_to_budget(&values, budget);
            let load: u32 = r.bits.iter().sum();
            prop_assert!(load as f64 <= budget + 1e-9);
            let floor = round_with_alpha(&values, 1.0);
            for (d, f) in r.bits.iter().zip(&floor) {
                prop_assert!(d >= f && *d <= f + 1);
            }
        }
    }
}
