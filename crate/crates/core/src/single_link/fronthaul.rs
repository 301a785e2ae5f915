//! Optimal fronthaul rates for fixed power.
//!
//! Rates are handled as exponents `x_n = N t_n / B` with the total
//! `X = N T / B`. For the Gaussian test channel the optimum is a reverse
//! water-filling in `log2 nu_n`:
//!
//! ```text
//! x_n = max(log2 nu_n - l, 0),   l = log2(beta B / (1 - beta B)).
//! ```
//!
//! The uniform-quantizer rate is neither continuous nor concave in `x`: it
//! jumps from zero to `ln(4 (1 + nu) / (4 + 3 nu))` as soon as `x > 0`,
//! then rises along a convex and later a concave stretch. Its stationary
//! points on the concave stretch are the larger roots of
//!
//! ```text
//! 3 nu y / ((y + a1)(y + a2)) = beta',   y = 2^x,  a1 = 3(1 + nu),  a2 = 3.
//! ```
//!
//! The allocation is found on the concave envelope of each curve and then
//! repaired for the subcarrier left on an envelope segment.

use std::f64::consts::LN_2;

use crate::error::Result;
use crate::model::{QuantModel, Scenario};

use super::power::check_rates;
use super::{sc_rate_nats, Kappa, Link};

const PRICE_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct FronthaulStep {
    /// Per-subcarrier rates in bit/s.
    pub t: Vec<f64>,
    /// Fronthaul dual in 1/(bit/s); `beta B` is the dimensionless price.
    pub beta: f64,
    /// Set when no subcarrier has signal, so nothing is forwarded.
    pub all_off: bool,
}

/// Optimal Gaussian-test-channel rates for powers `p` (watts).
pub fn fronthaul_given_power(scenario: &Scenario, p: &[f64]) -> Result<FronthaulStep> {
    let link = Link::from_scenario(scenario)?;
    check_rates(&link, p)?;
    Ok(link_fronthaul_step(&link, QuantModel::GaussianTestChannel, p))
}

/// Continuous uniform-quantizer rates for powers `p`, found by the
/// envelope search described in the module docs.
pub fn fronthaul_given_power_uniform(scenario: &Scenario, p: &[f64]) -> Result<FronthaulStep> {
    let link = Link::from_scenario(scenario)?;
    check_rates(&link, p)?;
    Ok(link_fronthaul_step(&link, QuantModel::UniformScalar, p))
}

pub(crate) fn link_fronthaul_step(link: &Link, model: QuantModel, p: &[f64]) -> FronthaulStep {
    let nu = link.snr(p);
    let budget = link.fronthaul_cap / link.sc_bandwidth();
    let (x, price) = match model {
        QuantModel::GaussianTestChannel => gaussian_exponents(&nu, budget),
        QuantModel::UniformScalar => uniform_exponents(&nu, budget),
    };
    let w = link.sc_bandwidth();
    let all_off = nu.iter().all(|&v| !(v > 0.0));
    FronthaulStep {
        t: x.iter().map(|&x| x * w).collect(),
        beta: price / link.bandwidth_hz,
        all_off,
    }
}

/// Reverse water-filling of `budget` over `log2 nu`. Returns the exponents
/// and the dimensionless price `beta B`.
pub(crate) fn gaussian_exponents(nu: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let mut logs: Vec<f64> = nu.iter().filter(|&&v| v > 0.0).map(|v| v.log2()).collect();
    if logs.is_empty() || !(budget > 0.0) {
        return (vec![0.0; nu.len()], 1.0);
    }
    logs.sort_by(|a, b| b.total_cmp(a));
    let mut level = logs[0] - budget;
    let mut prefix = 0.0;
    for (i, &l) in logs.iter().enumerate() {
        prefix += l;
        let candidate = (prefix - budget) / (i + 1) as f64;
        let next = logs.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
        if candidate >= next {
            level = candidate;
            break;
        }
    }
    let x = nu
        .iter()
        .map(|&v| if v > 0.0 { (v.log2() - level).max(0.0) } else { 0.0 })
        .collect();
    // z = 2^l = beta' / (1 - beta')
    let z = level.exp2();
    (x, z / (1.0 + z))
}

/// Exponent given to subcarriers that the uniform allocation would
/// otherwise leave off. The uniform rate jumps to a positive value for any
/// `x > 0`, so a vanishing rate is strictly better than none.
pub(crate) const TRICKLE: f64 = 1e-6;

/// Exponents above this leave `2^-x` below the smallest normal `f64`.
const MAX_EXPONENT: f64 = 1100.0;

const SEARCH_GRID: usize = 32;
const GOLDEN_ITERS: usize = 40;

fn uniform_value(nu: f64, x: f64) -> f64 {
    sc_rate_nats(nu, Kappa::new(QuantModel::UniformScalar, x))
}

/// `d/dx` of the uniform rate in nats for `x > 0`.
fn uniform_slope(nu: f64, x: f64) -> f64 {
    let y = x.exp2();
    LN_2 * 3.0 * nu * y / ((y + 3.0 * (1.0 + nu)) * (y + 3.0))
}

/// Largest `x` at which the slope equals `price` (nats per unit exponent).
fn uniform_root(nu: f64, price: f64) -> Option<f64> {
    let g = price / LN_2;
    let (a1, a2) = (3.0 * (1.0 + nu), 3.0);
    let q = 3.0 * nu - g * (a1 + a2);
    if !(q > 0.0) {
        return None;
    }
    let eps = 4.0 * g * g * a1 * a2 / (q * q);
    if eps > 1.0 {
        return None;
    }
    Some(q.log2() - g.log2() + ((1.0 + (1.0 - eps).sqrt()) / 2.0).log2())
}

/// `f(0+) = ln(4 (1 + nu) / (4 + 3 nu))`.
fn jump_value(nu: f64) -> f64 {
    (4.0 * (1.0 + nu) / (4.0 + 3.0 * nu)).ln()
}

/// Shape of one subcarrier's rate curve: its value just above zero and the
/// point `w` where the tangent from `(0, f(0+))` touches the curve.
#[derive(Debug, Clone, Copy)]
struct Curve {
    nu: f64,
    tangent_x: f64,
    tangent_slope: f64,
}

impl Curve {
    fn new(nu: f64) -> Curve {
        let base = jump_value(nu);
        // The curve is convex below y = sqrt(a1 a2) and concave above.
        let inflection = (9.0 * (1.0 + nu)).sqrt().log2().max(0.0);
        let gap = |w: f64| uniform_value(nu, w) - base - w * uniform_slope(nu, w);
        let (mut lo, mut hi) = (inflection, inflection + 1.0);
        while gap(hi) < 0.0 && hi < MAX_EXPONENT {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if gap(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Curve {
            nu,
            tangent_x: hi,
            tangent_slope: uniform_slope(nu, hi),
        }
    }

    /// Allocation maximizing the concave envelope minus `price * x`.
    fn envelope_choice(&self, price: f64) -> f64 {
        if price >= self.tangent_slope {
            return 0.0;
        }
        uniform_root(self.nu, price).map_or(self.tangent_x, |x| x.max(self.tangent_x))
    }
}

/// Maximizes the sum of concave envelopes over `members` with total
/// `budget`. At most one member ends up strictly inside its linear piece;
/// it is returned alongside the allocation.
fn envelope_allocation(curves: &[Curve], members: &[usize], budget: f64) -> (Vec<f64>, Option<usize>, f64) {
    let mut x = vec![0.0; curves.len()];
    if members.is_empty() || !(budget > 0.0) {
        return (x, None, 0.0);
    }
    let at = |price: f64, out: &mut Vec<f64>| -> f64 {
        let mut load = 0.0;
        for &n in members {
            out[n] = curves[n].envelope_choice(price);
            load += out[n];
        }
        load
    };
    let mut scratch = vec![0.0; curves.len()];
    let mut hi = members.iter().map(|&n| curves[n].tangent_slope).fold(0.0, f64::max);
    let mut lo = hi;
    while at(lo, &mut scratch) <= budget {
        hi = lo;
        lo /= 4.0;
        if lo < f64::MIN_POSITIVE {
            break;
        }
    }
    for _ in 0..PRICE_ITERS {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if at(mid, &mut scratch) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let load_hi = at(hi, &mut x);
    at(lo, &mut scratch);
    let partial = members.iter().copied().find(|&n| x[n] == 0.0 && scratch[n] > 0.0);
    match partial {
        Some(j) => x[j] = (budget - load_hi).max(0.0),
        None if load_hi > 0.0 => {
            let s = budget / load_hi;
            members.iter().for_each(|&n| x[n] *= s);
        }
        None => {}
    }
    (x, partial, hi)
}

/// Gives every idle subcarrier with signal the trickle exponent, taking it
/// proportionally from the others so the budget is met exactly.
fn add_trickle(nu: &[f64], x: &mut [f64], budget: f64) {
    let idle: Vec<usize> = (0..x.len()).filter(|&n| x[n] == 0.0 && nu[n] > 0.0).collect();
    if idle.is_empty() || budget < 2.0 * TRICKLE * x.len() as f64 {
        return;
    }
    let used: f64 = x.iter().sum();
    let room = budget - TRICKLE * idle.len() as f64;
    if used > 0.0 {
        let s = room / used;
        x.iter_mut().for_each(|v| *v *= s);
    } else {
        let share = room / idle.len() as f64;
        idle.iter().for_each(|&n| x[n] = share);
    }
    for n in idle {
        x[n] += TRICKLE;
    }
}

fn total_value(nu: &[f64], x: &[f64]) -> f64 {
    nu.iter().zip(x).map(|(&v, &x)| uniform_value(v, x)).sum()
}

/// Uniform-model exponents for SNRs `nu` and exponent budget `budget`.
///
/// The concave-envelope solution is optimal up to the one subcarrier left
/// on a linear piece; with none left there, it is optimal up to the
/// trickle. Otherwise each subcarrier in turn gets a fixed share `s`
/// searched over `[0, budget]` while the rest are re-allocated on their
/// envelopes, and the best candidate by true value is kept.
pub(crate) fn uniform_exponents(nu: &[f64], budget: f64) -> (Vec<f64>, f64) {
    let n = nu.len();
    let members: Vec<usize> = (0..n).filter(|&i| nu[i] > 0.0).collect();
    if members.is_empty() || !(budget > 0.0) {
        return (vec![0.0; n], 1.0);
    }
    let budget = budget.min(MAX_EXPONENT * n as f64);
    let curves: Vec<Curve> = nu.iter().map(|&v| if v > 0.0 { Curve::new(v) } else { Curve::new(1.0) }).collect();

    let (mut best, partial, price) = envelope_allocation(&curves, &members, budget);
    add_trickle(nu, &mut best, budget);
    let mut best_value = total_value(nu, &best);

    if partial.is_some() && members.len() > 1 {
        for &j in &members {
            let rest: Vec<usize> = members.iter().copied().filter(|&i| i != j).collect();
            let candidate = |s: f64| -> Vec<f64> {
                let (mut x, _, _) = envelope_allocation(&curves, &rest, budget - s);
                x[j] = s;
                add_trickle(nu, &mut x, budget);
                x
            };
            let value = |s: f64| total_value(nu, &candidate(s));
            let grid: Vec<f64> = (0..=SEARCH_GRID).map(|i| budget * i as f64 / SEARCH_GRID as f64).collect();
            let values: Vec<f64> = grid.iter().map(|&s| value(s)).collect();
            let k = (0..grid.len()).max_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
            let (mut lo, mut hi) = (grid[k.saturating_sub(1)], grid[(k + 1).min(SEARCH_GRID)]);
            let phi = (5f64.sqrt() - 1.0) / 2.0;
            let (mut a, mut b) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
            let (mut va, mut vb) = (value(a), value(b));
            for _ in 0..GOLDEN_ITERS {
                if va > vb {
                    hi = b;
                    (b, vb) = (a, va);
                    a = hi - phi * (hi - lo);
                    va = value(a);
                } else {
                    lo = a;
                    (a, va) = (b, vb);
                    b = lo + phi * (hi - lo);
                    vb = value(b);
                }
            }
            for s in [grid[k], 0.5 * (lo + hi)] {
                let x = candidate(s);
                let v = total_value(nu, &x);
                if v > best_value {
                    best_value = v;
                    best = x;
                }
            }
        }
    }
    (best, price / LN_2)
}
