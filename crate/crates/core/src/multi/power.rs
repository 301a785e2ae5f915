//! Optimal powers for fixed `psi`.
//!
//! Each subcarrier's rate is `ln(1 + sum_m a_m p / (b_m p + d_m))`, a concave
//! function of its own power, and users do not share subcarriers. For one
//! user with power price `rho` every subcarrier solves `f'(p) = rho` on
//! `[0, P]`; `rho` is bisected until the budget is spent.

use serde::Serialize;

use crate::error::Result;
use crate::model::{PowerAllocation, QuantModel, Scenario};

use super::PsiAllocation;

const BISECT_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerSolution {
    pub power: PowerAllocation,
    /// Power price of every user in nats per watt; zero for idle users.
    pub duals: Vec<f64>,
    /// Largest relative violation of the stationarity conditions.
    pub kkt_residual: f64,
    /// Users left silent because none of their subcarriers reaches the BBU.
    pub idle_users: Vec<usize>,
}

#[derive(Debug, Clone, Copy)]
struct Term {
    a: f64,
    b: f64,
    d: f64,
}

/// Rate of one subcarrier as a function of its power, in nats.
#[derive(Debug, Clone)]
struct ScCurve {
    terms: Vec<Term>,
}

impl ScCurve {
    fn new(scenario: &Scenario, psi: &PsiAllocation, n: usize) -> Self {
        let terms = (0..scenario.num_rrhs)
            .filter_map(|m| {
                let g = scenario.gain(m, n);
                let s2 = scenario.noise_var[m][n].max(f64::MIN_POSITIVE);
                let v = psi.psi[m][n];
                if g <= 0.0 {
                    return None;
                }
                match psi.model {
                    QuantModel::GaussianTestChannel if v > 0.0 => {
                        let w = 1.0 / (1.0 + v);
                        Some(Term { a: g * v * w, b: g * w, d: s2 })
                    }
                    QuantModel::UniformScalar if v > 1.0 => {
                        let inv = 1.0 / v;
                        Some(Term {
                            a: g,
                            b: 3.0 * g * inv,
                            d: s2 * (1.0 + 3.0 * inv),
                        })
                    }
                    _ => None,
                }
            })
            .collect();
        Self { terms }
    }

    fn slope(&self, p: f64) -> f64 {
        let mut s0 = 0.0;
        let mut s1 = 0.0;
        for t in &self.terms {
            let den = t.b * p + t.d;
            s0 += t.a * p / den;
            s1 += t.a * t.d / (den * den);
        }
        s1 / (1.0 + s0)
    }

    /// Maximizer of `f(p) - rho p` over `[0, cap]`.
    fn best_power(&self, rho: f64, cap: f64) -> f64 {
        if self.terms.is_empty() || self.slope(0.0) <= rho {
            return 0.0;
        }
        if self.slope(cap) >= rho {
            return cap;
        }
        let (mut lo, mut hi) = (0.0, cap);
        for _ in 0..BISECT_ITERS {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.slope(mid) > rho {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

/// Returns the powers and the price of one user.
fn solve_user(curves: &[ScCurve], budget: f64) -> (Vec<f64>, f64) {
    let zeros = vec![0.0; curves.len()];
    let rho_hi = curves.iter().map(|c| if c.terms.is_empty() { 0.0 } else { c.slope(0.0) }).fold(0.0, f64::max);
    if budget <= 0.0 || rho_hi <= 0.0 {
        return (zeros, 0.0);
    }
    let rho_lo = curves
        .iter()
        .filter(|c| !c.terms.is_empty())
        .map(|c| c.slope(budget))
        .fold(f64::INFINITY, f64::min)
        .min(rho_hi)
        * 0.5;
    let total = |rho: f64| curves.iter().map(|c| c.best_power(rho, budget)).sum::<f64>();
    let (mut lo, mut hi) = (rho_lo, rho_hi);
    for _ in 0..BISECT_ITERS {
        let mid = (lo * hi).sqrt();
        if mid <= lo || mid >= hi {
            break;
        }
        if total(mid) > budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut p: Vec<f64> = curves.iter().map(|c| c.best_power(hi, budget)).collect();
    let used: f64 = p.iter().sum();
    if used > 0.0 && used < budget {
        let scale = budget / used;
        p.iter_mut().for_each(|v| *v *= scale);
    }
    (p, hi)
}

fn residual(curve: &ScCurve, p: f64, rho: f64, cap: f64) -> f64 {
    if curve.terms.is_empty() || rho <= 0.0 {
        return 0.0;
    }
    let s = curve.slope(p);
    if p <= 0.0 {
        (s - rho).max(0.0) / rho
    } else if p >= cap {
        (rho - s).max(0.0) / rho
    } else {
        (s - rho).abs() / rho
    }
}

/// Maximizes the sum rate over the powers with `psi_hat` fixed.
pub fn power_subproblem(scenario: &Scenario, psi_hat: &PsiAllocation) -> Result<PowerSolution> {
    scenario.validate()?;
    psi_hat.check_shape(scenario)?;
    let mut power = PowerAllocation::zeros(scenario);
    let mut duals = vec![0.0; scenario.num_users];
    let mut kkt_residual: f64 = 0.0;
    let mut idle_users = Vec::new();
    for k in 0..scenario.num_users {
        let scs = scenario.subcarriers_of(k);
        let curves: Vec<ScCurve> = scs.iter().map(|&n| ScCurve::new(scenario, psi_hat, n)).collect();
        if curves.iter().all(|c| c.terms.is_empty()) {
            idle_users.push(k);
            continue;
        }
        let budget = scenario.power_budget[k];
        let (p, rho) = solve_user(&curves, budget);
        for ((&n, &v), c) in scs.iter().zip(&p).zip(&curves) {
            power.p[k][n] = v;
            kkt_residual = kkt_residual.max(residual(c, v, rho, budget));
        }
        duals[k] = rho;
    }
    Ok(PowerSolution {
        power,
        duals,
        kkt_residual,
        idle_users,
    })
}
