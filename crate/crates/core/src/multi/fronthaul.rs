//! Fronthaul step for fixed powers: the linearized problem in `psi`.
//!
//! With the other RRHs fixed, RRH `m` maximizes
//! `sum_n ln(E_n + nu_n psi_n / (psi_n + c_n))` subject to
//! `sum_n w_n psi_n <= budget`, where `w_n` is the slope of the fronthaul
//! cost at the expansion point. For the price `pi = mu w_n` stationarity is
//!
//! ```text
//! (E + nu) psi^2 + c (2E + nu) psi + E c^2 - nu c / pi = 0,
//! ```
//!
//! solved by its stable positive root. `mu` is bisected per RRH and the RRHs
//! are swept until the objective stops moving. Each block solve starts from
//! a feasible point of its own constraint, so the objective never drops.

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{PowerAllocation, QuantModel, Scenario, FEASIBILITY_TOL};

use super::{nats, nats_slope, objective, psi_floor, psi_max, rrh_active, rrh_term, PsiAllocation};

const MAX_SWEEPS: usize = 50;
const SWEEP_TOL: f64 = 1e-12;
const BISECT_ITERS: usize = 200;
const BRACKET_STEPS: usize = 600;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaSolution {
    pub psi: PsiAllocation,
    /// Price `mu` of every RRH's linearized constraint; zero where the row
    /// was left unchanged.
    pub duals: Vec<f64>,
    /// Largest relative violation of the stationarity conditions.
    pub kkt_residual: f64,
    pub sweeps: usize,
}

/// One RRH's block: per-subcarrier data with the other RRHs folded into `e`.
struct Block<'a> {
    model: QuantModel,
    nu: &'a [f64],
    e: Vec<f64>,
    w: Vec<f64>,
    floor: f64,
    cap: f64,
}

impl Block<'_> {
    fn c(&self, n: usize) -> f64 {
        let k = match self.model {
            QuantModel::GaussianTestChannel => 1.0,
            QuantModel::UniformScalar => 3.0,
        };
        k * (1.0 + self.nu[n])
    }

    fn psi_at(&self, n: usize, mu: f64) -> f64 {
        let nu = self.nu[n];
        if nu <= 0.0 {
            return self.floor;
        }
        let (c, e) = (self.c(n), self.e[n]);
        let k0 = nu * c / (mu * self.w[n]) - e * c * c;
        if k0 <= 0.0 {
            return self.floor;
        }
        let a = e + nu;
        let b = c * (2.0 * e + nu);
        let root = 2.0 * k0 / (b + (b * b + 4.0 * a * k0).sqrt());
        if !root.is_finite() || k0.is_infinite() {
            return self.cap;
        }
        root.clamp(self.floor, self.cap)
    }

    fn usage(&self, mu: f64) -> f64 {
        (0..self.nu.len()).map(|n| self.w[n] * self.psi_at(n, mu)).sum()
    }

    fn derivative(&self, n: usize, psi: f64) -> f64 {
        let (nu, c, e) = (self.nu[n], self.c(n), self.e[n]);
        nu * c / ((psi + c) * (e * (psi + c) + nu * psi))
    }

    /// Optimal row and its price, or `None` when the row cannot improve.
    fn solve(&self, rhs: f64) -> Option<(Vec<f64>, f64)> {
        let len = self.nu.len();
        let active: Vec<usize> = (0..len).filter(|&n| self.nu[n] > 0.0).collect();
        let min_usage: f64 = self.w.iter().map(|w| w * self.floor).sum();
        if active.is_empty() || !(rhs > min_usage) {
            return None;
        }
        let mut hi = active
            .iter()
            .map(|&n| {
                let c = self.c(n);
                self.nu[n] / (self.e[n] * c * self.w[n])
            })
            .fold(0.0, f64::max)
            * 2.0;
        let mut lo = hi;
        let mut reached = false;
        for _ in 0..BRACKET_STEPS {
            lo *= 0.25;
            if self.usage(lo) >= rhs {
                reached = true;
                break;
            }
            if active.iter().all(|&n| self.psi_at(n, lo) >= self.cap) {
                break;
            }
        }
        if !reached {
            return Some(((0..len).map(|n| self.psi_at(n, lo)).collect(), lo));
        }
        for _ in 0..BISECT_ITERS {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if self.usage(mid) > rhs {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(((0..len).map(|n| self.psi_at(n, hi)).collect(), hi))
    }

    fn residual(&self, row: &[f64], mu: f64) -> f64 {
        (0..row.len())
            .filter(|&n| self.nu[n] > 0.0 && row[n] < self.cap)
            .map(|n| {
                let target = mu * self.w[n];
                let d = self.derivative(n, row[n]);
                if row[n] <= self.floor {
                    (d - target).max(0.0) / target
                } else {
                    (d - target).abs() / target
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Solves the linearized fronthaul problem around the feasible point
/// `psi_tilde` with the powers `p_hat` fixed. The result satisfies the
/// true capacity constraints and is at least as good as `psi_tilde`.
pub fn fronthaul_sca_subproblem(
    scenario: &Scenario,
    p_hat: &PowerAllocation,
    psi_tilde: &PsiAllocation,
) -> Result<ScaSolution> {
    scenario.validate()?;
    p_hat.check_shape(scenario)?;
    psi_tilde.check_shape(scenario)?;
    let model = psi_tilde.model;
    if let Some(m) = psi_tilde.within_capacity(scenario) {
        return Err(Error::Precondition(format!(
            "expansion point exceeds the fronthaul capacity of rrh {m}"
        )));
    }
    let floor = psi_floor(model);
    for m in 0..scenario.num_rrhs {
        if rrh_active(scenario, model, m) && psi_tilde.psi[m].iter().any(|&v| v < floor * (1.0 - 1e-12)) {
            return Err(Error::Precondition(format!(
                "expansion point of rrh {m} is below the forwarding floor"
            )));
        }
    }
    let (mm, nn) = (scenario.num_rrhs, scenario.num_subcarriers);
    let p = p_hat.per_sc(scenario);
    let nu: Vec<Vec<f64>> = (0..mm)
        .map(|m| {
            (0..nn)
                .map(|n| {
                    let gp = scenario.gain(m, n) * p[n];
                    if gp <= 0.0 {
                        0.0
                    } else {
                        gp / scenario.noise_var[m][n].max(f64::MIN_POSITIVE)
                    }
                })
                .collect()
        })
        .collect();
    let term = |m: usize, n: usize, v: f64| rrh_term(model, scenario.gain(m, n) * p[n], scenario.noise_var[m][n], v);
    let mut psi = psi_tilde.clone();
    let mut phi: Vec<Vec<f64>> = (0..mm).map(|m| (0..nn).map(|n| term(m, n, psi.psi[m][n])).collect()).collect();
    let mut cur = objective(scenario, &p, &psi);
    let mut duals = vec![0.0; mm];
    let mut sweeps = 0;
    let block = |m: usize, phi: &[Vec<f64>]| Block {
        model,
        nu: &nu[m],
        e: (0..nn)
            .map(|n| 1.0 + (0..mm).filter(|&j| j != m).map(|j| phi[j][n]).sum::<f64>())
            .collect(),
        w: psi_tilde.psi[m].iter().map(|&v| nats_slope(model, v)).collect(),
        floor,
        cap: psi_max(),
    };
    let rhs: Vec<f64> = (0..mm)
        .map(|m| {
            let own = scenario.fronthaul_cap[m] * LN_2 / scenario.sc_bandwidth();
            own - psi_tilde.psi[m]
                .iter()
                .map(|&v| nats(model, v) - v * nats_slope(model, v))
                .sum::<f64>()
        })
        .collect();
    while sweeps < MAX_SWEEPS {
        sweeps += 1;
        let start = cur;
        for m in 0..mm {
            if !rrh_active(scenario, model, m) {
                continue;
            }
            let Some((row, mu)) = block(m, &phi).solve(rhs[m]) else {
                continue;
            };
            let old = std::mem::replace(&mut psi.psi[m], row);
            let value = objective(scenario, &p, &psi);
            if value >= cur {
                cur = value;
                duals[m] = mu;
                phi[m] = (0..nn).map(|n| term(m, n, psi.psi[m][n])).collect();
            } else {
                psi.psi[m] = old;
            }
        }
        if cur - start <= SWEEP_TOL * cur.abs() {
            break;
        }
    }
    if let Some(m) = psi.within_capacity(scenario) {
        return Err(Error::Internal(format!(
            "fronthaul step left rrh {m} above its capacity ({} > {})",
            psi.load(scenario, m),
            scenario.fronthaul_cap[m]
        )));
    }
    for m in 0..mm {
        let lin = psi.linearized_load(scenario, m, psi_tilde);
        let cap = scenario.fronthaul_cap[m];
        if lin > cap + FEASIBILITY_TOL * cap.max(scenario.sc_bandwidth()) {
            return Err(Error::Internal(format!(
                "fronthaul step left rrh {m} above its linearized capacity ({lin} > {cap})"
            )));
        }
    }
    let kkt_residual = (0..mm)
        .filter(|&m| duals[m] > 0.0)
        .map(|m| block(m, &phi).residual(&psi.psi[m], duals[m]))
        .fold(0.0, f64::max);
    Ok(ScaSolution {
        psi,
        duals,
        kkt_residual,
        sweeps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multi::test_support::random_network;
    use crate::single_link::fronthaul_given_power;
    use crate::single_link::test_support::random_link;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_power(rng: &mut impl Rng, s: &Scenario) -> PowerAllocation {
        let mut p = PowerAllocation::zeros(s);
        for k in 0..s.num_users {
            let scs = s.subcarriers_of(k);
            let w: Vec<f64> = scs.iter().map(|_| rng.random_range(0.0..1.0)).collect();
            let total: f64 = w.iter().sum();
            for (&n, wi) in scs.iter().zip(&w) {
                p.p[k][n] = s.power_budget[k] * wi / total;
            }
        }
        p
    }

    fn iterate(s: &Scenario, p: &PowerAllocation, model: QuantModel, steps: usize) -> PsiAllocation {
        let mut psi = PsiAllocation::equal_split(s, model);
        for _ in 0..steps {
            psi = fronthaul_sca_subproblem(s, p, &psi).unwrap().psi;
        }
        psi
    }

    #[test]
    fn steps_are_feasible_and_improving() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..30 {
            let s = random_network(&mut rng, 2, 2, 2);
            let p = random_power(&mut rng, &s);
            let ps = p.per_sc(&s);
            for model in [QuantModel::GaussianTestChannel, QuantModel::UniformScalar] {
                let start = PsiAllocation::equal_split(&s, model);
                let sol = fronthaul_sca_subproblem(&s, &p, &start).unwrap();
                for m in 0..2 {
                    let cap = s.fronthaul_cap[m] * (1.0 + 1e-9);
                    assert!(sol.psi.load(&s, m) <= cap);
                    assert!(sol.psi.linearized_load(&s, m, &start) <= cap);
                }
                assert!(objective(&s, &ps, &sol.psi) >= objective(&s, &ps, &start));
            }
        }
    }

    #[test]
    fn converged_point_is_fixed() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let s = random_network(&mut rng, 2, 2, 3);
        let p = random_power(&mut rng, &s);
        let ps = p.per_sc(&s);
        let psi = iterate(&s, &p, QuantModel::GaussianTestChannel, 300);
        let again = fronthaul_sca_subproblem(&s, &p, &psi).unwrap();
        let (a, b) = (objective(&s, &ps, &psi), objective(&s, &ps, &again.psi));
        assert!((b - a).abs() <= 1e-9 * a, "{a} vs {b}");
        assert!(again.kkt_residual <= 1e-6, "{}", again.kkt_residual);
    }

    #[test]
    fn single_rrh_converges_to_closed_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..10 {
            let s = random_link(&mut rng, 5);
            let p = random_power(&mut rng, &s);
            let expect = fronthaul_given_power(&s, &p.per_sc(&s)).unwrap().t;
            let got = iterate(&s, &p, QuantModel::GaussianTestChannel, 400).to_fronthaul(&s).t[0].clone();
            for (a, b) in got.iter().zip(&expect) {
                assert!((a - b).abs() <= 1e-6 * s.fronthaul_cap[0], "{got:?} vs {expect:?}");
            }
        }
    }

    #[test]
    fn infeasible_expansion_point_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(24);
        let s = random_network(&mut rng, 1, 1, 2);
        let p = random_power(&mut rng, &s);
        let mut psi = PsiAllocation::equal_split(&s, QuantModel::GaussianTestChannel);
        psi.psi[0][0] *= 4.0;
        let err = fronthaul_sca_subproblem(&s, &p, &psi).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)));
    }
}
