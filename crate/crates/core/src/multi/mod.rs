//! Solvers for any number of users and RRHs.
//!
//! The fronthaul rates are replaced by `psi = 2^{N t / B} - 1` (Gaussian)
//! or `psi = 2^{N t / B}` (uniform), which turns the RRH contribution on a
//! subcarrier into `nu psi / (psi + c)` with `nu = |h|^2 p / sigma^2` and
//! `c = 1 + nu` or `c = 3 (1 + nu)`. For fixed `psi` the rate is concave in
//! the powers; for fixed powers it is concave in `psi`, while the fronthaul
//! constraint `sum log2(1 + psi) <= N T / B` is handled by linearizing its
//! left side at the previous iterate, which over-estimates it.
//!
//! The uniform relaxation keeps every active `psi` at least `2^TRICKLE`
//! above one, so the continuous rate law is the same function as the
//! `nu psi / (psi + c)` form on the whole feasible set. RRHs whose capacity
//! cannot pay for that floor forward nothing.

mod algorithm;
mod fronthaul;
mod power;

pub use algorithm::{algorithm_three, fronthaul_given_power_multi, solve_p2_multi, solve_p2_noint_multi};
pub use fronthaul::{fronthaul_sca_subproblem, ScaSolution};
pub use power::{power_subproblem, PowerSolution};

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{FronthaulAllocation, QuantModel, Scenario, FEASIBILITY_TOL};
use crate::single_link::TRICKLE;

/// Largest `log2 psi`. Beyond it the RRH term equals `nu` to working
/// precision.
pub const MAX_LOG_PSI: f64 = 200.0;

/// Fronthaul variables in `psi` form for one quantization model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiAllocation {
    pub model: QuantModel,
    /// `psi[m][n]`.
    pub psi: Vec<Vec<f64>>,
}

/// Smallest `psi` of a forwarding RRH.
pub(crate) fn psi_floor(model: QuantModel) -> f64 {
    match model {
        QuantModel::GaussianTestChannel => 0.0,
        QuantModel::UniformScalar => TRICKLE.exp2(),
    }
}

pub(crate) fn psi_max() -> f64 {
    MAX_LOG_PSI.exp2()
}

/// Whether RRH `m` can forward anything under `model`.
pub(crate) fn rrh_active(scenario: &Scenario, model: QuantModel, m: usize) -> bool {
    let per_sc = scenario.fronthaul_cap[m] / scenario.bandwidth_hz;
    match model {
        QuantModel::GaussianTestChannel => per_sc > 0.0,
        QuantModel::UniformScalar => per_sc >= 2.0 * TRICKLE,
    }
}

/// `psi` for the exponent `x = N t / B`.
pub fn psi_from_exponent(model: QuantModel, x: f64) -> f64 {
    let x = x.clamp(0.0, MAX_LOG_PSI);
    match model {
        QuantModel::GaussianTestChannel => (x * LN_2).exp_m1(),
        QuantModel::UniformScalar => x.exp2(),
    }
}

/// Exponent `x = N t / B` for `psi`.
pub fn exponent_from_psi(model: QuantModel, psi: f64) -> f64 {
    match model {
        QuantModel::GaussianTestChannel => psi.max(0.0).ln_1p() / LN_2,
        QuantModel::UniformScalar => psi.max(1.0).log2(),
    }
}

/// Nats of fronthaul per subcarrier, `ln(1 + psi)` or `ln psi`.
fn nats(model: QuantModel, psi: f64) -> f64 {
    exponent_from_psi(model, psi) * LN_2
}

/// Slope of [`nats`], the weight of `psi` in the linearized constraint.
fn nats_slope(model: QuantModel, psi: f64) -> f64 {
    match model {
        QuantModel::GaussianTestChannel => 1.0 / (1.0 + psi),
        QuantModel::UniformScalar => 1.0 / psi,
    }
}

/// SNR contribution `g p psi / (sigma^2 psi + k (g p + sigma^2))` of one RRH,
/// `k = 1` (Gaussian) or `3` (uniform). Zero when nothing is forwarded.
pub(crate) fn rrh_term(model: QuantModel, gp: f64, noise: f64, psi: f64) -> f64 {
    if gp <= 0.0 {
        return 0.0;
    }
    match model {
        QuantModel::GaussianTestChannel if psi > 0.0 => gp * psi / (noise * psi + gp + noise),
        QuantModel::UniformScalar if psi > 1.0 => gp * psi / (noise * psi + 3.0 * (gp + noise)),
        _ => 0.0,
    }
}

impl PsiAllocation {
    pub fn from_fronthaul(scenario: &Scenario, model: QuantModel, fronthaul: &FronthaulAllocation) -> Self {
        let psi = (0..scenario.num_rrhs)
            .map(|m| {
                (0..scenario.num_subcarriers)
                    .map(|n| psi_from_exponent(model, fronthaul.exponent(scenario, m, n)))
                    .collect()
            })
            .collect();
        Self { model, psi }
    }

    pub fn to_fronthaul(&self, scenario: &Scenario) -> FronthaulAllocation {
        let w = scenario.sc_bandwidth();
        FronthaulAllocation::continuous(
            self.psi
                .iter()
                .map(|row| row.iter().map(|&v| w * exponent_from_psi(self.model, v)).collect())
                .collect(),
        )
    }

    /// Every RRH splits its capacity equally over the subcarriers.
    pub fn equal_split(scenario: &Scenario, model: QuantModel) -> Self {
        let psi = (0..scenario.num_rrhs)
            .map(|m| {
                let v = if rrh_active(scenario, model, m) {
                    psi_from_exponent(model, scenario.fronthaul_cap[m] / scenario.bandwidth_hz)
                } else {
                    psi_from_exponent(model, 0.0)
                };
                vec![v; scenario.num_subcarriers]
            })
            .collect();
        Self { model, psi }
    }

    /// True fronthaul load of RRH `m` in bit/s.
    pub fn load(&self, scenario: &Scenario, m: usize) -> f64 {
        scenario.sc_bandwidth() * self.psi[m].iter().map(|&v| exponent_from_psi(self.model, v)).sum::<f64>()
    }

    /// Load of RRH `m` under the first-order expansion around `at`, which
    /// bounds [`Self::load`] from above.
    pub fn linearized_load(&self, scenario: &Scenario, m: usize, at: &PsiAllocation) -> f64 {
        let nats_total: f64 = self.psi[m]
            .iter()
            .zip(&at.psi[m])
            .map(|(&v, &v0)| nats(self.model, v0) + (v - v0) * nats_slope(self.model, v0))
            .sum();
        scenario.sc_bandwidth() * nats_total / LN_2
    }

    pub(crate) fn check_shape(&self, scenario: &Scenario) -> Result<()> {
        if self.psi.len() != scenario.num_rrhs || self.psi.iter().any(|r| r.len() != scenario.num_subcarriers) {
            return Err(Error::Shape(format!(
                "psi must have shape [{}][{}]",
                scenario.num_rrhs, scenario.num_subcarriers
            )));
        }
        if let Some(&v) = self.psi.iter().flatten().find(|&&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(Error::NegativeInput { what: "psi", value: v });
        }
        Ok(())
    }

    /// First RRH whose true load exceeds its capacity.
    pub(crate) fn within_capacity(&self, scenario: &Scenario) -> Option<usize> {
        (0..scenario.num_rrhs).find(|&m| {
            let cap = scenario.fronthaul_cap[m];
            self.load(scenario, m) > cap + FEASIBILITY_TOL * cap.max(scenario.sc_bandwidth())
        })
    }
}

/// Sum rate in bit/s for per-subcarrier powers `p` and fronthaul `psi`.
pub(crate) fn objective(scenario: &Scenario, p: &[f64], psi: &PsiAllocation) -> f64 {
    let w = scenario.sc_bandwidth();
    (0..scenario.num_subcarriers)
        .map(|n| {
            let gamma: f64 = (0..scenario.num_rrhs)
                .map(|m| rrh_term(psi.model, scenario.gain(m, n) * p[n], scenario.noise_var[m][n], psi.psi[m][n]))
                .sum();
            w * gamma.ln_1p() / LN_2
        })
        .sum()
}

#[cfg(test)]
pub(crate) mod test_support {
    use rand::Rng;

    use crate::model::Scenario;

    /// `k` users with `per_user` subcarriers each, `m` RRHs, unit-scale
    /// gains spread over three decades.
    pub fn random_network(rng: &mut impl Rng, m: usize, k: usize, per_user: usize) -> Scenario {
        let n = k * per_user;
        let b = 1e6;
        Scenario {
            bandwidth_hz: b,
            num_subcarriers: n,
            num_rrhs: m,
            num_users: k,
            channel_gain_sq: (0..m)
                .map(|_| {
                    (0..k)
                        .map(|_| (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect())
                        .collect()
                })
                .collect(),
            noise_var: (0..m)
                .map(|_| (0..n).map(|_| rng.random_range(0.5..2.0) * 1e-3).collect())
                .collect(),
            power_budget: (0..k).map(|_| rng.random_range(0.1..2.0)).collect(),
            fronthaul_cap: (0..m).map(|_| rng.random_range(0.2..12.0) * b).collect(),
            sc_owner: (0..n).map(|i| i / per_user).collect(),
            distance_m: None,
        }
    }
}
