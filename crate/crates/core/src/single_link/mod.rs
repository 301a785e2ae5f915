//! Solvers for one user served by one RRH.
//!
//! With a single link the end-to-end rate of subcarrier `n` collapses to
//!
//! ```text
//! (B/N) log2((1 + nu_n) / (1 + kappa_n nu_n)),   nu_n = |h_n|^2 p_n / sigma_n^2
//! ```
//!
//! where `kappa_n` depends only on the fronthaul exponent `x_n = N t_n / B`:
//! `2^-x` for the Gaussian test channel and `3u / (1 + 3u)` with `u = 2^-x`
//! for the uniform quantizer. `kappa = 1` (no rate) when `t_n = 0`.

mod alternating;
mod bounds;
mod fronthaul;
mod power;
mod water_filling;

pub use alternating::{algorithm_one, round_bits, solve_p2_noint_single, solve_p2_single, WarmStart};
pub use bounds::{cutset_bound, gap_reference_solutions, GapReference};
pub use fronthaul::{fronthaul_given_power, fronthaul_given_power_uniform, FronthaulStep};
pub(crate) use fronthaul::TRICKLE;
pub use power::{power_given_fronthaul, power_given_fronthaul_uniform, PowerStep};
pub use water_filling::{water_fill, water_filling, WaterFill};

use std::f64::consts::LN_2;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{QuantModel, Scenario};

/// Dual variables of the two budget constraints.
///
/// `lambda` prices power in the normalized objective `(1/N) sum log2(.)`
/// and `beta` prices fronthaul rate in bit/s, so `0 < beta < 1/B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualState {
    pub lambda: f64,
    pub beta: f64,
    pub lambda_bracket: [f64; 2],
    pub beta_bracket: [f64; 2],
}

/// Per-subcarrier view of a 1x1 scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub bandwidth_hz: f64,
    pub gain: Vec<f64>,
    pub noise: Vec<f64>,
    pub power_budget: f64,
    pub fronthaul_cap: f64,
}

impl Link {
    pub fn from_scenario(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        if !scenario.is_single_link() {
            return Err(Error::Precondition(format!(
                "single-link solver needs K = M = 1, got K = {}, M = {}",
                scenario.num_users, scenario.num_rrhs
            )));
        }
        Ok(Self {
            bandwidth_hz: scenario.bandwidth_hz,
            gain: scenario.channel_gain_sq[0][0].clone(),
            noise: scenario.noise_var[0].clone(),
            power_budget: scenario.power_budget[0],
            fronthaul_cap: scenario.fronthaul_cap[0],
        })
    }

    pub fn len(&self) -> usize {
        self.gain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gain.is_empty()
    }

    pub fn sc_bandwidth(&self) -> f64 {
        self.bandwidth_hz / self.len() as f64
    }

    /// Channel-to-noise ratio `|h_n|^2 / sigma_n^2`; infinite for a
    /// noiseless subcarrier with a nonzero gain.
    pub fn cnr(&self, n: usize) -> f64 {
        let (g, s) = (self.gain[n], self.noise[n]);
        if g == 0.0 {
            0.0
        } else {
            g / s
        }
    }

    /// `sigma_n^2 / |h_n|^2`, infinite on dead subcarriers.
    pub fn inv_cnr(&self, n: usize) -> f64 {
        let (g, s) = (self.gain[n], self.noise[n]);
        if g == 0.0 {
            f64::INFINITY
        } else {
            s / g
        }
    }

    pub fn snr(&self, p: &[f64]) -> Vec<f64> {
        (0..self.len()).map(|n| self.cnr(n) * p[n]).collect()
    }

    /// Fronthaul exponents `N t / B`.
    pub fn exponents(&self, t: &[f64]) -> Vec<f64> {
        let w = self.sc_bandwidth();
        t.iter().map(|&t| t / w).collect()
    }

    /// Per-subcarrier rates in bit/s.
    pub fn rates(&self, model: QuantModel, p: &[f64], t: &[f64]) -> Vec<f64> {
        let w = self.sc_bandwidth();
        (0..self.len())
            .map(|n| {
                let nu = self.cnr(n) * p[n];
                let x = t[n] / w;
                w * sc_rate_nats(nu, Kappa::new(model, x)) / LN_2
            })
            .collect()
    }

    pub fn sum_rate(&self, model: QuantModel, p: &[f64], t: &[f64]) -> f64 {
        self.rates(model, p, t).iter().sum()
    }

    /// Capacity of the wireless hop alone under power `p`, in bit/s.
    pub fn wireless_rate(&self, p: &[f64]) -> f64 {
        let w = self.sc_bandwidth();
        (0..self.len())
            .map(|n| w * (self.cnr(n) * p[n]).ln_1p() / LN_2)
            .sum()
    }
}

/// `kappa` together with `1 - kappa`, the latter computed without
/// cancellation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Kappa {
    pub k: f64,
    pub one_minus: f64,
}

impl Kappa {
    pub const OFF: Kappa = Kappa { k: 1.0, one_minus: 0.0 };

    pub fn new(model: QuantModel, x: f64) -> Kappa {
        if !(x > 0.0) {
            return Kappa::OFF;
        }
        let u = (-x).exp2();
        match model {
            QuantModel::GaussianTestChannel => Kappa {
                k: u,
                one_minus: -(-x * LN_2).exp_m1(),
            },
            QuantModel::UniformScalar => Kappa {
                k: 3.0 * u / (1.0 + 3.0 * u),
                one_minus: 1.0 / (1.0 + 3.0 * u),
            },
        }
    }

    pub fn is_off(&self) -> bool {
        self.one_minus <= 0.0
    }
}

/// `ln((1 + nu) / (1 + kappa nu))`.
pub(crate) fn sc_rate_nats(nu: f64, kappa: Kappa) -> f64 {
    if nu <= 0.0 || kappa.is_off() {
        return 0.0;
    }
    if nu.is_infinite() {
        return -kappa.k.ln();
    }
    nu.ln_1p() - (kappa.k * nu).ln_1p()
}

#[cfg(test)]
pub(crate) mod test_support {
    use crate::model::Scenario;

    pub fn link_scenario(bandwidth_hz: f64, gain: &[f64], noise: &[f64], power: f64, cap: f64) -> Scenario {
        let n = gain.len();
        Scenario {
            bandwidth_hz,
            num_subcarriers: n,
            num_rrhs: 1,
            num_users: 1,
            channel_gain_sq: vec![vec![gain.to_vec()]],
            noise_var: vec![noise.to_vec()],
            power_budget: vec![power],
            fronthaul_cap: vec![cap],
            sc_owner: vec![0; n],
            distance_m: None,
        }
    }

    /// The four-subcarrier link used for the threshold and allocation
    /// examples: 100 MHz, -169 dBm/Hz with a 7 dB noise figure, 23 dBm.
    pub fn fig3(cap: f64) -> Scenario {
        let b = 100e6;
        let noise = 10f64.powf((-169.0 + 7.0) / 10.0) / 1000.0 * b / 4.0;
        link_scenario(
            b,
            &[1.276e-9, 6.12e-10, 2.9e-11, 1.8e-11],
            &[noise; 4],
            10f64.powf(2.3) / 1000.0,
            cap,
        )
    }

    /// Random link with gains spread over three decades.
    pub fn random_link(rng: &mut impl rand::Rng, n: usize) -> Scenario {
        let gain: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..0.0))).collect();
        let noise: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0) * 1e-3).collect();
        let p = rng.random_range(0.1..2.0);
        let b = 1e6;
        let cap = rng.random_range(0.2..12.0) * b;
        link_scenario(b, &gain, &noise, p, cap)
    }
}
