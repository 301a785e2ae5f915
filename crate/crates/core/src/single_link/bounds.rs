//! Cut-set upper bound and the constructive allocations that provably come
//! within 1 bit/s/Hz (Gaussian) and 2 bit/s/Hz (uniform) of it.
//!
//! Both constructions fix the quantization noise to a multiple of the
//! thermal noise: `q_n = sigma_n^2` costs `(B/N) log2(2 + nu_n)` under the
//! Gaussian test channel and `q_n = 3 sigma_n^2` costs `(B/N) log2(1 + nu_n)`
//! under the uniform quantizer. The common power `p` maximizes
//! `sum log2(1 + nu_n / 2)` subject to the fronthaul budget
//! `(1/N) sum log2(1 + nu_n / 2) + 1 <= T / B`.

use std::f64::consts::LN_2;

use crate::error::Result;
use crate::model::{FronthaulAllocation, PowerAllocation, QuantModel, Scenario, SolveReport};

use super::water_filling::{link_water_filling, water_fill};
use super::Link;

const BUDGET_ITERS: usize = 200;

/// Cut-set bound in bit/s/Hz: the smaller of the water-filling spectral
/// efficiency and `T / B`.
pub fn cutset_bound(scenario: &Scenario) -> Result<f64> {
    let link = Link::from_scenario(scenario)?;
    let fronthaul = link.fronthaul_cap / link.bandwidth_hz;
    if fronthaul == 0.0 {
        return Ok(0.0);
    }
    let wf = link_water_filling(&link)?;
    Ok((link.wireless_rate(&wf.power) / link.bandwidth_hz).min(fronthaul))
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapReference {
    pub gaussian: SolveReport,
    pub uniform: SolveReport,
    /// Set when `T <= B`, where no power satisfies the budget constraint
    /// with a positive rate and both references are the zero allocation.
    pub degenerate: bool,
}

/// `(1/N) sum log2(1 + nu_n / 2)` for the power `p`.
fn half_snr_efficiency(link: &Link, p: &[f64]) -> f64 {
    (0..link.len())
        .map(|n| (0.5 * link.cnr(n) * p[n]).ln_1p() / LN_2)
        .sum::<f64>()
        / link.len() as f64
}

/// Power of the reference constructions: water-filling on the halved
/// channel, shrunk until the fronthaul budget holds.
fn reference_power(link: &Link) -> Result<(Vec<f64>, bool)> {
    let target = link.fronthaul_cap / link.bandwidth_hz - 1.0;
    if target <= 0.0 {
        return Ok((vec![0.0; link.len()], true));
    }
    let floors: Vec<f64> = (0..link.len()).map(|n| 2.0 * link.inv_cnr(n)).collect();
    let full = water_fill(&floors, link.power_budget)?;
    if half_snr_efficiency(link, &full.power) <= target {
        return Ok((full.power, false));
    }
    // The efficiency grows with the budget, so bisect on it and keep the
    // feasible end.
    let (mut lo, mut hi) = (0.0, link.power_budget);
    let mut best = vec![0.0; link.len()];
    for _ in 0..BUDGET_ITERS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let p = water_fill(&floors, mid)?.power;
        if half_snr_efficiency(link, &p) <= target {
            lo = mid;
            best = p;
        } else {
            hi = mid;
        }
    }
    Ok((best, false))
}

/// Builds both reference allocations and evaluates them.
pub fn gap_reference_solutions(scenario: &Scenario) -> Result<GapReference> {
    let link = Link::from_scenario(scenario)?;
    let (p, degenerate) = reference_power(&link)?;
    let w = link.sc_bandwidth();
    let nu = link.snr(&p);
    let t_gauss: Vec<f64> = nu
        .iter()
        .map(|&v| if v > 0.0 { w * (2.0 + v).log2() } else { 0.0 })
        .collect();
    let t_unif: Vec<f64> = nu.iter().map(|&v| w * v.ln_1p() / LN_2).collect();
    let report = |name: &str, model: QuantModel, t: Vec<f64>| {
        let objective = link.sum_rate(model, &p, &t);
        let mut notes = Vec::new();
        if degenerate {
            notes.push("fronthaul capacity does not exceed the bandwidth; zero allocation".to_string());
        }
        SolveReport {
            solver: name.to_string(),
            power: PowerAllocation::from_per_sc(scenario, &p),
            fronthaul: FronthaulAllocation::continuous(vec![t]),
            objective_bps: objective,
            objective_trace: vec![objective],
            iterations: 0,
            converged: true,
            relaxed_objective_bps: None,
            notes,
        }
    };
    Ok(GapReference {
        gaussian: report("gap-reference-gaussian", QuantModel::GaussianTestChannel, t_gauss),
        uniform: report("gap-reference-uniform", QuantModel::UniformScalar, t_unif),
        degenerate,
    })
}
