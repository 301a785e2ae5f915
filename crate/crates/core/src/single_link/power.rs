//! Optimal power for fixed fronthaul rates.
//!
//! Writing `c = sigma^2 / |h|^2` and the water level `r = 1 / (lambda N ln 2)`,
//! stationarity of `ln((1 + p/c) / (1 + kappa p/c)) - p / r` reduces to
//!
//! ```text
//! kappa p^2 + c (1 + kappa) p + c (c - (1 - kappa) r) = 0,
//! ```
//!
//! whose positive root exists iff `1/c > lambda N ln 2 / (1 - kappa)`, the
//! activation threshold `f_n`. The level is bisected until the budget is met.

use std::f64::consts::LN_2;

use crate::error::Result;
use crate::model::{QuantModel, Scenario};

use super::{Kappa, Link};

const LEVEL_ITERS: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct PowerStep {
    pub power: Vec<f64>,
    /// Power dual `lambda`, zero when no subcarrier can be used.
    pub lambda: f64,
    pub lambda_bracket: [f64; 2],
    /// Activation thresholds `f_n` on `|h_n|^2 / sigma_n^2`; infinite where
    /// the subcarrier carries no fronthaul.
    pub thresholds: Vec<f64>,
    /// Set when no subcarrier can carry rate, so the power is all zero.
    pub all_off: bool,
}

/// Optimal power under the Gaussian test channel for rates `t` (bit/s).
pub fn power_given_fronthaul(scenario: &Scenario, t: &[f64]) -> Result<PowerStep> {
    let link = Link::from_scenario(scenario)?;
    check_rates(&link, t)?;
    Ok(link_power_step(&link, QuantModel::GaussianTestChannel, t))
}

/// Optimal power under the uniform quantizer for continuous rates `t`.
pub fn power_given_fronthaul_uniform(scenario: &Scenario, t: &[f64]) -> Result<PowerStep> {
    let link = Link::from_scenario(scenario)?;
    check_rates(&link, t)?;
    Ok(link_power_step(&link, QuantModel::UniformScalar, t))
}

pub(crate) fn check_rates(link: &Link, t: &[f64]) -> Result<()> {
    if t.len() != link.len() {
        return Err(crate::Error::Shape(format!(
            "expected {} per-subcarrier values, got {}",
            link.len(),
            t.len()
        )));
    }
    if let Some(&v) = t.iter().find(|&&v| v < 0.0 || v.is_nan()) {
        return Err(crate::Error::NegativeInput {
            what: "per-subcarrier value",
            value: v,
        });
    }
    Ok(())
}

pub(crate) fn link_power_step(link: &Link, model: QuantModel, t: &[f64]) -> PowerStep {
    let kappas: Vec<Kappa> = link.exponents(t).into_iter().map(|x| Kappa::new(model, x)).collect();
    let floors: Vec<f64> = (0..link.len()).map(|n| link.inv_cnr(n)).collect();
    solve_levels(&floors, &kappas, link.power_budget)
}

fn power_at_level(c: f64, kappa: Kappa, r: f64) -> f64 {
    if !c.is_finite() || kappa.is_off() {
        return 0.0;
    }
    let cq = c * (c - kappa.one_minus * r);
    if cq >= 0.0 {
        return 0.0;
    }
    let bq = c * (1.0 + kappa.k);
    let disc = (bq * bq - 4.0 * kappa.k * cq).sqrt();
    -2.0 * cq / (bq + disc)
}

pub(crate) fn solve_levels(floors: &[f64], kappas: &[Kappa], budget: f64) -> PowerStep {
    let n = floors.len();
    let off = || PowerStep {
        power: vec![0.0; n],
        lambda: 0.0,
        lambda_bracket: [0.0, 0.0],
        thresholds: vec![f64::INFINITY; n],
        all_off: true,
    };
    // Level at which the first subcarrier switches on.
    let lo0 = floors
        .iter()
        .zip(kappas)
        .filter(|(c, k)| c.is_finite() && !k.is_off())
        .map(|(c, k)| c / k.one_minus)
        .fold(f64::INFINITY, f64::min);
    if !lo0.is_finite() {
        return off();
    }
    let total = |r: f64| -> f64 {
        floors
            .iter()
            .zip(kappas)
            .map(|(&c, &k)| power_at_level(c, k, r))
            .sum()
    };
    let (r, r_hi) = if budget <= 0.0 {
        (lo0, lo0)
    } else {
        let (mut lo, mut hi) = (lo0, 2.0 * lo0 + budget);
        while total(hi) < budget {
            lo = hi;
            hi *= 2.0;
        }
        for _ in 0..LEVEL_ITERS {
            let mid = (lo * hi).sqrt();
            if mid <= lo || mid >= hi {
                break;
            }
            if total(mid) > budget {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        // Keep the feasible side; the rescale below spends the remainder.
        (lo, hi)
    };
    let mut power: Vec<f64> = floors
        .iter()
        .zip(kappas)
        .map(|(&c, &k)| power_at_level(c, k, r))
        .collect();
    let used: f64 = power.iter().sum();
    if used > 0.0 && budget > 0.0 {
        let scale = budget / used;
        if scale < 1.0 + 1e-6 {
            power.iter_mut().for_each(|p| *p *= scale);
        }
    }
    let lambda = 1.0 / (r * n as f64 * LN_2);
    let thresholds = kappas
        .iter()
        .map(|k| {
            if k.is_off() {
                f64::INFINITY
            } else {
                lambda * n as f64 * LN_2 / k.one_minus
            }
        })
        .collect();
    PowerStep {
        power,
        lambda,
        lambda_bracket: [1.0 / (r_hi * n as f64 * LN_2), lambda],
        thresholds,
        all_off: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::single_link::test_support::{fig3, link_scenario, random_link};
    use crate::single_link::water_filling;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn huge_fronthaul_reduces_to_water_filling() {
        let s = fig3(1e12);
        let wf = water_filling(&s).unwrap();
        let step = power_given_fronthaul(&s, &[1e11; 4]).unwrap();
        for (a, b) in step.power.iter().zip(&wf.p[0]) {
            assert!((a - b).abs() <= 1e-6 * b.max(1e-12), "{a} vs {b}");
        }
    }

    #[test]
    fn no_fronthaul_means_no_power() {
        let s = fig3(0.0);
        let step = power_given_fronthaul(&s, &[0.0; 4]).unwrap();
        assert!(step.all_off);
        assert!(step.power.iter().all(|&p| p == 0.0));
    }

    #[test]
    fn threshold_structure_and_tight_budget() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = random_link(&mut rng, 8);
            let link = Link::from_scenario(&s).unwrap();
            let t: Vec<f64> = (0..8).map(|i| if i == 3 { 0.0 } else { rng_rate(i) * link.sc_bandwidth() }).collect();
            let step = power_given_fronthaul(&s, &t).unwrap();
            let total: f64 = step.power.iter().sum();
            assert!((total - link.power_budget).abs() <= 1e-8 * link.power_budget);
            assert_eq!(step.power[3], 0.0);
            for n in 0..8 {
                let cnr = link.cnr(n);
                let f = step.thresholds[n];
                // Points within a hair of the threshold may go either way.
                if (cnr - f).abs() > 1e-9 * f {
                    assert_eq!(step.power[n] > 0.0, cnr > f, "sc {n}: cnr {cnr}, f {f}");
                }
            }
        }
    }

    fn rng_rate(i: usize) -> f64 {
        0.3 + 1.7 * i as f64
    }

    #[test]
    fn beats_perturbations() {
        let s = link_scenario(4.0, &[1.0, 0.5, 0.2, 0.05], &[0.1; 4], 2.0, 8.0);
        let t = [3.0, 2.0, 2.0, 1.0];
        let link = Link::from_scenario(&s).unwrap();
        for model in [QuantModel::GaussianTestChannel, QuantModel::UniformScalar] {
            let p = link_power_step(&link, model, &t).power;
            let best = link.sum_rate(model, &p, &t);
            for i in 0..4 {
                for j in 0..4 {
                    if i == j {
                        continue;
                    }
                    let mut q = p.clone();
                    let d = 0.01f64.min(q[i]);
                    q[i] -= d;
                    q[j] += d;
                    assert!(link.sum_rate(model, &q, &t) <= best * (1.0 + 1e-12));
                }
            }
        }
    }
}
