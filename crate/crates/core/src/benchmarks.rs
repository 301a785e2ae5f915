//! Comparison schemes that fix one resource and optimize (or fix) the other,
//! plus conventional OFDMA where each user is decoded at a single RRH.
//!
//! Uniform-quantizer fronthaul that comes out of a continuous optimization
//! is rounded onto the bit grid with the same threshold rule as the joint
//! solvers; fixed equal splits are rounded before the powers are chosen.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{sum_rate, FronthaulAllocation, PowerAllocation, QuantModel, Scenario, SolveReport};
use crate::multi::{fronthaul_given_power_multi, power_subproblem, PsiAllocation};
use crate::options::SolverOptions;
use crate::rounding::round_fronthaul;
use crate::single_link::{
    fronthaul_given_power, fronthaul_given_power_uniform, power_given_fronthaul, power_given_fronthaul_uniform,
    water_fill,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BenchmarkScheme {
    EqualPower,
    WaterFillingPower,
    EqualFronthaul,
    EqualBoth,
    ConventionalOfdma,
}

impl BenchmarkScheme {
    pub const ALL: [BenchmarkScheme; 5] = [
        BenchmarkScheme::EqualPower,
        BenchmarkScheme::WaterFillingPower,
        BenchmarkScheme::EqualFronthaul,
        BenchmarkScheme::EqualBoth,
        BenchmarkScheme::ConventionalOfdma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BenchmarkScheme::EqualPower => "equal-power",
            BenchmarkScheme::WaterFillingPower => "water-filling-power",
            BenchmarkScheme::EqualFronthaul => "equal-fronthaul",
            BenchmarkScheme::EqualBoth => "equal-both",
            BenchmarkScheme::ConventionalOfdma => "conventional-ofdma",
        }
    }
}

impl fmt::Display for BenchmarkScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchmarkScheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BenchmarkScheme::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| Error::Unknown {
                what: "benchmark scheme",
                name: s.to_string(),
            })
    }
}

/// How conventional OFDMA picks the serving RRH of each user.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Association {
    /// Largest mean power gain over the user's subcarriers.
    #[default]
    MeanGain,
    /// Smallest recorded distance; needs `Scenario::distance_m`.
    Distance,
}

/// Runs a scheme; conventional OFDMA serves each user from its nearest RRH
/// when distances are recorded and from its strongest one otherwise.
pub fn run_benchmark(
    scheme: BenchmarkScheme,
    scenario: &Scenario,
    model: QuantModel,
    opts: &SolverOptions,
) -> Result<SolveReport> {
    let association = if scenario.distance_m.is_some() {
        Association::Distance
    } else {
        Association::MeanGain
    };
    run_benchmark_with(scheme, scenario, model, opts, association)
}

pub fn run_benchmark_with(
    scheme: BenchmarkScheme,
    scenario: &Scenario,
    model: QuantModel,
    opts: &SolverOptions,
    association: Association,
) -> Result<SolveReport> {
    scenario.validate()?;
    opts.validate()?;
    let mut notes = Vec::new();
    let (power, fronthaul) = match scheme {
        BenchmarkScheme::EqualPower | BenchmarkScheme::WaterFillingPower => {
            let power = if scheme == BenchmarkScheme::EqualPower {
                equal_power(scenario)
            } else {
                mrc_water_filling(scenario)?
            };
            let t = fronthaul_for_power(scenario, model, &power, opts)?;
            let fronthaul = match model {
                QuantModel::GaussianTestChannel => t,
                QuantModel::UniformScalar => {
                    notes.push("fronthaul optimized with continuous rates, then rounded to the bit grid".into());
                    round_fronthaul(scenario, &t.t)
                }
            };
            (power, fronthaul)
        }
        BenchmarkScheme::EqualFronthaul => {
            let fronthaul = equal_fronthaul(scenario, model);
            (power_for_fronthaul(scenario, model, &fronthaul)?, fronthaul)
        }
        BenchmarkScheme::EqualBoth => (equal_power(scenario), equal_fronthaul(scenario, model)),
        BenchmarkScheme::ConventionalOfdma => return conventional_ofdma(scenario, model, association),
    };
    let objective = sum_rate(model, scenario, &power, &fronthaul)?.total;
    Ok(SolveReport {
        solver: scheme.name().to_string(),
        power,
        fronthaul,
        objective_bps: objective,
        objective_trace: vec![objective],
        iterations: 1,
        converged: true,
        relaxed_objective_bps: None,
        notes,
    })
}

pub(crate) fn equal_power(scenario: &Scenario) -> PowerAllocation {
    let mut power = PowerAllocation::zeros(scenario);
    for k in 0..scenario.num_users {
        let scs = scenario.subcarriers_of(k);
        for &n in &scs {
            power.p[k][n] = scenario.power_budget[k] / scs.len() as f64;
        }
    }
    power
}

/// Water-filling of every user over its subcarriers against the combined
/// wireless SNR `sum_m |h|^2 / sigma^2`, ignoring the fronthaul.
pub(crate) fn mrc_water_filling(scenario: &Scenario) -> Result<PowerAllocation> {
    water_fill_users(scenario, |n| {
        (0..scenario.num_rrhs)
            .map(|m| cnr(scenario.gain(m, n), scenario.noise_var[m][n]))
            .sum()
    })
}

fn cnr(gain: f64, noise: f64) -> f64 {
    if gain <= 0.0 {
        0.0
    } else if noise <= 0.0 {
        f64::INFINITY
    } else {
        gain / noise
    }
}

fn water_fill_users(scenario: &Scenario, cnr_of: impl Fn(usize) -> f64) -> Result<PowerAllocation> {
    let mut power = PowerAllocation::zeros(scenario);
    for k in 0..scenario.num_users {
        let scs = scenario.subcarriers_of(k);
        let floors: Vec<f64> = scs.iter().map(|&n| 1.0 / cnr_of(n)).collect();
        if floors.iter().all(|f| f.is_infinite()) {
            continue;
        }
        let wf = water_fill(&floors, scenario.power_budget[k])?;
        for (&n, &p) in scs.iter().zip(&wf.power) {
            power.p[k][n] = p;
        }
    }
    Ok(power)
}

fn equal_fronthaul(scenario: &Scenario, model: QuantModel) -> FronthaulAllocation {
    let n = scenario.num_subcarriers;
    let t: Vec<Vec<f64>> = scenario.fronthaul_cap.iter().map(|&cap| vec![cap / n as f64; n]).collect();
    match model {
        QuantModel::GaussianTestChannel => FronthaulAllocation::continuous(t),
        QuantModel::UniformScalar => round_fronthaul(scenario, &t),
    }
}

fn fronthaul_for_power(
    scenario: &Scenario,
    model: QuantModel,
    power: &PowerAllocation,
    opts: &SolverOptions,
) -> Result<FronthaulAllocation> {
    if scenario.is_single_link() {
        let p = power.per_sc(scenario);
        let t = match model {
            QuantModel::GaussianTestChannel => fronthaul_given_power(scenario, &p)?.t,
            QuantModel::UniformScalar => fronthaul_given_power_uniform(scenario, &p)?.t,
        };
        return Ok(FronthaulAllocation::continuous(vec![t]));
    }
    Ok(fronthaul_given_power_multi(scenario, model, power, opts)?.to_fronthaul(scenario))
}

fn power_for_fronthaul(
    scenario: &Scenario,
    model: QuantModel,
    fronthaul: &FronthaulAllocation,
) -> Result<PowerAllocation> {
    if scenario.is_single_link() {
        let t = &fronthaul.t[0];
        let p = match model {
            QuantModel::GaussianTestChannel => power_given_fronthaul(scenario, t)?.power,
            QuantModel::UniformScalar => power_given_fronthaul_uniform(scenario, t)?.power,
        };
        return Ok(PowerAllocation::from_per_sc(scenario, &p));
    }
    let psi = PsiAllocation::from_fronthaul(scenario, model, fronthaul);
    Ok(power_subproblem(scenario, &psi)?.power)
}

/// Serving RRH of every user.
pub fn associate(scenario: &Scenario, association: Association) -> Result<Vec<usize>> {
    scenario.validate()?;
    (0..scenario.num_users)
        .map(|k| {
            let score = |m: usize| -> Result<f64> {
                match association {
                    Association::MeanGain => {
                        let scs = scenario.subcarriers_of(k);
                        let total: f64 = scs.iter().map(|&n| scenario.channel_gain_sq[m][k][n]).sum();
                        Ok(total / scs.len().max(1) as f64)
                    }
                    Association::Distance => match &scenario.distance_m {
                        Some(d) => Ok(-d[m][k]),
                        None => Err(Error::Precondition(
                            "distance association needs recorded distances".into(),
                        )),
                    },
                }
            };
            let mut best = (0, score(0)?);
            for m in 1..scenario.num_rrhs {
                let s = score(m)?;
                if s > best.1 {
                    best = (m, s);
                }
            }
            Ok(best.0)
        })
        .collect()
}

fn conventional_ofdma(scenario: &Scenario, model: QuantModel, association: Association) -> Result<SolveReport> {
    let serving = associate(scenario, association)?;
    let link_cnr = |n: usize| {
        let m = serving[scenario.owner(n)];
        cnr(scenario.gain(m, n), scenario.noise_var[m][n])
    };
    let power = water_fill_users(scenario, link_cnr)?;
    let w = scenario.sc_bandwidth();
    let objective: f64 = (0..scenario.num_subcarriers)
        .map(|n| {
            let c = link_cnr(n);
            let p = power.on_sc(scenario, n);
            if c == 0.0 || p == 0.0 {
                0.0
            } else {
                w * (c * p).ln_1p() / std::f64::consts::LN_2
            }
        })
        .sum();
    let fronthaul = match model {
        QuantModel::GaussianTestChannel => FronthaulAllocation::zeros(scenario),
        QuantModel::UniformScalar => FronthaulAllocation::from_bits(
            scenario,
            vec![vec![0; scenario.num_subcarriers]; scenario.num_rrhs],
        ),
    };
    Ok(SolveReport {
        solver: BenchmarkScheme::ConventionalOfdma.name().to_string(),
        power,
        fronthaul,
        objective_bps: objective,
        objective_trace: vec![objective],
        iterations: 1,
        converged: true,
        relaxed_objective_bps: None,
        notes: vec![format!(
            "users decoded locally at rrhs {serving:?}; fronthaul unused and rate independent of capacity"
        )],
    })
}
