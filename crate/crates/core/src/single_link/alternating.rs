//! Alternating power / fronthaul optimization and integer rounding for the
//! single link.

use crate::error::Result;
use crate::model::{FronthaulAllocation, PowerAllocation, QuantModel, Scenario, SolveReport};
use crate::options::SolverOptions;
use crate::rounding::round_fronthaul;

use super::bounds::gap_reference_solutions;
use super::fronthaul::link_fronthaul_step;
use super::power::{check_rates, link_power_step};
use super::Link;

/// Starting point for the uniform-model alternation.
#[derive(Debug, Clone, PartialEq)]
pub struct WarmStart {
    pub power: Vec<f64>,
    pub fronthaul: Vec<f64>,
}

fn report(
    solver: &str,
    scenario: &Scenario,
    p: &[f64],
    fronthaul: FronthaulAllocation,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
) -> SolveReport {
    SolveReport {
        solver: solver.to_string(),
        power: PowerAllocation::from_per_sc(scenario, p),
        fronthaul,
        objective_bps: *trace.last().unwrap_or(&0.0),
        objective_trace: trace,
        iterations,
        converged,
        relaxed_objective_bps: None,
        notes: Vec::new(),
    }
}

/// Alternates the closed-form power and fronthaul steps under the Gaussian
/// test channel, starting from an equal split of the fronthaul capacity.
pub fn algorithm_one(scenario: &Scenario, opts: &SolverOptions) -> Result<SolveReport> {
    opts.validate()?;
    let link = Link::from_scenario(scenario)?;
    let model = QuantModel::GaussianTestChannel;
    let mut t = vec![link.fronthaul_cap / link.len() as f64; link.len()];
    let mut p = vec![0.0; link.len()];
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        p = link_power_step(&link, model, &t).power;
        t = link_fronthaul_step(&link, model, &p).t;
        let r = link.sum_rate(model, &p, &t);
        let done = trace.last().is_some_and(|&prev| opts.converged(prev, r));
        trace.push(r);
        if done {
            converged = true;
            break;
        }
    }
    let iterations = trace.len();
    Ok(report(
        "algorithm-one",
        scenario,
        &p,
        FronthaulAllocation::continuous(vec![t]),
        trace,
        iterations,
        converged,
    ))
}

struct Run {
    p: Vec<f64>,
    t: Vec<f64>,
    trace: Vec<f64>,
    iterations: usize,
    converged: bool,
}

/// Safeguarded alternation: a step is kept only if it does not lower the
/// objective, so the trace never decreases.
fn alternate_uniform(link: &Link, opts: &SolverOptions, start: WarmStart) -> Run {
    let model = QuantModel::UniformScalar;
    let (mut p, mut t) = (start.power, start.fronthaul);
    let mut cur = link.sum_rate(model, &p, &t);
    let mut trace = vec![cur];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let prev = cur;
        let p_new = link_power_step(link, model, &t).power;
        let r = link.sum_rate(model, &p_new, &t);
        if r >= cur {
            p = p_new;
            cur = r;
        }
        let t_new = link_fronthaul_step(link, model, &p).t;
        let r = link.sum_rate(model, &p, &t_new);
        if r >= cur {
            t = t_new;
            cur = r;
        }
        trace.push(cur);
        if cur > 0.0 && opts.converged(prev, cur) {
            converged = true;
            break;
        }
    }
    Run {
        p,
        t,
        trace,
        iterations,
        converged,
    }
}

/// Alternating optimization of the uniform-quantizer problem with
/// continuous rates. Without a warm start it runs from the equal fronthaul
/// split and from the gap reference construction and keeps the better end
/// point, so the result is never worse than the reference.
pub fn solve_p2_noint_single(
    scenario: &Scenario,
    opts: &SolverOptions,
    warm_start: Option<WarmStart>,
) -> Result<SolveReport> {
    opts.validate()?;
    let link = Link::from_scenario(scenario)?;
    let starts = match warm_start {
        Some(w) => {
            check_rates(&link, &w.power)?;
            check_rates(&link, &w.fronthaul)?;
            vec![w]
        }
        None => {
            let r = gap_reference_solutions(scenario)?.uniform;
            vec![
                WarmStart {
                    power: vec![0.0; link.len()],
                    fronthaul: vec![link.fronthaul_cap / link.len() as f64; link.len()],
                },
                WarmStart {
                    power: r.power.per_sc(scenario),
                    fronthaul: r.fronthaul.t[0].clone(),
                },
            ]
        }
    };
    let best = starts
        .into_iter()
        .map(|w| alternate_uniform(&link, opts, w))
        .reduce(|a, b| if b.trace.last() > a.trace.last() { b } else { a })
        .expect("at least one start");
    Ok(report(
        "p2-noint-single",
        scenario,
        &best.p,
        FronthaulAllocation::continuous(vec![best.t]),
        best.trace,
        best.iterations,
        best.converged,
    ))
}

/// Rounds continuous rates onto the `2B/N` grid within the capacity using
/// the threshold rule. The power is not used by the rule itself and is
/// accepted only to check shapes.
pub fn round_bits(
    scenario: &Scenario,
    continuous: &FronthaulAllocation,
    power: &PowerAllocation,
) -> Result<FronthaulAllocation> {
    let link = Link::from_scenario(scenario)?;
    check_rates(&link, &power.per_sc(scenario))?;
    if continuous.t.len() != 1 {
        return Err(crate::Error::Shape("expected one fronthaul row".into()));
    }
    check_rates(&link, &continuous.t[0])?;
    Ok(round_fronthaul(scenario, &continuous.t))
}

/// Uniform-quantizer solve: the continuous alternation, then rounding when
/// `integer` is set. The powers are re-solved for the rounded bits and kept
/// only if that helps.
pub fn solve_p2_single(scenario: &Scenario, opts: &SolverOptions, integer: bool) -> Result<SolveReport> {
    let relaxed = solve_p2_noint_single(scenario, opts, None)?;
    if !integer {
        return Ok(relaxed);
    }
    let link = Link::from_scenario(scenario)?;
    let fronthaul = round_bits(scenario, &relaxed.fronthaul, &relaxed.power)?;
    let mut p = relaxed.power.per_sc(scenario);
    let mut objective = link.sum_rate(QuantModel::UniformScalar, &p, &fronthaul.t[0]);
    let polished = link_power_step(&link, QuantModel::UniformScalar, &fronthaul.t[0]).power;
    let r = link.sum_rate(QuantModel::UniformScalar, &polished, &fronthaul.t[0]);
    if r > objective {
        p = polished;
        objective = r;
    }
    let mut trace = relaxed.objective_trace.clone();
    trace.push(objective);
    Ok(SolveReport {
        solver: "p2-single".into(),
        power: PowerAllocation::from_per_sc(scenario, &p),
        fronthaul,
        objective_bps: objective,
        objective_trace: trace,
        iterations: relaxed.iterations,
        converged: relaxed.converged,
        relaxed_objective_bps: Some(relaxed.objective_bps),
        notes: vec!["last trace entry is the rounded allocation".into()],
    })
}
