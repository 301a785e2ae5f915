//! Alternating power / fronthaul optimization over `psi`, and the two-stage
//! integer solution for the uniform quantizer.

use crate::error::Result;
use crate::benchmarks::{equal_power, mrc_water_filling};
use crate::model::{uniform_sum_rate, FronthaulAllocation, PowerAllocation, QuantModel, Scenario, SolveReport};
use crate::options::SolverOptions;
use crate::rounding::round_fronthaul;

use super::{fronthaul_sca_subproblem, objective, power_subproblem, PsiAllocation};

struct Run {
    start_power: PowerAllocation,
    start_psi: PsiAllocation,
    power: PowerAllocation,
    psi: PsiAllocation,
    objective: f64,
    trace: Vec<f64>,
    converged: bool,
}

fn alternate_from(
    scenario: &Scenario,
    opts: &SolverOptions,
    start_power: PowerAllocation,
    start_psi: PsiAllocation,
) -> Result<Run> {
    let mut power = start_power.clone();
    let mut psi = start_psi.clone();
    let mut p = power.per_sc(scenario);
    let mut cur = objective(scenario, &p, &psi);
    let mut trace: Vec<f64> = Vec::new();
    let mut converged = false;
    for _ in 0..opts.max_iter {
        // Both steps are exact up to bisection tolerance; a step that would
        // lose ground to that tolerance is not taken.
        let step = power_subproblem(scenario, &psi)?;
        let p_new = step.power.per_sc(scenario);
        let r = objective(scenario, &p_new, &psi);
        if r >= cur {
            power = step.power;
            p = p_new;
            cur = r;
        }
        let sca = fronthaul_sca_subproblem(scenario, &power, &psi)?;
        let r = objective(scenario, &p, &sca.psi);
        if r >= cur {
            psi = sca.psi;
            cur = r;
        }
        let done = trace.last().is_some_and(|&prev| opts.converged(prev, cur));
        trace.push(cur);
        if done {
            converged = true;
            break;
        }
    }
    Ok(Run {
        start_power,
        start_psi,
        power,
        psi,
        objective: cur,
        trace,
        converged,
    })
}

/// Alternations from the equal fronthaul split and from the fixed-power
/// points of equal and water-filling powers.
fn runs(scenario: &Scenario, model: QuantModel, opts: &SolverOptions) -> Result<Vec<Run>> {
    opts.validate()?;
    scenario.validate()?;
    let mut out = vec![alternate_from(
        scenario,
        opts,
        PowerAllocation::zeros(scenario),
        PsiAllocation::equal_split(scenario, model),
    )?];
    for power in [equal_power(scenario), mrc_water_filling(scenario)?] {
        let psi = fronthaul_given_power_multi(scenario, model, &power, opts)?;
        out.push(alternate_from(scenario, opts, power, psi)?);
    }
    Ok(out)
}

fn best(runs: Vec<Run>) -> Run {
    runs.into_iter()
        .reduce(|a, b| if b.objective > a.objective { b } else { a })
        .expect("at least one run")
}

fn relaxed_report(scenario: &Scenario, model: QuantModel, run: Run, solver: &str) -> SolveReport {
    let mut notes = vec![format!("best of {STARTS} starting points")];
    if model == QuantModel::UniformScalar {
        notes.push("continuous relaxation of the bit counts".to_string());
    }
    SolveReport {
        solver: solver.to_string(),
        power: run.power,
        fronthaul: run.psi.to_fronthaul(scenario),
        objective_bps: run.objective,
        iterations: run.trace.len(),
        objective_trace: run.trace,
        converged: run.converged,
        relaxed_objective_bps: None,
        notes,
    }
}

const STARTS: usize = 3;

/// Repeats the linearized fronthaul step with the powers held fixed until
/// the rate stops improving, starting from the equal split.
pub fn fronthaul_given_power_multi(
    scenario: &Scenario,
    model: QuantModel,
    power: &PowerAllocation,
    opts: &SolverOptions,
) -> Result<PsiAllocation> {
    opts.validate()?;
    let p = power.per_sc(scenario);
    let mut psi = PsiAllocation::equal_split(scenario, model);
    let mut cur = objective(scenario, &p, &psi);
    for _ in 0..opts.max_iter {
        let next = fronthaul_sca_subproblem(scenario, power, &psi)?.psi;
        let r = objective(scenario, &p, &next);
        if r < cur {
            break;
        }
        psi = next;
        let done = opts.converged(cur, r);
        cur = r;
        if done {
            break;
        }
    }
    Ok(psi)
}

/// Gaussian test channel solver for any number of users and RRHs, starting
/// from an equal split of every RRH's capacity.
pub fn algorithm_three(scenario: &Scenario, opts: &SolverOptions) -> Result<SolveReport> {
    let model = QuantModel::GaussianTestChannel;
    Ok(relaxed_report(scenario, model, best(runs(scenario, model, opts)?), "algorithm-three"))
}

/// Uniform-quantizer solver with continuous bit counts.
pub fn solve_p2_noint_multi(scenario: &Scenario, opts: &SolverOptions) -> Result<SolveReport> {
    let model = QuantModel::UniformScalar;
    Ok(relaxed_report(scenario, model, best(runs(scenario, model, opts)?), "p2-noint-multi"))
}

/// Uniform-quantizer solve: the continuous alternation, then per-RRH
/// rounding onto the bit grid when `integer` is set. Both the start and the
/// end point of every run are rounded, the powers are re-solved for each
/// rounded allocation, and the best integer candidate is kept.
pub fn solve_p2_multi(scenario: &Scenario, opts: &SolverOptions, integer: bool) -> Result<SolveReport> {
    let model = QuantModel::UniformScalar;
    let all = runs(scenario, model, opts)?;
    if !integer {
        return Ok(relaxed_report(scenario, model, best(all), "p2-noint-multi"));
    }
    let mut pick: Option<(f64, PowerAllocation, FronthaulAllocation)> = None;
    for run in &all {
        for (power, psi) in [(&run.power, &run.psi), (&run.start_power, &run.start_psi)] {
            let fronthaul = round_fronthaul(scenario, &psi.to_fronthaul(scenario).t);
            let rounded = PsiAllocation::from_fronthaul(scenario, model, &fronthaul);
            let polished = power_subproblem(scenario, &rounded)?.power;
            for p in [power.clone(), polished] {
                let r = uniform_sum_rate(scenario, &p, &fronthaul)?.total;
                if pick.as_ref().is_none_or(|(v, _, _)| r > *v) {
                    pick = Some((r, p, fronthaul.clone()));
                }
            }
        }
    }
    let (objective, power, fronthaul) = pick.expect("at least one candidate");
    let relaxed = best(all);
    let mut trace = relaxed.trace.clone();
    trace.push(objective);
    Ok(SolveReport {
        solver: "p2-multi".into(),
        power,
        fronthaul,
        objective_bps: objective,
        iterations: relaxed.trace.len(),
        objective_trace: trace,
        converged: relaxed.converged,
        relaxed_objective_bps: Some(relaxed.objective),
        notes: vec![
            format!("best of {STARTS} starting points"),
            "last trace entry is the best rounded allocation".into(),
        ],
    })
}
