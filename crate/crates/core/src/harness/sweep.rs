//! Fronthaul-capacity sweeps over solvers, benchmarks and seeds.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::benchmarks::{run_benchmark, BenchmarkScheme};
use crate::error::{Error, Result};
use crate::model::{QuantModel, Scenario, SolveReport};
use crate::multi::{algorithm_three, solve_p2_multi};
use crate::options::SolverOptions;
use crate::single_link::{algorithm_one, cutset_bound, gap_reference_solutions, solve_p2_single};

use super::scenario::{generate_scenario, Fading, ScenarioTemplate};
use super::units::mbps_to_bps;

/// Anything that turns a scenario into a [`SolveReport`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    /// Gaussian joint optimization.
    P1,
    /// Uniform joint optimization with integer bits.
    P2,
    /// Uniform joint optimization with continuous bits.
    P2NoInt,
    /// Constructive reference within a fixed gap of the cut-set bound;
    /// single link only.
    GapReference(QuantModel),
    Benchmark(BenchmarkScheme, QuantModel),
}

fn model_tag(model: QuantModel) -> &'static str {
    match model {
        QuantModel::GaussianTestChannel => "gaussian",
        QuantModel::UniformScalar => "uniform",
    }
}

impl Method {
    /// P1, P2 and every benchmark under both quantizers.
    pub fn standard_set() -> Vec<Method> {
        let mut out = vec![Method::P1, Method::P2];
        for model in [QuantModel::GaussianTestChannel, QuantModel::UniformScalar] {
            out.extend(BenchmarkScheme::ALL.iter().map(|&b| Method::Benchmark(b, model)));
        }
        out
    }

    pub fn model(self) -> QuantModel {
        match self {
            Method::P1 => QuantModel::GaussianTestChannel,
            Method::P2 | Method::P2NoInt => QuantModel::UniformScalar,
            Method::GapReference(m) | Method::Benchmark(_, m) => m,
        }
    }

    /// Runs the method, picking the single-link solver for one user and one
    /// RRH.
    pub fn solve(self, scenario: &Scenario, opts: &SolverOptions) -> Result<SolveReport> {
        let single = scenario.is_single_link();
        match self {
            Method::P1 if single => algorithm_one(scenario, opts),
            Method::P1 => algorithm_three(scenario, opts),
            Method::P2 if single => solve_p2_single(scenario, opts, true),
            Method::P2 => solve_p2_multi(scenario, opts, true),
            Method::P2NoInt if single => solve_p2_single(scenario, opts, false),
            Method::P2NoInt => solve_p2_multi(scenario, opts, false),
            Method::GapReference(model) => {
                let r = gap_reference_solutions(scenario)?;
                Ok(match model {
                    QuantModel::GaussianTestChannel => r.gaussian,
                    QuantModel::UniformScalar => r.uniform,
                })
            }
            Method::Benchmark(b, model) => run_benchmark(b, scenario, model, opts),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::P1 => f.write_str("p1"),
            Method::P2 => f.write_str("p2"),
            Method::P2NoInt => f.write_str("p2-noint"),
            Method::GapReference(m) => write!(f, "gap-reference:{}", model_tag(*m)),
            Method::Benchmark(b, m) => write!(f, "{b}:{}", model_tag(*m)),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    /// `p1`, `p2`, `p2-noint`, or `<scheme>:<gaussian|uniform>` where the
    /// scheme is a benchmark name or `gap-reference`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p1" => return Ok(Method::P1),
            "p2" => return Ok(Method::P2),
            "p2-noint" => return Ok(Method::P2NoInt),
            _ => {}
        }
        let unknown = || Error::Unknown {
            what: "method",
            name: s.to_string(),
        };
        let (scheme, model) = s.split_once(':').ok_or_else(unknown)?;
        let model: QuantModel = model.parse()?;
        if scheme == "gap-reference" {
            return Ok(Method::GapReference(model));
        }
        Ok(Method::Benchmark(scheme.parse()?, model))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub method: String,
    pub fronthaul_mbps: f64,
    /// Absent on rows averaged over seeds.
    pub seed: Option<u64>,
    /// Number of seeds behind the row.
    pub samples: usize,
    pub objective_bps: Option<f64>,
    pub spectral_efficiency: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    /// Cut-set bound in bit/s/Hz, single-link scenarios only.
    pub cutset_bps_hz: Option<f64>,
    pub wall_ms: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub template: ScenarioTemplate,
    pub methods: Vec<String>,
    pub grid_mbps: Vec<f64>,
    pub seeds: Vec<u64>,
    /// Average every (method, capacity) pair over the seeds.
    #[serde(default)]
    pub average: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub fading: Fading,
    pub averaged: bool,
    pub rows: Vec<SweepRow>,
}

fn run_cell(method: Method, base: &Result<Scenario>, cap_mbps: f64, seed: u64, opts: &SolverOptions) -> SweepRow {
    let start = Instant::now();
    let outcome = base.as_ref().map_err(|e| e.to_string()).and_then(|s| {
        let s = s.with_common_fronthaul(mbps_to_bps(cap_mbps));
        let cutset = if s.is_single_link() { cutset_bound(&s).ok() } else { None };
        method
            .solve(&s, opts)
            .map(|r| (r.spectral_efficiency(&s), r, cutset))
            .map_err(|e| e.to_string())
    });
    let wall_ms = start.elapsed().as_secs_f64() * 1e3;
    let mut row = SweepRow {
        method: method.to_string(),
        fronthaul_mbps: cap_mbps,
        seed: Some(seed),
        samples: 1,
        objective_bps: None,
        spectral_efficiency: None,
        iterations: None,
        converged: None,
        cutset_bps_hz: None,
        wall_ms,
        error: None,
    };
    match outcome {
        Ok((se, r, cutset)) => {
            row.objective_bps = Some(r.objective_bps);
            row.spectral_efficiency = Some(se);
            row.iterations = Some(r.iterations);
            row.converged = Some(r.converged);
            row.cutset_bps_hz = cutset;
        }
        Err(e) => row.error = Some(e),
    }
    row
}

/// Runs every (method, capacity, seed) cell in parallel. A failing cell
/// yields a row with `error` set; the other cells still run. The scenario of
/// a seed is drawn once and shared by all capacities.
pub fn run_sweep(spec: &SweepSpec, opts: &SolverOptions) -> Result<SweepResult> {
    opts.validate()?;
    spec.template.validate()?;
    if spec.grid_mbps.is_empty() || spec.methods.is_empty() || spec.seeds.is_empty() {
        return Err(Error::Precondition("sweep needs methods, grid points and seeds".into()));
    }
    if let Some(c) = spec.grid_mbps.iter().find(|c| !(**c >= 0.0) || !c.is_finite()) {
        return Err(Error::NegativeInput {
            what: "fronthaul capacity",
            value: *c,
        });
    }
    let methods: Vec<Method> = spec.methods.iter().map(|m| m.parse()).collect::<Result<_>>()?;
    let scenarios: Vec<Result<Scenario>> = spec.seeds.iter().map(|&s| generate_scenario(&spec.template, s)).collect();
    let cells: Vec<(Method, f64, usize)> = methods
        .iter()
        .flat_map(|&m| {
            spec.grid_mbps
                .iter()
                .flat_map(move |&c| (0..spec.seeds.len()).map(move |i| (m, c, i)))
        })
        .collect();
    let rows: Vec<SweepRow> = cells
        .par_iter()
        .map(|&(m, c, i)| run_cell(m, &scenarios[i], c, spec.seeds[i], opts))
        .collect();
    let rows = if spec.average { average_rows(&rows) } else { rows };
    Ok(SweepResult {
        fading: spec.template.fading,
        averaged: spec.average,
        rows,
    })
}

/// Collapses rows that share a method and capacity into their mean over
/// the seeds that succeeded, keeping first-seen order.
pub fn average_rows(rows: &[SweepRow]) -> Vec<SweepRow> {
    let mut out: Vec<(SweepRow, Vec<&SweepRow>)> = Vec::new();
    for r in rows {
        match out
            .iter_mut()
            .find(|(o, _)| o.method == r.method && o.fronthaul_mbps == r.fronthaul_mbps)
        {
            Some((_, group)) => group.push(r),
            None => out.push((r.clone(), vec![r])),
        }
    }
    out.into_iter()
        .map(|(first, group)| {
            let ok: Vec<&&SweepRow> = group.iter().filter(|r| r.error.is_none()).collect();
            let mean = |f: &dyn Fn(&SweepRow) -> Option<f64>| -> Option<f64> {
                let v: Vec<f64> = ok.iter().filter_map(|r| f(r)).collect();
                (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
            };
            let failed = group.len() - ok.len();
            SweepRow {
                method: first.method,
                fronthaul_mbps: first.fronthaul_mbps,
                seed: None,
                samples: ok.len(),
                objective_bps: mean(&|r| r.objective_bps),
                spectral_efficiency: mean(&|r| r.spectral_efficiency),
                iterations: ok.iter().filter_map(|r| r.iterations).max(),
                converged: (!ok.is_empty()).then(|| ok.iter().all(|r| r.converged == Some(true))),
                cutset_bps_hz: mean(&|r| r.cutset_bps_hz),
                wall_ms: group.iter().map(|r| r.wall_ms).sum(),
                error: (failed > 0).then(|| format!("{failed} of {} cells failed", group.len())),
            }
        })
        .collect()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(preset: &str, methods: &[&str], grid: &[f64], seeds: &[u64]) -> SweepSpec {
        SweepSpec {
            template: ScenarioTemplate::preset(preset).unwrap(),
            methods: methods.iter().map(|s| s.to_string()).collect(),
            grid_mbps: grid.to_vec(),
            seeds: seeds.to_vec(),
            average: false,
        }
    }

    #[test]
    fn method_names_round_trip() {
        let mut all = Method::standard_set();
        all.push(Method::P2NoInt);
        all.push(Method::GapReference(QuantModel::UniformScalar));
        for m in all {
            assert_eq!(m.to_string().parse::<Method>().unwrap(), m);
        }
        assert!("equal-power".parse::<Method>().is_err());
        assert!("equal-power:lattice".parse::<Method>().is_err());
    }

    #[test]
    fn one_point_is_a_direct_call() {
        let s = spec("fig3", &["p1"], &[400.0], &[0]);
        let rows = run_sweep(&s, &SolverOptions::default()).unwrap().rows;
        let direct = algorithm_one(
            &generate_scenario(&s.template, 0).unwrap().with_common_fronthaul(400e6),
            &SolverOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].objective_bps, Some(direct.objective_bps));
        assert!(rows[0].cutset_bps_hz.is_some());
    }

    #[test]
    fn fig5_curves_sit_below_cutset_and_rise() {
        let methods = ["p1", "p2", "equal-power:gaussian", "water-filling-power:uniform"];
        let grid = [50.0, 100.0, 200.0, 400.0, 800.0];
        let s = spec("fig5", &methods, &grid, &[7]);
        let rows = run_sweep(&s, &SolverOptions::default()).unwrap().rows;
        assert_eq!(rows.len(), methods.len() * grid.len());
        for r in &rows {
            assert!(r.error.is_none());
            assert!(r.spectral_efficiency.unwrap() <= r.cutset_bps_hz.unwrap() * (1.0 + 1e-9));
        }
        for m in ["p1", "p2"] {
            let curve: Vec<f64> = rows.iter().filter(|r| r.method == m).map(|r| r.objective_bps.unwrap()).collect();
            assert!(curve.windows(2).all(|w| w[1] >= w[0] * (1.0 - 1e-6)), "{m}: {curve:?}");
        }
    }

    #[test]
    fn failures_are_per_row() {
        let s = spec("fig7", &["p1", "gap-reference:gaussian"], &[100.0], &[1]);
        let rows = run_sweep(&s, &SolverOptions::default()).unwrap().rows;
        assert!(rows[0].error.is_none());
        assert!(rows[1].error.is_some());
    }

    #[test]
    fn averaging_and_parallelism_are_reproducible() {
        let mut s = spec("fig5", &["p1", "equal-both:uniform"], &[100.0, 300.0], &[1, 2, 3]);
        let a = run_sweep(&s, &SolverOptions::default()).unwrap();
        let b = run_sweep(&s, &SolverOptions::default()).unwrap();
        let strip = |r: &SweepResult| -> Vec<Option<f64>> { r.rows.iter().map(|x| x.objective_bps).collect() };
        assert_eq!(strip(&a), strip(&b));
        s.average = true;
        let avg = run_sweep(&s, &SolverOptions::default()).unwrap();
        assert_eq!(avg.rows.len(), 4);
        let expect = a.rows[..3].iter().map(|r| r.objective_bps.unwrap()).sum::<f64>() / 3.0;
        assert!((avg.rows[0].objective_bps.unwrap() - expect).abs() <= 1e-9 * expect);
        assert_eq!(avg.rows[0].samples, 3);
        assert_eq!(avg.fading, Fading::Rayleigh);
    }

    #[test]
    fn csv_has_one_line_per_row() {
        let s = spec("fig3", &["p1", "p2"], &[100.0, 200.0], &[0]);
        let rows = run_sweep(&s, &SolverOptions::default()).unwrap().rows;
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 5);
        assert!(text.starts_with("method,fronthaul_mbps,seed"));
    }

    #[test]
    fn empty_grid_is_rejected() {
        let s = spec("fig3", &["p1"], &[], &[0]);
        assert!(run_sweep(&s, &SolverOptions::default()).is_err());
    }
}
