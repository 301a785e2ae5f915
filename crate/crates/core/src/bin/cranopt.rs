use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use cranopt::benchmarks::{run_benchmark_with, Association, BenchmarkScheme};
use cranopt::harness::units::{bps_to_mbps, mbps_to_bps};
use cranopt::harness::{generate_scenario, run_sweep, write_csv, ScenarioFile, ScenarioTemplate, SweepSpec};
use cranopt::multi::{algorithm_three, solve_p2_multi};
use cranopt::quantizer::monte_carlo_noise_power;
use cranopt::single_link::{algorithm_one, solve_p2_single};
use cranopt::{Error, QuantModel, Result, Scenario, SolveReport, SolverOptions};

#[derive(Parser)]
#[command(name = "cranopt", version, about = "Power and fronthaul allocation for uplink OFDMA C-RAN")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for scenario templates and Monte Carlo runs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Relative improvement below which the alternating solvers stop.
    #[arg(long, global = true, default_value_t = 1e-6)]
    eps: f64,
    #[arg(long, global = true, default_value_t = 500)]
    max_iter: usize,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Scenario or template JSON file.
    #[arg(long, conflicts_with = "preset")]
    scenario: Option<PathBuf>,
    /// Built-in template: fig3, fig5 or fig7.
    #[arg(long)]
    preset: Option<String>,
    /// Overrides every RRH's fronthaul capacity, in Mbit/s.
    #[arg(long)]
    fronthaul_mbps: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Gaussian test channel, one user and one RRH.
    SolveP1Single(ScenarioArgs),
    /// Uniform quantizer, one user and one RRH.
    SolveP2Single {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Keep continuous bit counts.
        #[arg(long)]
        relaxed: bool,
    },
    /// Gaussian test channel, any network.
    SolveP1(ScenarioArgs),
    /// Uniform quantizer, any network.
    SolveP2 {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[arg(long)]
        relaxed: bool,
        /// Comma-separated per-RRH capacities in Mbit/s.
        #[arg(long, value_delimiter = ',')]
        per_rrh_capacity: Option<Vec<f64>>,
    },
    /// Comparison schemes over a list of common fronthaul capacities.
    Benchmark {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Scheme name or `all`.
        #[arg(long, default_value = "all")]
        scheme: String,
        #[arg(long, default_value = "gaussian")]
        model: QuantModel,
        /// Comma-separated capacities in Mbit/s; the scenario's own when absent.
        #[arg(long, value_delimiter = ',')]
        grid_mbps: Option<Vec<f64>>,
        /// Serving-RRH rule for conventional OFDMA; nearest when distances
        /// are recorded, strongest otherwise.
        #[arg(long, value_enum)]
        association: Option<AssociationArg>,
    },
    /// Capacity sweep described by a JSON file or by flags.
    Sweep {
        /// Sweep description JSON; the flags below are ignored when given.
        #[arg(long)]
        spec: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Template JSON file.
        #[arg(long, conflicts_with = "preset")]
        template: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "p1,p2")]
        methods: Vec<String>,
        #[arg(long, value_delimiter = ',')]
        grid_mbps: Vec<f64>,
        /// Number of consecutive seeds starting at --seed.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        average: bool,
    },
    /// Monte Carlo check of the quantizer noise model.
    QuantizerValidate {
        #[arg(long, value_delimiter = ',', default_value = "4,5,6,7,8,9,10")]
        bits: Vec<u32>,
        /// Signal powers in watts.
        #[arg(long, value_delimiter = ',', default_value = "0.1,1,10")]
        powers: Vec<f64>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: usize,
    },
    /// Draws a scenario from a template and prints it as JSON.
    GenScenario {
        #[arg(long)]
        preset: Option<String>,
        #[arg(long, conflicts_with = "preset")]
        template: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AssociationArg {
    MeanGain,
    Distance,
}

fn load_template(preset: Option<&str>, template: Option<&PathBuf>) -> Result<ScenarioTemplate> {
    match (preset, template) {
        (Some(p), _) => ScenarioTemplate::preset(p),
        (None, Some(path)) => match ScenarioFile::load(path)? {
            ScenarioFile::Template(t) => Ok(t),
            ScenarioFile::Scenario(_) => Err(Error::InvalidTemplate(format!(
                "{} holds a scenario, not a template",
                path.display()
            ))),
        },
        (None, None) => Err(Error::Precondition("give --preset or --template".into())),
    }
}

fn load_scenario(args: &ScenarioArgs, seed: u64) -> Result<Scenario> {
    let mut s = match (&args.scenario, &args.preset) {
        (Some(path), _) => ScenarioFile::load(path)?.realize(seed)?,
        (None, Some(p)) => generate_scenario(&ScenarioTemplate::preset(p)?, seed)?,
        (None, None) => return Err(Error::Precondition("give --scenario or --preset".into())),
    };
    if let Some(c) = args.fronthaul_mbps {
        s = s.with_common_fronthaul(mbps_to_bps(c));
    }
    s.validate()?;
    Ok(s)
}

struct Output {
    format: Format,
    sink: Box<dyn Write>,
}

impl Output {
    fn json<T: Serialize>(&mut self, value: &T) -> Result<()> {
        serde_json::to_writer_pretty(&mut self.sink, value)?;
        writeln!(self.sink)?;
        Ok(())
    }

    fn csv<T: Serialize>(&mut self, rows: &[T]) -> Result<()> {
        let mut w = csv::Writer::from_writer(&mut self.sink);
        for r in rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Serialize)]
struct ReportRow<'a> {
    solver: &'a str,
    fronthaul_mbps: f64,
    objective_bps: f64,
    spectral_efficiency: f64,
    iterations: usize,
    converged: bool,
    relaxed_objective_bps: Option<f64>,
}

impl<'a> ReportRow<'a> {
    fn new(r: &'a SolveReport, s: &Scenario) -> Self {
        ReportRow {
            solver: &r.solver,
            fronthaul_mbps: bps_to_mbps(s.fronthaul_cap.iter().sum::<f64>() / s.num_rrhs as f64),
            objective_bps: r.objective_bps,
            spectral_efficiency: r.spectral_efficiency(s),
            iterations: r.iterations,
            converged: r.converged,
            relaxed_objective_bps: r.relaxed_objective_bps,
        }
    }
}

fn emit_reports(out: &mut Output, items: &[(Scenario, SolveReport)]) -> Result<()> {
    match out.format {
        Format::Json if items.len() == 1 => out.json(&items[0].1),
        Format::Json => out.json(&items.iter().map(|(_, r)| r).collect::<Vec<_>>()),
        Format::Csv => out.csv(&items.iter().map(|(s, r)| ReportRow::new(r, s)).collect::<Vec<_>>()),
    }
}

fn require_single(s: &Scenario) -> Result<()> {
    if s.is_single_link() {
        Ok(())
    } else {
        Err(Error::Precondition(format!(
            "single-link solver needs one user and one RRH, got K = {}, M = {}",
            s.num_users, s.num_rrhs
        )))
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    let opts = SolverOptions {
        eps: g.eps,
        max_iter: g.max_iter,
    };
    opts.validate()?;
    let sink: Box<dyn Write> = match &g.out {
        Some(p) => Box::new(io::BufWriter::new(File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    let mut out = Output { format: g.format, sink };
    match cli.command {
        Command::SolveP1Single(args) => {
            let s = load_scenario(&args, g.seed)?;
            require_single(&s)?;
            let r = algorithm_one(&s, &opts)?;
            emit_reports(&mut out, &[(s, r)])?;
        }
        Command::SolveP2Single { scenario, relaxed } => {
            let s = load_scenario(&scenario, g.seed)?;
            require_single(&s)?;
            let r = solve_p2_single(&s, &opts, !relaxed)?;
            emit_reports(&mut out, &[(s, r)])?;
        }
        Command::SolveP1(args) => {
            let s = load_scenario(&args, g.seed)?;
            let r = algorithm_three(&s, &opts)?;
            emit_reports(&mut out, &[(s, r)])?;
        }
        Command::SolveP2 {
            scenario,
            relaxed,
            per_rrh_capacity,
        } => {
            let mut s = load_scenario(&scenario, g.seed)?;
            if let Some(caps) = per_rrh_capacity {
                if caps.len() != s.num_rrhs {
                    return Err(Error::Shape(format!(
                        "--per-rrh-capacity has {} values for {} RRHs",
                        caps.len(),
                        s.num_rrhs
                    )));
                }
                s.fronthaul_cap = caps.into_iter().map(mbps_to_bps).collect();
                s.validate()?;
            }
            let r = solve_p2_multi(&s, &opts, !relaxed)?;
            emit_reports(&mut out, &[(s, r)])?;
        }
        Command::Benchmark {
            scenario,
            scheme,
            model,
            grid_mbps,
            association,
        } => {
            let base = load_scenario(&scenario, g.seed)?;
            let schemes: Vec<BenchmarkScheme> = if scheme == "all" {
                BenchmarkScheme::ALL.to_vec()
            } else {
                vec![scheme.parse()?]
            };
            let association = match association {
                Some(AssociationArg::MeanGain) => Association::MeanGain,
                Some(AssociationArg::Distance) => Association::Distance,
                None if base.distance_m.is_some() => Association::Distance,
                None => Association::MeanGain,
            };
            let scenarios: Vec<Scenario> = match grid_mbps {
                Some(grid) => grid.iter().map(|&c| base.with_common_fronthaul(mbps_to_bps(c))).collect(),
                None => vec![base],
            };
            let mut items = Vec::new();
            for b in schemes {
                for s in &scenarios {
                    let r = run_benchmark_with(b, s, model, &opts, association)?;
                    items.push((s.clone(), r));
                }
            }
            emit_reports(&mut out, &items)?;
        }
        Command::Sweep {
            spec,
            preset,
            template,
            methods,
            grid_mbps,
            seeds,
            average,
        } => {
            let spec = match spec {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(path)?)?,
                None => SweepSpec {
                    template: load_template(preset.as_deref(), template.as_ref())?,
                    methods,
                    grid_mbps,
                    seeds: (0..seeds).map(|i| g.seed.wrapping_add(i)).collect(),
                    average,
                },
            };
            let result = run_sweep(&spec, &opts)?;
            match out.format {
                Format::Json => out.json(&result)?,
                Format::Csv => write_csv(&result.rows, &mut out.sink)?,
            }
        }
        Command::QuantizerValidate { bits, powers, samples } => {
            #[derive(Serialize)]
            struct Row {
                bits: u32,
                signal_power: f64,
                analytic_q: f64,
                empirical_q: f64,
                total_q: f64,
                overflow_rate: f64,
                seed: u64,
            }
            let mut rows = Vec::new();
            for &d in &bits {
                for &p in &powers {
                    let r = monte_carlo_noise_power(p, d, samples, g.seed)?;
                    rows.push(Row {
                        bits: d,
                        signal_power: p,
                        analytic_q: r.analytic_q,
                        empirical_q: r.granular_q,
                        total_q: r.total_q,
                        overflow_rate: r.overflow_rate,
                        seed: g.seed,
                    });
                }
            }
            match out.format {
                Format::Json => out.json(&rows)?,
                Format::Csv => out.csv(&rows)?,
            }
        }
        Command::GenScenario { preset, template } => {
            let t = load_template(preset.as_deref(), template.as_ref())?;
            out.json(&generate_scenario(&t, g.seed)?)?;
        }
    }
    out.sink.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let missing_file = matches!(&e, Error::Io(io) if io.kind() == io::ErrorKind::NotFound);
            if e.is_input_error() || missing_file {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
