//! Scenario generation, unit conversions and capacity sweeps.

pub mod scenario;
pub mod sweep;
pub mod units;

pub use scenario::{generate_scenario, Fading, Geometry, PathLoss, ScenarioFile, ScenarioTemplate};
pub use sweep::{average_rows, run_sweep, write_csv, Method, SweepResult, SweepRow, SweepSpec};
