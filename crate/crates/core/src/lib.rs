//! Joint wireless power control and fronthaul rate allocation for uplink
//! OFDMA cloud radio access networks.
//!
//! Each user transmits on its own subcarriers; every RRH quantizes what it
//! receives and forwards it over a capacity-limited fronthaul link to a
//! central unit that combines the RRHs by MRC. The crate models that chain
//! under two quantizers (an ideal Gaussian test channel and a practical
//! uniform scalar quantizer) and maximizes the sum rate over transmit
//! powers and per-subcarrier fronthaul rates.
//!
//! * [`model`]: scenario types and the analytic rate formulas.
//! * [`quantizer`]: the scalar quantizer and its Monte Carlo check.
//! * [`single_link`]: closed-form solvers for one user and one RRH.
//! * [`multi`]: the general solvers built on successive convex approximation.
//! * [`benchmarks`]: the comparison schemes.
//! * [`harness`]: scenario generation, sweeps and file formats.

// `!(x > 0.0)` rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod benchmarks;
pub mod error;
pub mod harness;
pub mod model;
pub mod multi;
pub mod options;
pub mod quantizer;
pub mod rounding;
pub mod single_link;

pub use error::{Error, Result};
pub use model::{FronthaulAllocation, PowerAllocation, QuantModel, Scenario, SolveReport};
pub use options::SolverOptions;
