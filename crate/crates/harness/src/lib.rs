//! Experiment runner for the `irsopt` solvers: configuration files,
//! seeded Monte Carlo sweeps, CSV results and convergence traces.

pub mod config;
pub mod error;
pub mod experiment;
pub mod trace;

pub use config::{Config, ExperimentSpec, Family, InterIrsScheme, Scheme};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, write_csv, ResultRow, RunOptions};
pub use trace::emit_trace;
