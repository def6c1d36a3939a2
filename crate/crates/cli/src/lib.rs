//! Experiment runner for `sparse-varpro`: compares true, unit and estimated
//! source weights on synthetic instances, and runs the oracle self-checks.

pub mod config;
pub mod error;
pub mod experiment;
pub mod verify;

pub use config::{Emit, ExperimentConfig, Mode, ModeSelection};
pub use error::CliError;
pub use experiment::{run_experiment, ExperimentOutcome, MetricsFile, ModeReport, ModeRun};
pub use verify::{parse_seed_range, verify, VerifyOptions, VerifyReport};
