//! Config-driven experiment runner for the spectral asymptotics library.
//!
//! A run builds (or loads from cache) the coefficient table of one measure, evaluates
//! the requested suites, and writes CSV files, gnuplot scripts, a `summary.csv` of
//! pass/fail checks and a `provenance.txt` into the output directory.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cache;
pub mod config;
pub mod error;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, Suite, ToleranceProfile};
pub use error::{CliError, Result};
pub use run::{run_experiment, RunOptions, RunReport};
