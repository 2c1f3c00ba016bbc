//! Experiment harness around `branchmc-core`: parameter tables, TOML
//! configs, repeated runs, calibration, SA parameter search and report
//! files.

// `!(x > 0.0)` style checks are deliberate: they reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibrate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod ground_truth;
pub mod registry;
pub mod report;
pub mod sa_search;

pub use config::{ExperimentConfig, Resolved};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, RunReport};
pub use registry::ParameterSet;
pub use report::{emit_report, Format};
