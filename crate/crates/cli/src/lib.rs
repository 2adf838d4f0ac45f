//! Batch runner for the `cartan-core` verification experiments.
//!
//! A run takes an [`ExperimentConfig`], builds the named model with its
//! verified connection, evaluates every check of the named experiment and
//! returns a [`Report`]. Reports carry no timestamps, so a fixed
//! configuration yields identical bytes on every run.

pub mod config;
pub mod error;
pub mod experiments;
pub mod registry;
pub mod report;

pub use config::{ExperimentConfig, Format, ModelSpec};
pub use error::{LabError, LabResult};
pub use experiments::{find, run, Experiment, EXPERIMENTS};
pub use report::{Bound, Check, Report, Verdict};
