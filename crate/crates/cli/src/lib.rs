//! Configuration, orchestration and output of the squeezed-driver HHG experiments.

pub mod config;
pub mod error;
pub mod experiments;
pub mod svg;

pub use config::{Kind, Overrides, RunConfig};
pub use error::{CliError, Result};
pub use experiments::{run, RunOptions, RunSummary};
