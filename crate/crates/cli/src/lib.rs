//! Experiment harness behind the `qmolgen` binary: dataset preparation,
//! training runs, evaluation, sampling and architecture sweeps.
//!
//! Every command is a plain function so it can be driven from tests as
//! well as from the command line.

mod commands;
pub mod config;
pub mod data;
mod error;

pub use commands::*;
pub use config::{ArchitectureSpec, ExpandedConfig, RunConfig};
pub use error::CliError;
