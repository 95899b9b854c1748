//! Configuration, experiment orchestration and CSV output for the `etpd`
//! command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::{CliError, CliResult};
