//! Experiment harness behind the `mpaudit` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod sink;
pub mod svg;

pub use error::{CliError, CliResult};
