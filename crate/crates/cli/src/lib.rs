//! File formats, configuration, and experiment drivers around
//! `mcd-core`. The `mcd` binary is a thin argv wrapper over
//! [`commands`]; integration tests call the same functions in-process.

pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod model_file;
pub mod parallel;
pub mod report;
pub mod svg;

pub use config::RunConfig;
pub use error::{CliError, Result};
