//! Front end of the spectral lab: flat JSON configs, run directories with
//! manifests, the `jmgt` subcommands and the acceptance suites.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod suites;

pub use error::{CliError, CliResult};
