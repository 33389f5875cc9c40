//! File formats, parallel Monte Carlo, and the command implementations behind
//! the `nmrb` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod format;
pub mod manifest;
pub mod montecarlo;
pub mod selfcheck;

pub use error::{CliError, ExitStatus};
