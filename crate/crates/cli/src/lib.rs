//! Library side of the `ma` command-line tool: configuration files, the
//! subcommands and their CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use commands::{exit_code, Outcome};
pub use config::{DomainConfig, ProblemConfig, Scheme, StudyConfig};
pub use error::{CliError, Result};
