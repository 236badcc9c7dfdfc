//! The `compass` command-line tool.
//!
//! - [`config`]: TOML run configuration with preset defaults and flag overrides
//! - [`commands`]: one function per subcommand
//! - [`tables`]: CSV tables with the resolved config embedded
//! - [`cli`]: argument parsing and exit codes

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod tables;

pub use config::RunConfig;
pub use error::CliError;
