//! Command-line runner for the mu-family laboratory: configuration, scenario commands,
//! parameter sweeps and serialized outputs.

pub mod app;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod sweep;
pub mod verify;

pub use app::{run, Cli, Command};
pub use error::{exit, CliError, CliResult};
