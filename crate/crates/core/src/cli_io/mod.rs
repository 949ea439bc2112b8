//! Command line, configuration files and output formats.

pub mod cli;
pub mod config;
pub mod output;
pub mod verify;

pub use cli::run_cli;
