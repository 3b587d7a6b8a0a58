//! Configuration, file formats and run modes for the `qucap` command.
//!
//! The binary is a thin shell around [`commands::run`]: parse a
//! [`config::RunConfig`], compute the whole result in memory, then write it
//! atomically. Exit codes follow [`commands::Outcome`] and
//! [`error::CliError::exit_code`].

pub mod commands;
pub mod config;
pub mod error;
pub mod table;

pub use commands::{run, run_with_threads, write_rendered, Outcome, Rendered};
pub use config::{Format, Mode, OutputPath, RunConfig};
pub use error::CliError;
