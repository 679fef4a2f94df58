//! Command-line front end for `spectral-dp-core`.
//!
//! Besides the `spectral-dp` binary this crate provides the pieces that need
//! `std`: CSV readers and writers for matrices, datasets and target
//! spectra, a rayon-backed [`TrialExecutor`](spectral_dp_core::TrialExecutor),
//! and JSON / CSV report rendering. Every report embeds the tool version,
//! the seed and the resolved flags.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod commands;
pub mod error;
pub mod exec;
pub mod io;
pub mod report;

use std::ffi::OsString;

use clap::Parser;

pub use commands::{execute, Rendered};
pub use error::{CliError, CliResult};

/// Parses `argv` (including the program name) and runs the subcommand.
/// Argument errors come back as `Err(clap::Error)`.
pub fn run_args<I, T>(argv: I) -> Result<CliResult<Rendered>, clap::Error>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = args::Cli::try_parse_from(argv)?;
    Ok(execute(&cli.command))
}
