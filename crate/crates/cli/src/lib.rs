//! Command-line front end for `weylcalc`: file formats, experiment configs
//! and the subcommands behind the `weylcalc` binary.

pub mod commands;
pub mod config;
pub mod formats;
pub mod output;

/// A user-input problem; reported with exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct Invalid(pub String);
