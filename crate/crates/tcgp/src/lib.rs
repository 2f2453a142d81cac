//! File formats, configuration and the `tcgp` command line on top of
//! `tcgp-core`.

pub mod cache;
pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

pub use error::{CliError, Result};
