//! File formats, configuration and the command line front end for
//! `rita-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod run;

pub use error::{CliError, Result};
