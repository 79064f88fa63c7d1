//! Command-line front end for the FIR design library.

pub mod config;
pub mod error;
pub mod output;
pub mod run;

pub use error::CliError;
