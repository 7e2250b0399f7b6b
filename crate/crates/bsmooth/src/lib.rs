//! Command-line companion of `bsmooth-core`: CSV input and output, a
//! catalog of test functions, Monte-Carlo MSE studies and risk-curve tables.

pub mod catalog;
pub mod cli;
mod error;
pub mod io;
pub mod simulation;

pub use error::CliError;
