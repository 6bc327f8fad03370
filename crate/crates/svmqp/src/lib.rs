//! Dataset IO, experiment reports and benchmark tables for the `svmqp-core`
//! solvers. The `svmqp` binary is a thin command-line layer over this crate.

pub mod config;
pub mod dataset;
mod error;
pub mod experiment;
pub mod report;
pub mod tables;

pub use error::{HarnessError, Result};
