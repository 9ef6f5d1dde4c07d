//! Configuration, experiment runners and file output for the `qrnn` binary.

// `!(x <= y)` checks are meant to reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod params_io;
pub mod runner;
pub mod sampling;
pub mod svg;
pub mod table;

pub use config::{ExperimentConfig, Task};
pub use error::{CliError, CliResult};
