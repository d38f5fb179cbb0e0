//! Configuration, orchestration and reporting for training and evaluation
//! runs. The `dapg` binary is a thin wrapper around [`commands`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
