//! File formats, configuration, a parallel Monte Carlo driver and the
//! command pipeline built on `homsim-core`.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod formats;
pub mod parallel;
pub mod pipeline;
pub mod reproduce;

pub use config::RunConfig;
pub use error::{CliError, Result};
pub use homsim_core as core;
