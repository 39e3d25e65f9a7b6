//! File formats, ensemble runner and command-line front end for
//! `trajzoom-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod csvio;
pub mod error;
pub mod plotdata;
pub mod runner;
pub mod studies;

pub use config::{parse_config, Mode, RunConfig};
pub use error::RunError;
pub use runner::{run, RunOptions, RunOutcome};
