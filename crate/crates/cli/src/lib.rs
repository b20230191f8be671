//! Command-line front end for `lmg-core`.
//!
//! Exit codes: 0 on success, 1 when a run fails, 2 for usage and
//! configuration errors.

pub mod commands;
pub mod config;
pub mod output;
pub mod run;

pub use commands::{main_with_args, Cli};
