//! Command-line driver for the mkc-core experiments.
//!
//! The binary is a thin wrapper around [`run::run`] and
//! [`report::emit_report`]; everything else lives here so it can be tested
//! without spawning processes.

pub mod acceptance;
pub mod config;
pub mod report;
pub mod run;
