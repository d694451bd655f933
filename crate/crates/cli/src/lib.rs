//! Batch driver for penalty splitting runs: TOML configuration in, CSV trace
//! and JSON summary out.

pub mod commands;
pub mod config;
pub mod trace;
