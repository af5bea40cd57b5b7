//! Simulation harness, real-data pipeline, and file formats behind the
//! `robsel` command-line tool. The estimation and selection algorithms live
//! in `robsel-core`; everything here is std-side plumbing around them.

pub mod config;
pub mod error;
pub mod io;
pub mod realdata;
pub mod sim;

pub use error::{AppError, Result};
