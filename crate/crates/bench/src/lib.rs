//! Benchmark harness for super-resolution models: model configs and
//! runners, dataset preparation, benchmark runs, reports and the `srbench`
//! command line.

pub mod cli;
mod error;
pub mod harness;
pub mod presets;
pub mod runtime;

pub use error::{Error, Result};
