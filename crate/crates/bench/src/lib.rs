//! Benchmark harness: synthetic deep-linear-network problems, multi-seed
//! runs of every optimizer, and CSV output for plotting.

pub mod config;
pub mod data;
pub mod error;
pub mod suite;
pub mod trace_io;

pub use config::{Experiment, ExperimentSpec, RegKind, RegSpec};
pub use error::{BenchError, Result};
pub use suite::{run_suite, SuiteReport};
