//! Experiment harness behind the `sess` binary: config parsing, the
//! column-wise Lasso baseline, and the seeded replication runner.

pub mod baseline;
pub mod config;
pub mod runner;
