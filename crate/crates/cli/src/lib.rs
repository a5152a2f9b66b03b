//! Configuration, artifact output and run orchestration for the `mflab` binary.

pub mod args;
pub mod config;
pub mod output;
pub mod run;
