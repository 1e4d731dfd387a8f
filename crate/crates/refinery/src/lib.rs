//! Experiment runner for `refinery-core`: file formats, a thread-pool
//! executor, tabular output and the `refinery` command line.

pub mod cli;
pub mod emit;
pub mod exec;
pub mod io;
