//! File formats, corpus handling, evaluation and the `msce` command line on
//! top of `msce-core`.

pub mod cli;
pub mod corpus;
pub mod error;
pub mod eval;
pub mod image_io;
mod parallel;
pub mod training;

pub use error::{CliError, CliResult, EXIT_RUNTIME, EXIT_USAGE};
