//! File formats, run artifacts and the `lorank` command-line tool built on
//! [`lorank_core`].

pub mod checkpoint;
pub mod cli;
pub mod error;
pub mod io;
pub mod json;
pub mod manifest;

pub use error::CliError;
