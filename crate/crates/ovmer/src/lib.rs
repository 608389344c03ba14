//! File formats, batch evaluation and the command-line driver around
//! `ovmer-core`.

pub mod checkpoint;
pub mod coldstart;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod jsonl;
pub mod trace_io;
pub mod wheel_file;

pub use error::{Error, Result};
