//! File formats, performance measures and the command-line front end for
//! `aos-core`.

pub mod cli;
pub mod error;
pub mod files;
pub mod perf;

pub use aos_core;
pub use error::{AppError, AppResult};
