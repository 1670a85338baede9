//! Compositional adaptive operator selection for differential evolution.
//!
//! An AOS method is one point in a five-way product of components: an
//! offspring metric, a reward, a quality update, a probability update and a
//! selection rule. [`engine::run`] hosts any such method inside a DE loop.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bench;
pub mod config;
pub mod engine;
mod error;
pub mod linalg;
pub mod memory;
pub mod metrics;
pub mod policy;
pub mod presets;
pub mod reward;
pub mod rng;
pub mod tuner;

pub use config::AosConfig;
pub use error::{Error, Result};
