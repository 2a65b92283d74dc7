//! Learning-based snow-depth retrieval from co-registered InSAR stacks.
//!
//! Raster stacks ([`gridstack`]) are turned into per-pixel 21-channel
//! feature rows ([`features`]), regressed with a compact ReLU network
//! ([`model`]) and scored under in-distribution, transfer and half-scene
//! regimes ([`eval`]). [`synth`] generates deterministic synthetic scenes
//! with known ground truth.

pub mod cli;
pub mod error;
pub mod eval;
pub mod features;
pub mod gridstack;
pub mod model;
pub mod rng;
pub mod synth;

pub use error::{Error, Result};
