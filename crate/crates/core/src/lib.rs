//! Online change-point detection on streams of persistence diagrams.

pub mod baselines;
pub mod binning;
pub mod cloud;
pub mod datagen;
pub mod detect;
pub mod embed;
pub mod error;
pub mod experiment;
pub mod io;
pub mod seed;
pub mod serde_float;
pub mod tda;
pub mod weights;

pub use error::{Error, Result};
