//! Detector-decoy round-robin differential-phase-shift QKD: photon-number
//! bounds, key rates, parameter optimization and Monte-Carlo checks.

pub mod cli;
pub mod config;
pub mod error;
pub mod keyrate;
pub mod model;
pub mod montecarlo;
pub mod optimizer;
pub mod photonstats;

pub use error::{Error, Result};
