//! Simulation and parameter estimation for two-mode-squeezed dual-carrier
//! balanced heterodyne readout of twin interferometers.
//!
//! Quadratures and photocurrents are vacuum-normalised: unit variance is
//! shot noise, and spectra are reported in dB relative to it.

pub mod budget;
pub mod commands;
pub mod config;
pub mod error;
pub mod fit;
pub mod rng;
pub mod sideband;
pub mod spectrum;
pub mod squeezing;
pub mod synth;

pub use error::{Error, Result};
