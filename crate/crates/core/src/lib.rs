//! Photon pairs from four-wave mixing in microstructured fibre: fibre
//! dispersion, phase matching, pair-rate prediction, coincidence analysis and
//! a Monte Carlo model of the counting experiment.

pub mod cli;
pub mod coincidence;
pub mod config;
pub mod constants;
pub mod dispersion;
pub mod error;
pub mod montecarlo;
pub mod numerics;
pub mod pairgen;
pub mod phasematch;

pub use error::{Error, Result};
