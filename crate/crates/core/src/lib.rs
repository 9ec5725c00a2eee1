//! Simulation and analysis of the exceptional-point phase transition in two
//! coupled oscillators that exchange energy with finite frequency-comb
//! reservoirs.
//!
//! * [`model`] — system parameters and the real symmetric generator.
//! * [`propagation`] — spectral propagation and an RK4 cross-check.
//! * [`reduced`] — the effective two-mode non-Hermitian model.
//! * [`ratio`] — Riccati dynamics of the amplitude ratio.
//! * [`analysis`] — the variance order parameter, sweeps, revivals.
//! * [`dynamics`] — the model registry used by the analyses and the CLI.

pub mod analysis;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod model;
pub mod output;
pub mod presets;
pub mod propagation;
pub mod ratio;
pub mod reduced;

pub use error::{Error, Result};
