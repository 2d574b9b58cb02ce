//! Radar-aided mmWave vehicle-to-infrastructure beam training.
//!
//! The crate simulates paired radar / communication channels seen by a
//! roadside unit (RSU), learns the radar-to-communication (R2C) mapping with
//! two small neural networks, and measures what the learned prior is worth
//! in beam-training overhead and effective rate.
//!
//! Module map:
//!
//! - [`scenario`]: array geometry, wideband geometric channels, radar
//!   snapshots and the paired scenario generator.
//! - [`covariance`]: covariance estimation, Toeplitz-Hermitian-PSD projection
//!   and the first-column representation.
//! - [`spectrum`]: DFT angle grid, angular power spectrum (APS) extraction,
//!   log scaling and the windowed similarity metric.
//! - [`nn`]: a small hand-differentiated network engine, Adam, training with
//!   early stopping and the two R2C models.
//! - [`beam`]: phase-quantized codebooks, beam search strategies, spectral
//!   efficiency and overhead-aware effective rate.
//! - [`pipeline`]: dataset files, training, evaluation and rate reports used
//!   by the `r2c` binary.

pub mod beam;
pub mod covariance;
pub mod error;
mod hermitian;
pub mod nn;
pub mod pipeline;
pub mod scenario;
pub mod spectrum;

pub use error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
