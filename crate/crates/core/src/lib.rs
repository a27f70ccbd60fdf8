//! Post-processing kernels for Gaussian-modulated coherent-state continuous-variable
//! QKD with homodyne detection and reverse reconciliation.
//!
//! Everything in this crate is a pure function of its inputs and builds without `std`
//! (an allocator is required). All variances are in shot-noise units with the vacuum
//! quadrature variance normalized to 1.
//!
//! Modules:
//! - [`model`]: parameter conventions and Gaussian covariance-matrix mathematics.
//! - [`simulator`]: modulation, channel and homodyne detection, pulse-role bookkeeping.
//! - [`estimation`]: channel estimators and worst-case finite-size bounds.
//! - [`keyrate`]: Holevo bound, asymptotic and finite-size secret-key rates.
//! - [`mdr`]: octonion multidimensional reconciliation.
//! - [`ldpc`]: multi-edge LDPC codes, belief propagation, rate adaptation.
//! - [`privamp`]: Toeplitz hashing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod estimation;
pub mod gf2;
pub mod keyrate;
pub mod ldpc;
mod linalg;
pub mod mdr;
pub mod model;
pub mod privamp;
pub mod rng;
pub mod simulator;

pub use error::{Error, Result};
