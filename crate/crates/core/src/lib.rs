//! Numerical core for fleet-leader virtual load monitoring.
//!
//! Everything in this crate is pure computation and builds without `std`
//! (an allocator is required). File formats, the command line and the
//! experiment drivers live in the `fleetwise` crate.
//!
//! Module map:
//!
//! - [`nnet`]: deterministic dense networks with analytic backpropagation,
//!   Adam/Adamax and early stopping.
//! - [`bnn`]: mean-field Gaussian variational networks (reparameterised and
//!   flipout sampling, closed-form KL, negative-ELBO training, Monte Carlo
//!   predictive ensembles).
//! - [`fatigue`]: rainflow counting, damage-equivalent moments and
//!   Miner-Palmgren damage.
//! - [`metrics`]: point errors, expected log-likelihood, variance
//!   decomposition and nearest-neighbour distances.
//! - [`data`]: the column schema, scaling, splits, input configurations and
//!   the synthetic wind-farm generator.

#![no_std]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod bnn;
pub mod data;
mod error;
pub mod fatigue;
pub mod math;
mod matrix;
pub mod metrics;
pub mod nnet;
pub mod rng;
mod samples;
pub mod stats;

pub use error::{Error, Result};
pub use matrix::Matrix;
pub use samples::Samples;
