//! Limit theory for stochastic gradient descent with heavy-tailed gradient noise.
//!
//! Module map:
//! - [`rng`]: seeded streams, stable and Pareto sampling, empirical CF and Hill estimator.
//! - [`models`]: quadratic and logistic losses, their stochastic gradients and tail measures.
//! - [`dynamics`]: SGD recursion, gradient flow, fundamental matrix, scaled errors.
//! - [`limit_process`]: stable-driven OU processes, stationary laws, CF evaluation and inversion.
//! - [`stats`]: jump detection, KS distance, coverage, histograms.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod limit_process;
pub mod models;
pub mod numerics;
pub mod rng;
pub mod stable;
pub mod stats;

pub use error::{Error, Result};
