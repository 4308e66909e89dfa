//! D-optimal subsampling for multiple linear regression on large data sets.
//!
//! The crate selects subdata of `k` rows from `n` covariate vectors so that
//! the least squares fit on the subdata has a small slope covariance. It
//! contains the selection algorithms (threshold and top-k Mahalanobis rules,
//! a diagonal simplification, IBOSS, uniform and leverage baselines), the
//! closed-form design quantities behind them, and a simulation harness.
//!
//! Modules, bottom up:
//!
//! - [`linalg`]: Cholesky, structured Mahalanobis distances, streaming moments, least squares.
//! - [`dist`]: incomplete gamma/beta, χ² and F quantiles, seeded samplers.
//! - [`design`]: thresholds, second moments, efficiencies and the optimality check.
//! - [`select`]: the subsamplers.
//! - [`estimation`]: slope covariance, MSE and coverage simulations.
//! - [`sim`]: experiment runner, summaries, plot data and timing benchmarks.

pub mod design;
pub mod dist;
pub mod error;
pub mod estimation;
pub mod linalg;
pub mod select;
pub mod sim;

pub use error::{Error, Result};
