//! Multilevel low-rank Newton methods.
//!
//! The crate builds second-order search directions from floored truncated
//! spectra of either the full Hessian or a coarse Galerkin model obtained by
//! uniform coordinate sampling, together with the first- and second-order
//! baselines they are benchmarked against, the decrement diagnostics that
//! certify convergence behavior, and the data/trace plumbing of the
//! experiment runner.
//!
//! Start from the `examples/` directory: each example is a runnable tour of
//! one capability (low-rank Newton steps, the coarse SigmaSVD iteration,
//! saddle escape, decrement diagnostics, phase classification, LIBSVM
//! ingestion, trace plotting).

pub mod coarse;
pub mod dataio;
pub mod diagnostics;
pub mod error;
pub mod experiment;
pub mod optimizers;
pub mod problems;
pub mod spectral;

pub use error::{Result, SublevelError};
