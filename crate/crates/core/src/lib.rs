//! Robust sparse linear regression built on density-power-divergence (BHHJ)
//! losses, weighted-L1 regularization paths, and divergence-based Bayesian
//! model evaluation criteria for choosing the regularization parameter.
//!
//! The crate is `no_std`-compatible (requires `alloc`); all IO, simulation,
//! and CLI machinery live in the companion `robsel` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod criteria;
pub mod error;
pub mod linalg;
pub mod loss;
pub mod penalty;
pub mod selection;
pub mod solver;

mod math;

pub use error::{Error, Result};
pub use linalg::Matrix;
pub use loss::{LossSpec, MomentCoefficients};
pub use penalty::{WeightScheme, WeightVector};
pub use selection::{ModelClass, SelectionResult};
pub use solver::{Dataset, FitResult, FitStatus, PathFit, SolverConfig};
