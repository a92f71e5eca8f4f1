//! Randomized block Kaczmarz solvers with extrapolated stepsizes.
//!
//! The crate is organised bottom-up:
//!
//! * [`linalg`] – dense matrices, symmetric eigenvalues, min-norm least squares.
//! * [`sampling`] – probability spaces over row blocks, random pavings.
//! * [`stepsize`] – constant, adaptive and Chebyshev stepsize policies.
//! * [`solver`] – iteration kernels, the run loop and the Monte Carlo engine.
//! * [`analysis`] – stochastic conditioning and predicted convergence factors.
//! * [`harness`] – problem generators and experiment orchestration.
//! * [`io`] – MatrixMarket and plain-text vector files.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod error;
pub mod harness;
pub mod io;
pub mod linalg;
pub mod par;
pub mod rng;
pub mod sampling;
pub mod solver;
pub mod stepsize;

pub use error::{Error, Result};
pub use linalg::{DenseMatrix, LinearSystem};
