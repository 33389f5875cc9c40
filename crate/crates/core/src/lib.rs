//! Randomized benchmarking under Markovian and non-Markovian noise.
//!
//! The crate simulates RB experiments, evaluates the Clifford-averaged
//! sequence fidelity in closed form through environment superoperators, and
//! learns a unitary system-environment noise node from ASF data with a
//! constrained MPO sweep. Everything here is `no_std` + `alloc`; file formats,
//! parallel Monte Carlo and the CLI live in the `nmrb` crate.
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod average;
pub mod error;
pub mod fit;
pub mod learner;
pub mod linalg;
pub mod noise;
pub mod process;
pub mod quantum;
pub mod rb;

#[cfg(test)]
pub(crate) mod testutil;

pub use error::{Error, Result};
pub use linalg::ComplexMatrix;

/// Complex double.
pub type C64 = num_complex::Complex<f64>;
