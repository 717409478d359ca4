//! Bottom of the essential spectrum of pseudorelativistic few-body
//! Hamiltonians restricted to permutational-symmetry subspaces.

// NaN-rejecting checks are written as `!(x > 0.0)` on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod eigensolve;
pub mod error;
pub mod fourier_grid;
pub mod run;
pub mod symgroup;
pub mod system;
pub mod threshold;
pub mod verify;

pub use error::{Error, Result};
