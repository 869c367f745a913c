//! Numerical checks of anticommutator positivity for |p| and the
//! excess-charge bounds for two-dimensional quantum dots.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod anticommutator;
pub mod bounds;
pub mod error;
pub mod lattice;
pub mod quadrature;
pub mod special;
pub mod spectra;
pub mod trial;

pub use error::{Error, Result};
