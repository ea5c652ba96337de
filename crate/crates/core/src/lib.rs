//! Discrete fractional Musielak–Sobolev spaces: generalized N-functions,
//! modulars and Luxemburg norms on uniform grids, the fractional
//! Φ-Laplacian, a mountain-pass solver and property-verification suites.

// NaN-rejecting guards are written as negated comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::excessive_precision)]

pub mod error;
pub mod grid;
pub mod nfunc;
pub mod numeric;
pub mod operator;
pub mod solver;
pub mod verify;

pub use error::{MfsError, Result};

/// A point in the plane; one-dimensional problems use the first coordinate.
pub type Point = [f64; 2];
