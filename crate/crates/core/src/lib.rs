//! Horospherical measures and means for Schottky groups acting on the hyperbolic plane.

// `!(x > 0.0)` is used on purpose so that NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod geometry;
pub mod gibbs;
pub mod group;
pub mod means;
pub mod potential;
pub mod quadrature;

pub use error::{Error, Result};
