//! Quaternionic linear algebra, CP^3 geometry, the periodic Toda system on D,
//! the atlas map to CP^3 and curve utilities.

// Negated float comparisons are used to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod atlas;
pub mod cp3;
pub mod curve;
pub mod exec;
pub mod io;
pub mod quat;
pub mod sampling;
pub mod toda;

/// Crate version string used in output envelopes.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
