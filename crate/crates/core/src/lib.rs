//! Space-time dual-pairing SBP discretization of the damped wave equation.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adjoint;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod forward;
pub mod inverse;
pub mod linalg;
pub mod operators;

pub use error::{Error, Result};
