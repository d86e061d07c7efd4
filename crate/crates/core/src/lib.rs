//! Numerical verification toolkit for weighted Hardy inequalities on quasi-monotone functions.
//!
//! Weights are checked against the `QB_{beta,psi,p}` conditions, grand Lebesgue norms are
//! evaluated, and extrapolation bounds are compared against direct computation.

pub mod error;
pub mod extrap;
pub mod funcspace;
pub mod norms;
pub mod operators;
pub mod quadrature;
pub mod weightclass;
pub mod search;

pub use error::{Error, Result};
