//! High-precision computational laboratory for Nikishin systems and
//! Chebyshev-Nikishin polynomials.
//!
//! The crate builds multiple orthogonal polynomials of a Nikishin system,
//! extracts their (p+2)-term recurrence coefficients and the periodic limits,
//! assembles the limiting block Toeplitz operator and its matrix symbol, and
//! verifies the whole chain of identities tying those objects together:
//! coefficient relations, multiple orthogonality, the Nikishin hierarchy of
//! the limit measures, root-modulus curves, and exact Widom-type formulas
//! with strong asymptotics for the polynomials and their second kind
//! functions.

pub mod error;
pub mod numerics;

pub mod hessenberg;
pub mod hierarchy;
pub mod mop;
pub mod nikishin;
pub mod lab;
pub mod report;
pub mod surface;
pub mod toeplitz;
pub mod widom;

pub use error::{Error, Result};
pub use numerics::context::PrecisionContext;
