//! Numeric substrate: configurable-precision arithmetic, polynomials,
//! root finding, Gauss-type quadrature and contour integration.

pub mod cheb;
pub mod complex;
pub mod context;
pub mod contour;
pub mod linalg;
pub mod poly;
pub mod quad;
pub mod real;

pub use complex::MpComplex;
pub use context::PrecisionContext;
pub use contour::{contour_integral, JordanContour};
pub use poly::Polynomial;
pub use quad::{gauss_rule, QuadratureRule};
pub use real::{ln2, pi, MpReal};
