//! Crate-wide error type.

use thiserror::Error;

#[derive(Error, Debug, Clone)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precision insufficient for {what} at {bits} bits")]
    PrecisionInsufficient { what: String, bits: u32 },

    #[error("{what} failed to stabilize after {iterations} refinements (last two iterates differ by {last_change:.3e})")]
    NonConvergence { what: String, iterations: usize, last_change: f64 },

    #[error("evaluation point too close to the support (distance {distance:.3e}, required {required:.3e})")]
    ProximityToSupport { distance: f64, required: f64 },

    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },

    #[error("moment system ill-conditioned at degree {degree}")]
    IllConditioned { degree: usize },

    #[error("recurrence residual {residual:.3e} above tolerance at degree {degree}; upstream polynomials are inconsistent")]
    InconsistentRecurrence { degree: usize, residual: f64 },

    #[error("invalid limit coefficients: {0}")]
    InvalidLimits(String),

    #[error("degenerate configuration: {0}")]
    DegenerateConfiguration(String),

    #[error("evaluation point lies in a tie neighborhood (min root gap {gap:.3e}); perturb x or use the forced variant")]
    ExceptionalPoint { gap: f64 },

    #[error("residue mismatch: n = {n} is not congruent to {k} mod {p}")]
    ResidueMismatch { n: usize, k: usize, p: usize },

    #[error("insufficient operator depth: {available} rows available, {needed} needed")]
    InsufficientDepth { available: usize, needed: usize },

    #[error("invalid permutation of 1..={p}: {perm:?}")]
    InvalidPermutation { p: usize, perm: Vec<usize> },

    #[error("intervals {first} and {second} are not disjoint")]
    IntervalsOverlap { first: usize, second: usize },

    #[error("density not strictly positive on its interval: {0}")]
    DensityNotPositive(String),
}

pub type Result<T> = std::result::Result<T, Error>;
