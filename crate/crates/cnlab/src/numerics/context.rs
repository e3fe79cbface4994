//! Shared precision/tolerance context threaded through every numeric routine.

use super::real::MpReal;
use crate::error::Error;

/// Immutable knobs for precision, quadrature sizing and tie detection.
#[derive(Clone, Debug)]
pub struct PrecisionContext {
    pub working_bits: u32,
    pub quad_order_min: usize,
    pub quad_order_max: usize,
    /// Relative stabilization target for adaptive loops.
    pub convergence_tol: MpReal,
    /// Relative modulus gap below which two roots are declared tied.
    pub tie_tol: MpReal,
}

impl PrecisionContext {
    pub fn new(
        working_bits: u32,
        quad_order_min: usize,
        quad_order_max: usize,
        convergence_tol: &str,
        tie_tol: &str,
    ) -> Result<Self, Error> {
        if working_bits < 64 {
            return Err(Error::InvalidConfig("working_bits must be >= 64".into()));
        }
        if quad_order_min > quad_order_max || quad_order_min == 0 {
            return Err(Error::InvalidConfig(
                "quadrature order bounds must satisfy 0 < min <= max".into(),
            ));
        }
        let conv = MpReal::from_decimal_str(convergence_tol, working_bits)
            .map_err(Error::InvalidConfig)?;
        let tie =
            MpReal::from_decimal_str(tie_tol, working_bits).map_err(Error::InvalidConfig)?;
        let one = MpReal::one(working_bits);
        if !conv.is_positive() || conv >= one {
            return Err(Error::InvalidConfig("convergence_tol must lie in (0,1)".into()));
        }
        if !tie.is_positive() || tie >= one {
            return Err(Error::InvalidConfig("tie_tol must lie in (0,1)".into()));
        }
        Ok(PrecisionContext {
            working_bits,
            quad_order_min,
            quad_order_max,
            convergence_tol: conv,
            tie_tol: tie,
        })
    }

    /// 256 bits, 1e-30 stabilization, 1e-12 tie gap.
    pub fn standard() -> Self {
        Self::new(256, 16, 4096, "1e-30", "1e-12").expect("standard context is valid")
    }

    /// Same tolerances at a caller-chosen bit count.
    pub fn with_bits(bits: u32) -> Result<Self, Error> {
        Self::new(bits, 16, 4096, "1e-30", "1e-12")
    }

    pub fn prec(&self) -> u32 {
        self.working_bits
    }

    pub fn real(&self, v: f64) -> MpReal {
        MpReal::from_f64(v, self.working_bits)
    }

    pub fn parse(&self, s: &str) -> Result<MpReal, Error> {
        MpReal::from_decimal_str(s, self.working_bits).map_err(Error::InvalidConfig)
    }
}

impl Default for PrecisionContext {
    fn default() -> Self {
        Self::standard()
    }
}
