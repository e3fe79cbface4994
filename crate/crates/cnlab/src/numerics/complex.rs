//! Complex arithmetic over [`MpReal`].

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use super::real::MpReal;

#[derive(Clone, Debug, PartialEq)]
pub struct MpComplex {
    pub re: MpReal,
    pub im: MpReal,
}

impl MpComplex {
    pub fn new(re: MpReal, im: MpReal) -> Self {
        MpComplex { re, im }
    }

    pub fn zero(prec: u32) -> Self {
        MpComplex { re: MpReal::zero(prec), im: MpReal::zero(prec) }
    }

    pub fn one(prec: u32) -> Self {
        MpComplex { re: MpReal::one(prec), im: MpReal::zero(prec) }
    }

    pub fn i(prec: u32) -> Self {
        MpComplex { re: MpReal::zero(prec), im: MpReal::one(prec) }
    }

    pub fn from_real(re: MpReal) -> Self {
        let prec = re.prec();
        MpComplex { re, im: MpReal::zero(prec) }
    }

    pub fn from_f64(re: f64, im: f64, prec: u32) -> Self {
        MpComplex { re: MpReal::from_f64(re, prec), im: MpReal::from_f64(im, prec) }
    }

    pub fn prec(&self) -> u32 {
        self.re.prec().max(self.im.prec())
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        MpComplex { re: self.re.clone(), im: -self.im.clone() }
    }

    pub fn norm_sqr(&self) -> MpReal {
        self.re.square().add_r(&self.im.square())
    }

    pub fn abs(&self) -> MpReal {
        self.norm_sqr().sqrt()
    }

    pub fn scale(&self, k: &MpReal) -> Self {
        MpComplex { re: self.re.mul_r(k), im: self.im.mul_r(k) }
    }

    pub fn unscale(&self, k: &MpReal) -> Self {
        MpComplex { re: self.re.div_r(k), im: self.im.div_r(k) }
    }

    pub fn mul_c(&self, rhs: &Self) -> Self {
        MpComplex {
            re: self.re.mul_r(&rhs.re).sub_r(&self.im.mul_r(&rhs.im)),
            im: self.re.mul_r(&rhs.im).add_r(&self.im.mul_r(&rhs.re)),
        }
    }

    pub fn div_c(&self, rhs: &Self) -> Self {
        let d = rhs.norm_sqr();
        self.mul_c(&rhs.conj()).unscale(&d)
    }

    pub fn recip(&self) -> Self {
        let d = self.norm_sqr();
        self.conj().unscale(&d)
    }

    pub fn powi(&self, n: i64) -> Self {
        let prec = self.prec();
        if n == 0 {
            return Self::one(prec);
        }
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one(prec);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_c(&base);
            }
            base = base.mul_c(&base);
            k >>= 1;
        }
        acc
    }

    /// Principal square root.
    pub fn sqrt(&self) -> Self {
        let prec = self.prec();
        if self.is_zero() {
            return Self::zero(prec);
        }
        let r = self.abs();
        let half = MpReal::from_f64(0.5, prec);
        let re = r.add_r(&self.re).mul_r(&half).sqrt();
        let im_mag = r.sub_r(&self.re).mul_r(&half).sqrt();
        let im = if self.im.is_negative() { -im_mag } else { im_mag };
        MpComplex { re, im }
    }

    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }
}

impl fmt::Display for MpComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im.is_negative() {
            write!(f, "{}-{}i", self.re, self.im.abs())
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

macro_rules! impl_cbinop {
    ($trait:ident, $method:ident, $body:expr) => {
        impl $trait for &MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: &MpComplex) -> MpComplex {
                let f: fn(&MpComplex, &MpComplex) -> MpComplex = $body;
                f(self, rhs)
            }
        }
        impl $trait for MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: MpComplex) -> MpComplex {
                let f: fn(&MpComplex, &MpComplex) -> MpComplex = $body;
                f(&self, &rhs)
            }
        }
        impl $trait<&MpComplex> for MpComplex {
            type Output = MpComplex;
            fn $method(self, rhs: &MpComplex) -> MpComplex {
                let f: fn(&MpComplex, &MpComplex) -> MpComplex = $body;
                f(&self, rhs)
            }
        }
    };
}

impl_cbinop!(Add, add, |a, b| MpComplex {
    re: a.re.add_r(&b.re),
    im: a.im.add_r(&b.im)
});
impl_cbinop!(Sub, sub, |a, b| MpComplex {
    re: a.re.sub_r(&b.re),
    im: a.im.sub_r(&b.im)
});
impl_cbinop!(Mul, mul, |a, b| a.mul_c(b));
impl_cbinop!(Div, div, |a, b| a.div_c(b));

impl Neg for &MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex { re: -self.re.clone(), im: -self.im.clone() }
    }
}

impl Neg for MpComplex {
    type Output = MpComplex;
    fn neg(self) -> MpComplex {
        MpComplex { re: -self.re, im: -self.im }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn complex_field_ops() {
        let p = 128;
        let a = MpComplex::from_f64(1.0, 2.0, p);
        let b = MpComplex::from_f64(-3.0, 0.5, p);
        let prod = a.mul_c(&b);
        assert_eq!(prod.to_f64(), (-4.0, -5.5));
        let q = prod.div_c(&b);
        let (re, im) = q.to_f64();
        assert!((re - 1.0).abs() < 1e-30 && (im - 2.0).abs() < 1e-30);
    }

    #[test]
    fn principal_sqrt() {
        let p = 128;
        let z = MpComplex::from_f64(0.0, 2.0, p);
        let r = z.sqrt();
        let (re, im) = r.to_f64();
        assert!((re - 1.0).abs() < 1e-30 && (im - 1.0).abs() < 1e-30);
        let z2 = MpComplex::from_f64(-1.0, 0.0, p);
        let r2 = z2.sqrt();
        let (re2, im2) = r2.to_f64();
        assert!(re2.abs() < 1e-30 && (im2 - 1.0).abs() < 1e-30);
    }
}
