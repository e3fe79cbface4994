//! Configurable-precision binary floating point on top of `num-bigint`.
//!
//! A value is `mant * 2^exp` with `|mant| < 2^prec`. Arithmetic rounds to
//! nearest (ties away from zero) at the precision of the widest operand.
//! This is not IEEE-correctly-rounded arithmetic; every operation is accurate
//! to within one ulp at the working precision, which is what the rest of the
//! crate needs (tolerances sit far above 2^-prec).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};
use std::sync::{Mutex, OnceLock};

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, Zero};

/// Arbitrary-precision real number: `mant * 2^exp` at `prec` significand bits.
#[derive(Clone, Debug)]
pub struct MpReal {
    mant: BigInt,
    exp: i64,
    prec: u32,
}

fn bit_len(m: &BigInt) -> u64 {
    m.magnitude().bits()
}

impl MpReal {
    pub fn zero(prec: u32) -> Self {
        MpReal { mant: BigInt::zero(), exp: 0, prec }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        MpReal { mant: BigInt::from(v), exp: 0, prec }.rounded()
    }

    pub fn from_bigint(v: BigInt, prec: u32) -> Self {
        MpReal { mant: v, exp: 0, prec }.rounded()
    }

    /// Exact conversion (f64 values are dyadic rationals).
    pub fn from_f64(v: f64, prec: u32) -> Self {
        assert!(v.is_finite(), "cannot convert non-finite f64");
        if v == 0.0 {
            return Self::zero(prec);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i64 } else { 1 };
        let biased = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & 0x000f_ffff_ffff_ffff;
        let (mant, exp) = if biased == 0 {
            (frac, -1074i64)
        } else {
            (frac | 0x0010_0000_0000_0000, biased - 1075)
        };
        MpReal { mant: BigInt::from(sign * mant as i64), exp, prec }.rounded()
    }

    pub fn prec(&self) -> u32 {
        self.prec
    }

    pub fn with_prec(&self, prec: u32) -> Self {
        MpReal { mant: self.mant.clone(), exp: self.exp, prec }.rounded()
    }

    pub fn is_zero(&self) -> bool {
        self.mant.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mant.sign() == Sign::Minus
    }

    pub fn is_positive(&self) -> bool {
        self.mant.sign() == Sign::Plus
    }

    /// Round the mantissa down to `prec` bits (nearest, ties away from zero).
    fn rounded(mut self) -> Self {
        let bits = bit_len(&self.mant);
        if bits <= self.prec as u64 {
            return self;
        }
        let shift = bits - self.prec as u64;
        let neg = self.mant.sign() == Sign::Minus;
        let mut mag = self.mant.magnitude().clone();
        let round_bit = (&mag >> (shift - 1)) & num_bigint::BigUint::from(1u8);
        mag >>= shift;
        if !round_bit.is_zero() {
            mag += 1u8;
        }
        self.mant = BigInt::from_biguint(if neg { Sign::Minus } else { Sign::Plus }, mag);
        self.exp += shift as i64;
        self
    }

    /// Exponent of the most significant bit: value in [2^e, 2^(e+1)).
    pub fn msb_exp(&self) -> i64 {
        debug_assert!(!self.is_zero());
        self.exp + bit_len(&self.mant) as i64 - 1
    }

    /// `self * 2^k`, exact.
    pub fn ldexp(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        MpReal { mant: self.mant.clone(), exp: self.exp + k, prec: self.prec }
    }

    pub fn abs(&self) -> Self {
        MpReal { mant: self.mant.abs(), exp: self.exp, prec: self.prec }
    }

    pub fn recip(&self) -> Self {
        Self::one(self.prec).div_r(self)
    }

    fn add_signed(&self, rhs: &Self, negate_rhs: bool) -> Self {
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            let mut r = rhs.with_prec(prec);
            if negate_rhs {
                r.mant = -r.mant;
            }
            return r;
        }
        if rhs.is_zero() {
            return self.with_prec(prec);
        }
        // If the operands' magnitudes are too far apart, the small one only
        // nudges the last bit; skip the giant shift.
        let (hi, lo) = (self.msb_exp(), rhs.msb_exp());
        if hi - lo > prec as i64 + 4 {
            return self.with_prec(prec);
        }
        if lo - hi > prec as i64 + 4 {
            let mut r = rhs.with_prec(prec);
            if negate_rhs {
                r.mant = -r.mant;
            }
            return r;
        }
        let exp = self.exp.min(rhs.exp);
        let a = &self.mant << (self.exp - exp) as u64;
        let mut b = &rhs.mant << (rhs.exp - exp) as u64;
        if negate_rhs {
            b = -b;
        }
        MpReal { mant: a + b, exp, prec }.rounded()
    }

    pub fn add_r(&self, rhs: &Self) -> Self {
        self.add_signed(rhs, false)
    }

    pub fn sub_r(&self, rhs: &Self) -> Self {
        self.add_signed(rhs, true)
    }

    pub fn mul_r(&self, rhs: &Self) -> Self {
        let prec = self.prec.max(rhs.prec);
        MpReal { mant: &self.mant * &rhs.mant, exp: self.exp + rhs.exp, prec }.rounded()
    }

    pub fn div_r(&self, rhs: &Self) -> Self {
        assert!(!rhs.is_zero(), "division by zero");
        let prec = self.prec.max(rhs.prec);
        if self.is_zero() {
            return Self::zero(prec);
        }
        // Scale so the quotient carries prec + 3 significant bits.
        let shift = prec as i64 + 3 + bit_len(&rhs.mant) as i64 - bit_len(&self.mant) as i64;
        let (num, exp) = if shift >= 0 {
            (&self.mant << shift as u64, self.exp - shift - rhs.exp)
        } else {
            (self.mant.clone(), self.exp - rhs.exp)
        };
        let q = num / &rhs.mant;
        MpReal { mant: q, exp, prec }.rounded()
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        MpReal { mant: &self.mant * k, exp: self.exp, prec: self.prec }.rounded()
    }

    pub fn div_i64(&self, k: i64) -> Self {
        self.div_r(&Self::from_i64(k, self.prec))
    }

    pub fn square(&self) -> Self {
        self.mul_r(self)
    }

    pub fn cmp_r(&self, rhs: &Self) -> Ordering {
        let ls = self.mant.sign();
        let rs = rhs.mant.sign();
        if ls != rs {
            return if ls == Sign::Minus || (ls == Sign::NoSign && rs == Sign::Plus) {
                Ordering::Less
            } else {
                Ordering::Greater
            };
        }
        if self.is_zero() {
            return Ordering::Equal;
        }
        let (he, le) = (self.msb_exp(), rhs.msb_exp());
        let mag = if he != le {
            he.cmp(&le)
        } else {
            let exp = self.exp.min(rhs.exp);
            let a = self.mant.magnitude() << (self.exp - exp) as u64;
            let b = rhs.mant.magnitude() << (rhs.exp - exp) as u64;
            a.cmp(&b)
        };
        if ls == Sign::Minus {
            mag.reverse()
        } else {
            mag
        }
    }

    pub fn max_r(&self, rhs: &Self) -> Self {
        if self.cmp_r(rhs) == Ordering::Less {
            rhs.clone()
        } else {
            self.clone()
        }
    }

    pub fn min_r(&self, rhs: &Self) -> Self {
        if self.cmp_r(rhs) == Ordering::Greater {
            rhs.clone()
        } else {
            self.clone()
        }
    }

    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let bits = bit_len(&self.mant);
        let (top, e) = if bits > 64 {
            let shift = bits - 64;
            let top: BigInt = &self.mant >> shift;
            (top, self.exp + shift as i64)
        } else {
            (self.mant.clone(), self.exp)
        };
        let t = top.to_string().parse::<f64>().unwrap_or(0.0);
        if e > 1100 {
            if t > 0.0 {
                f64::INFINITY
            } else {
                f64::NEG_INFINITY
            }
        } else if e < -1180 {
            0.0
        } else {
            t * 2f64.powi(e as i32)
        }
    }

    /// Integer square root based Newton-free sqrt; `self >= 0`.
    pub fn sqrt(&self) -> Self {
        assert!(!self.is_negative(), "sqrt of negative value");
        if self.is_zero() {
            return self.clone();
        }
        let prec = self.prec;
        // Scale mantissa so the integer sqrt has ~prec+2 bits and the
        // exponent to pull out is even.
        let bits = bit_len(&self.mant) as i64;
        let mut shift = 2 * (prec as i64 + 2) - bits;
        if (self.exp - shift) % 2 != 0 {
            shift += 1;
        }
        let scaled: BigInt = if shift >= 0 {
            &self.mant << shift as u64
        } else {
            &self.mant >> (-shift) as u64
        };
        let root = scaled.sqrt();
        MpReal { mant: root, exp: (self.exp - shift) / 2, prec }.rounded()
    }

    pub fn powi(&self, n: i64) -> Self {
        if n == 0 {
            return Self::one(self.prec);
        }
        let mut base = if n < 0 { self.recip() } else { self.clone() };
        let mut k = n.unsigned_abs();
        let mut acc = Self::one(self.prec);
        while k > 0 {
            if k & 1 == 1 {
                acc = acc.mul_r(&base);
            }
            base = base.square();
            k >>= 1;
        }
        acc
    }

    /// One unit in the last place of 1.0 at this value's precision.
    pub fn eps(prec: u32) -> Self {
        MpReal { mant: BigInt::from(1), exp: -(prec as i64), prec }
    }

    // ---- decimal conversions ----

    /// Parse a decimal string like `-1.25e-3`. Rounds to `prec` bits.
    pub fn from_decimal_str(s: &str, prec: u32) -> Result<Self, String> {
        let s = s.trim();
        if s.is_empty() {
            return Err("empty numeric string".into());
        }
        let (mant_part, exp10) = match s.find(['e', 'E']) {
            Some(i) => {
                let e: i64 = s[i + 1..]
                    .parse()
                    .map_err(|_| format!("bad exponent in {s:?}"))?;
                (&s[..i], e)
            }
            None => (s, 0),
        };
        let (sign, digits_part) = match mant_part.strip_prefix('-') {
            Some(rest) => (-1i64, rest),
            None => (1, mant_part.strip_prefix('+').unwrap_or(mant_part)),
        };
        let (int_part, frac_part) = match digits_part.find('.') {
            Some(i) => (&digits_part[..i], &digits_part[i + 1..]),
            None => (digits_part, ""),
        };
        let digits: String = format!("{int_part}{frac_part}");
        if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!("bad numeric literal {s:?}"));
        }
        let d: BigInt = digits.parse().map_err(|_| format!("bad digits in {s:?}"))?;
        let d = d * sign;
        let e = exp10 - frac_part.len() as i64;
        let work = prec + 64;
        let base = MpReal { mant: d, exp: 0, prec: work }.rounded();
        let ten = MpReal::from_i64(10, work);
        let scaled = if e >= 0 {
            base.mul_r(&ten.powi(e))
        } else {
            base.div_r(&ten.powi(-e))
        };
        Ok(scaled.with_prec(prec))
    }

    /// Deterministic decimal rendering with `sig` significant digits.
    pub fn to_decimal_string(&self, sig: usize) -> String {
        assert!(sig >= 1);
        if self.is_zero() {
            return "0".to_string();
        }
        let neg = self.is_negative();
        // Estimate the decimal exponent from the binary one.
        let e2 = self.msb_exp();
        let mut e10 = ((e2 as i128 * 30103) / 100000) as i64;
        let mut digits = loop {
            // digits = round(|v| * 10^(sig-1-e10)) should have sig digits.
            let s = sig as i64 - 1 - e10;
            let mag = self.mant.magnitude();
            let num = if s >= 0 {
                mag * num_bigint::BigUint::from(10u8).pow(s as u32)
            } else {
                mag.clone()
            };
            let num: BigInt = BigInt::from(num);
            let shifted = if self.exp >= 0 {
                num << self.exp as u64
            } else {
                // round(num / 2^-exp)
                let sh = (-self.exp) as u64;
                let half: BigInt = BigInt::from(1) << (sh - 1);
                (num + half) >> sh
            };
            let shifted = if s < 0 {
                let den = BigInt::from(10).pow((-s) as u32);
                let half = &den / 2;
                (shifted + half) / den
            } else {
                shifted
            };
            let ds = shifted.to_string();
            let n = ds.len() as i64;
            if n == sig as i64 {
                break ds;
            }
            e10 += n - sig as i64;
            // Re-run with the corrected exponent (at most a couple of laps).
            if n == 0 {
                break "0".repeat(sig);
            }
        };
        // Normalize: strip trailing zeros for compactness but keep at least one digit.
        while digits.len() > 1 && digits.ends_with('0') {
            digits.pop();
        }
        let mut out = String::new();
        if neg {
            out.push('-');
        }
        out.push_str(&digits[..1]);
        if digits.len() > 1 {
            out.push('.');
            out.push_str(&digits[1..]);
        }
        if e10 != 0 {
            out.push('e');
            out.push_str(&e10.to_string());
        }
        out
    }

    // ---- elementary functions ----

    /// Natural log; `self > 0`.
    pub fn ln(&self) -> Self {
        assert!(self.is_positive(), "ln of non-positive value");
        let prec = self.prec;
        let work = prec + 64;
        // self = m * 2^k with m in [1, 2)
        let k = self.msb_exp();
        let m = self.with_prec(work).ldexp(-k);
        let one = MpReal::one(work);
        let t = m.sub_r(&one).div_r(&m.add_r(&one));
        let mut sum = t.clone();
        let t2 = t.square();
        let mut pow = t.clone();
        let mut i = 1i64;
        loop {
            pow = pow.mul_r(&t2);
            i += 2;
            let term = pow.div_i64(i);
            if term.is_zero() || term.msb_exp() < sum.msb_exp() - work as i64 - 4 {
                break;
            }
            sum = sum.add_r(&term);
        }
        let ln_m = sum.ldexp(1);
        let r = ln_m.add_r(&ln2(work).mul_i64(k));
        r.with_prec(prec)
    }

    pub fn exp(&self) -> Self {
        let prec = self.prec;
        let work = prec + 64;
        let x = self.with_prec(work);
        if x.is_zero() {
            return Self::one(prec);
        }
        let l2 = ln2(work);
        // k = nearest integer to x / ln2
        let k = {
            let q = x.div_r(&l2).to_f64();
            q.round() as i64
        };
        let r = x.sub_r(&l2.mul_i64(k));
        let mut term = MpReal::one(work);
        let mut sum = MpReal::one(work);
        let mut i = 1i64;
        loop {
            term = term.mul_r(&r).div_i64(i);
            i += 1;
            if term.is_zero() || term.msb_exp() < -(work as i64) - 4 {
                break;
            }
            sum = sum.add_r(&term);
        }
        sum.ldexp(k).with_prec(prec)
    }

    /// `self^y = exp(y ln self)`; requires `self > 0`.
    pub fn pow(&self, y: &Self) -> Self {
        self.ln().mul_r(y).exp()
    }

    /// Simultaneous sine and cosine via quadrant reduction and Taylor series.
    pub fn sin_cos(&self) -> (Self, Self) {
        let prec = self.prec;
        let work = prec + 64;
        let x = self.with_prec(work);
        let pi_w = pi(work);
        let half_pi = pi_w.ldexp(-1);
        // quadrant index q = round(x / (pi/2)), r = x - q pi/2, |r| <= pi/4
        let q = {
            let t = x.div_r(&half_pi).to_f64();
            t.round() as i64
        };
        let r = x.sub_r(&half_pi.mul_i64(q));
        // Taylor for sin r and cos r
        let r2 = r.square();
        let mut sin_r = r.clone();
        let mut term = r.clone();
        let mut i = 1i64;
        loop {
            term = term.mul_r(&r2).div_i64(-(2 * i) * (2 * i + 1));
            if term.is_zero() || term.msb_exp() < -(work as i64) - 4 {
                break;
            }
            sin_r = sin_r.add_r(&term);
            i += 1;
        }
        let mut cos_r = MpReal::one(work);
        let mut termc = MpReal::one(work);
        let mut j = 1i64;
        loop {
            termc = termc.mul_r(&r2).div_i64(-(2 * j - 1) * (2 * j));
            if termc.is_zero() || termc.msb_exp() < -(work as i64) - 4 {
                break;
            }
            cos_r = cos_r.add_r(&termc);
            j += 1;
        }
        let (s, c) = match q.rem_euclid(4) {
            0 => (sin_r, cos_r),
            1 => (cos_r, -sin_r),
            2 => (-sin_r, -cos_r),
            _ => (-cos_r, sin_r),
        };
        (s.with_prec(prec), c.with_prec(prec))
    }
}

/// atanh(1/q) at `prec` bits via its Taylor series, in pure integer arithmetic.
fn atanh_inv(q: u64, prec: u32) -> MpReal {
    let scale_bits = prec as u64 + 16;
    let one: BigInt = BigInt::from(1) << scale_bits;
    let q2 = BigInt::from(q) * BigInt::from(q);
    let mut pow = &one / BigInt::from(q); // (1/q)^(2i+1) scaled
    let mut total = pow.clone();
    let mut i = 1u64;
    loop {
        pow = &pow / &q2;
        if pow.is_zero() {
            break;
        }
        let term = &pow / BigInt::from(2 * i + 1);
        if term.is_zero() {
            break;
        }
        total += term;
        i += 1;
    }
    MpReal { mant: total, exp: -(scale_bits as i64), prec }.rounded()
}

/// atan(1/q) at `prec` bits via its Taylor series, in pure integer arithmetic.
fn atan_inv(q: u64, prec: u32) -> MpReal {
    let scale_bits = prec as u64 + 16;
    let one: BigInt = BigInt::from(1) << scale_bits;
    let q2 = BigInt::from(q) * BigInt::from(q);
    let mut pow = &one / BigInt::from(q);
    let mut total = pow.clone();
    let mut i = 1u64;
    loop {
        pow = &pow / &q2;
        if pow.is_zero() {
            break;
        }
        let term = &pow / BigInt::from(2 * i + 1);
        if term.is_zero() {
            break;
        }
        if i % 2 == 1 {
            total -= term;
        } else {
            total += term;
        }
        i += 1;
    }
    MpReal { mant: total, exp: -(scale_bits as i64), prec }.rounded()
}

fn const_cache() -> &'static Mutex<HashMap<(u32, &'static str), MpReal>> {
    static CACHE: OnceLock<Mutex<HashMap<(u32, &'static str), MpReal>>> = OnceLock::new();
    CACHE.get_or_init(|| Mutex::new(HashMap::new()))
}

/// pi at `prec` bits (Machin's formula), cached.
pub fn pi(prec: u32) -> MpReal {
    {
        let cache = const_cache().lock().unwrap();
        if let Some(v) = cache.get(&(prec, "pi")) {
            return v.clone();
        }
    }
    let work = prec + 32;
    let v = atan_inv(5, work)
        .ldexp(4)
        .sub_r(&atan_inv(239, work).ldexp(2))
        .with_prec(prec);
    const_cache().lock().unwrap().insert((prec, "pi"), v.clone());
    v
}

/// ln 2 at `prec` bits, cached.
pub fn ln2(prec: u32) -> MpReal {
    {
        let cache = const_cache().lock().unwrap();
        if let Some(v) = cache.get(&(prec, "ln2")) {
            return v.clone();
        }
    }
    let v = atanh_inv(3, prec + 16).ldexp(1).with_prec(prec);
    const_cache().lock().unwrap().insert((prec, "ln2"), v.clone());
    v
}

impl fmt::Display for MpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_decimal_string(30))
    }
}

impl PartialEq for MpReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_r(other) == Ordering::Equal
    }
}

impl PartialOrd for MpReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp_r(other))
    }
}

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $inner:ident) => {
        impl $trait for &MpReal {
            type Output = MpReal;
            fn $method(self, rhs: &MpReal) -> MpReal {
                self.$inner(rhs)
            }
        }
        impl $trait for MpReal {
            type Output = MpReal;
            fn $method(self, rhs: MpReal) -> MpReal {
                (&self).$inner(&rhs)
            }
        }
        impl $trait<&MpReal> for MpReal {
            type Output = MpReal;
            fn $method(self, rhs: &MpReal) -> MpReal {
                (&self).$inner(rhs)
            }
        }
    };
}

impl_binop!(Add, add, add_r);
impl_binop!(Sub, sub, sub_r);
impl_binop!(Mul, mul, mul_r);
impl_binop!(Div, div, div_r);

impl Neg for &MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        MpReal { mant: -self.mant.clone(), exp: self.exp, prec: self.prec }
    }
}

impl Neg for MpReal {
    type Output = MpReal;
    fn neg(self) -> MpReal {
        MpReal { mant: -self.mant, exp: self.exp, prec: self.prec }
    }
}

impl AddAssign<&MpReal> for MpReal {
    fn add_assign(&mut self, rhs: &MpReal) {
        *self = self.add_r(rhs);
    }
}

impl SubAssign<&MpReal> for MpReal {
    fn sub_assign(&mut self, rhs: &MpReal) {
        *self = self.sub_r(rhs);
    }
}

impl MulAssign<&MpReal> for MpReal {
    fn mul_assign(&mut self, rhs: &MpReal) {
        *self = self.mul_r(rhs);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const P: u32 = 256;

    fn close(a: &MpReal, b: &MpReal, tol_log2: i64) {
        let d = a.sub_r(b).abs();
        if d.is_zero() {
            return;
        }
        assert!(
            d.msb_exp() < tol_log2,
            "difference 2^{} exceeds 2^{tol_log2}: {} vs {}",
            d.msb_exp(),
            a,
            b
        );
    }

    #[test]
    fn arithmetic_basics() {
        let a = MpReal::from_decimal_str("1.5", P).unwrap();
        let b = MpReal::from_decimal_str("-0.25", P).unwrap();
        assert_eq!((a.clone() + b.clone()).to_f64(), 1.25);
        assert_eq!((a.clone() * b.clone()).to_f64(), -0.375);
        assert_eq!((a.clone() / b).to_f64(), -6.0);
        assert_eq!(a.powi(3).to_f64(), 3.375);
    }

    #[test]
    fn sqrt_two() {
        let two = MpReal::from_i64(2, P);
        let r = two.sqrt();
        close(&r.square(), &two, -250);
        // First digits of sqrt(2)
        assert!(r.to_decimal_string(20).starts_with("1.414213562373095048"));
    }

    #[test]
    fn pi_digits() {
        let p = pi(P);
        let s = p.to_decimal_string(40);
        assert!(
            s.starts_with("3.14159265358979323846264338327950288419"),
            "pi = {s}"
        );
    }

    #[test]
    fn ln_exp_roundtrip() {
        let x = MpReal::from_decimal_str("3.7", P).unwrap();
        let l = x.ln();
        close(&l.exp(), &x, -248);
        // ln 3 reference value
        let three = MpReal::from_i64(3, P);
        assert!(three
            .ln()
            .to_decimal_string(20)
            .starts_with("1.098612288668109691"));
    }

    #[test]
    fn exp_one() {
        let e = MpReal::one(P).exp();
        assert!(e.to_decimal_string(20).starts_with("2.718281828459045235"));
    }

    #[test]
    fn decimal_roundtrip() {
        let x = MpReal::from_decimal_str("-4.9303806576313237838233035330174e-32", P).unwrap();
        let y = MpReal::from_decimal_str(&x.to_decimal_string(60), P).unwrap();
        close(&x, &y, x.msb_exp() - 190);
    }

    #[test]
    fn far_apart_addition() {
        let big = MpReal::from_i64(1, P).ldexp(400);
        let tiny = MpReal::from_i64(1, P);
        let s = big.add_r(&tiny);
        assert_eq!(s.cmp_r(&big), Ordering::Equal);
    }

    #[test]
    fn comparison_orders_mixed_magnitudes() {
        let a = MpReal::from_f64(-3.5, P);
        let b = MpReal::from_f64(0.001, P);
        let c = MpReal::from_f64(1e30, P);
        assert!(a.cmp_r(&b) == Ordering::Less);
        assert!(c.cmp_r(&b) == Ordering::Greater);
        assert!(b.cmp_r(&b) == Ordering::Equal);
    }
}
