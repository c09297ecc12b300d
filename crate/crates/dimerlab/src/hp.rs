//! Explicit-precision real arithmetic.
//!
//! [`HpReal`] wraps an arbitrary-precision binary float. Every value carries
//! its working precision in bits; binary operations evaluate at the larger of
//! the two operand precisions, so precision never degrades silently. All
//! rounding uses round-to-even. Conversions to and from integers and decimal
//! strings are exact or carry an explicit error bound.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;

use astro_float::{BigFloat, Consts, Radix, RoundingMode};
use num_bigint::{BigInt, BigUint};
use num_traits::{ToPrimitive, Zero};

use crate::{Error, Result};

const RM: RoundingMode = RoundingMode::ToEven;

/// Default working precision in bits for callers that do not choose one.
pub const DEFAULT_PRECISION: usize = 256;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(
        Consts::new().expect("constants cache allocation"),
    );
}

fn with_cc<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|c| f(&mut c.borrow_mut()))
}

/// Arbitrary-precision real number with explicit precision tracking.
#[derive(Clone, Debug)]
pub struct HpReal {
    v: BigFloat,
    prec: usize,
}

impl HpReal {
    fn wrap(v: BigFloat, prec: usize) -> Self {
        debug_assert!(!v.is_nan(), "NaN produced at {prec} bits");
        HpReal { v, prec }
    }

    pub fn zero(prec: usize) -> Self {
        HpReal::wrap(BigFloat::from_i8(0, prec.max(64)), prec.max(64))
    }

    pub fn one(prec: usize) -> Self {
        HpReal::from_u64(1, prec)
    }

    pub fn from_u64(u: u64, prec: usize) -> Self {
        let p = prec.max(64);
        HpReal::wrap(BigFloat::from_u64(u, p), p)
    }

    pub fn from_i64(i: i64, prec: usize) -> Self {
        let p = prec.max(64);
        HpReal::wrap(BigFloat::from_i64(i, p), p)
    }

    /// Exact conversion; the result precision is raised if the integer needs
    /// more bits than requested.
    pub fn from_bigint(i: &BigInt, prec: usize) -> Self {
        let bits = i.magnitude().bits() as usize;
        let p = prec.max(((bits + 63) / 64) * 64).max(64);
        let v = with_cc(|cc| BigFloat::parse(&i.to_string(), Radix::Dec, p, RM, cc));
        HpReal::wrap(v, p)
    }

    pub fn from_biguint(i: &BigUint, prec: usize) -> Self {
        HpReal::from_bigint(&BigInt::from(i.clone()), prec)
    }

    /// Rounded rational conversion at `prec` bits (plus guard bits).
    pub fn from_ratio(num: &BigInt, den: &BigInt, prec: usize) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let n = HpReal::from_bigint(num, prec + 64);
        let d = HpReal::from_bigint(den, prec + 64);
        n.div(&d)
    }

    /// Parses a decimal literal such as `-1.25e-30`.
    pub fn parse_decimal(s: &str, prec: usize) -> Result<Self> {
        let p = prec.max(64);
        let v = with_cc(|cc| BigFloat::parse(s, Radix::Dec, p, RM, cc));
        if v.is_nan() || v.is_inf() {
            return Err(Error::Domain(format!("unparseable decimal literal {s:?}")));
        }
        Ok(HpReal::wrap(v, p))
    }

    pub fn pi(prec: usize) -> Self {
        let p = prec.max(64);
        HpReal::wrap(with_cc(|cc| cc.pi(p, RM)), p)
    }

    /// Exact power of ten for `e >= 0`, correctly rounded reciprocal otherwise.
    pub fn pow10(e: i64, prec: usize) -> Self {
        let ten = BigUint::from(10u32);
        let mag = ten.pow(e.unsigned_abs() as u32);
        let m = HpReal::from_biguint(&mag, prec);
        if e >= 0 {
            m
        } else {
            HpReal::one(prec).div(&m).with_prec(prec)
        }
    }

    pub fn prec(&self) -> usize {
        self.prec
    }

    /// Re-rounds to `prec` bits (raising precision pads exactly).
    pub fn with_prec(&self, prec: usize) -> Self {
        let p = prec.max(64);
        let mut v = self.v.clone();
        v.set_precision(p, RM).expect("set_precision");
        HpReal::wrap(v, p)
    }

    fn join(&self, rhs: &HpReal) -> usize {
        self.prec.max(rhs.prec)
    }

    pub fn add(&self, rhs: &HpReal) -> HpReal {
        let p = self.join(rhs);
        HpReal::wrap(self.v.add(&rhs.v, p, RM), p)
    }

    pub fn sub(&self, rhs: &HpReal) -> HpReal {
        let p = self.join(rhs);
        HpReal::wrap(self.v.sub(&rhs.v, p, RM), p)
    }

    pub fn mul(&self, rhs: &HpReal) -> HpReal {
        let p = self.join(rhs);
        HpReal::wrap(self.v.mul(&rhs.v, p, RM), p)
    }

    pub fn div(&self, rhs: &HpReal) -> HpReal {
        assert!(!rhs.is_zero(), "division by zero");
        let p = self.join(rhs);
        HpReal::wrap(self.v.div(&rhs.v, p, RM), p)
    }

    pub fn neg(&self) -> HpReal {
        HpReal::wrap(self.v.neg(), self.prec)
    }

    pub fn abs(&self) -> HpReal {
        HpReal::wrap(self.v.abs(), self.prec)
    }

    pub fn mul_u64(&self, m: u64) -> HpReal {
        self.mul(&HpReal::from_u64(m, self.prec))
    }

    pub fn div_u64(&self, d: u64) -> HpReal {
        self.div(&HpReal::from_u64(d, self.prec))
    }

    pub fn recip(&self) -> HpReal {
        HpReal::one(self.prec).div(self)
    }

    pub fn half(&self) -> HpReal {
        self.div_u64(2)
    }

    pub fn sqrt(&self) -> HpReal {
        assert!(!self.is_negative(), "sqrt of negative value");
        HpReal::wrap(self.v.sqrt(self.prec, RM), self.prec)
    }

    pub fn exp(&self) -> HpReal {
        HpReal::wrap(with_cc(|cc| self.v.exp(self.prec, RM, cc)), self.prec)
    }

    pub fn ln(&self) -> HpReal {
        assert!(self.sign() > 0, "ln of non-positive value");
        HpReal::wrap(with_cc(|cc| self.v.ln(self.prec, RM, cc)), self.prec)
    }

    pub fn sin(&self) -> HpReal {
        HpReal::wrap(with_cc(|cc| self.v.sin(self.prec, RM, cc)), self.prec)
    }

    pub fn cos(&self) -> HpReal {
        HpReal::wrap(with_cc(|cc| self.v.cos(self.prec, RM, cc)), self.prec)
    }

    pub fn sinh(&self) -> HpReal {
        HpReal::wrap(with_cc(|cc| self.v.sinh(self.prec, RM, cc)), self.prec)
    }

    pub fn cosh(&self) -> HpReal {
        HpReal::wrap(with_cc(|cc| self.v.cosh(self.prec, RM, cc)), self.prec)
    }

    pub fn asinh(&self) -> HpReal {
        HpReal::wrap(with_cc(|cc| self.v.asinh(self.prec, RM, cc)), self.prec)
    }

    /// Integer power by binary exponentiation.
    pub fn powi(&self, mut e: u64) -> HpReal {
        let mut base = self.clone();
        let mut acc = HpReal::one(self.prec);
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    pub fn square(&self) -> HpReal {
        self.mul(self)
    }

    pub fn is_zero(&self) -> bool {
        self.v.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.v.is_negative() && !self.v.is_zero()
    }

    /// -1, 0, or +1.
    pub fn sign(&self) -> i8 {
        if self.v.is_zero() {
            0
        } else if self.v.is_negative() {
            -1
        } else {
            1
        }
    }

    pub fn cmp_total(&self, rhs: &HpReal) -> Ordering {
        self.v.partial_cmp(&rhs.v).expect("comparison of finite values")
    }

    pub fn lt(&self, rhs: &HpReal) -> bool {
        self.cmp_total(rhs) == Ordering::Less
    }

    pub fn le(&self, rhs: &HpReal) -> bool {
        self.cmp_total(rhs) != Ordering::Greater
    }

    pub fn gt(&self, rhs: &HpReal) -> bool {
        self.cmp_total(rhs) == Ordering::Greater
    }

    pub fn ge(&self, rhs: &HpReal) -> bool {
        self.cmp_total(rhs) != Ordering::Less
    }

    pub fn max_val(&self, rhs: &HpReal) -> HpReal {
        if self.ge(rhs) { self.clone() } else { rhs.clone() }
    }

    pub fn min_val(&self, rhs: &HpReal) -> HpReal {
        if self.le(rhs) { self.clone() } else { rhs.clone() }
    }

    /// Exact decomposition |self| = mantissa * 2^exp2 (mantissa = 0 for zero).
    fn to_mantissa_exp(&self) -> (BigUint, i64) {
        if self.is_zero() {
            return (BigUint::zero(), 0);
        }
        let (words, n, _sign, exp, _inexact) =
            self.v.as_raw_parts().expect("finite value has raw parts");
        let mut m = BigUint::zero();
        for &w in words.iter().rev() {
            m = (m << 64) | BigUint::from(w);
        }
        (m, exp as i64 - n as i64)
    }

    /// Nearest integer together with the exact distance to it.
    ///
    /// The gap lets callers certify that a value that should be integral
    /// really is: `gap <= 2^-32` is the acceptance threshold used by the
    /// counting routines.
    pub fn nearest_int(&self) -> (BigInt, HpReal) {
        if self.is_zero() {
            return (BigInt::zero(), HpReal::zero(self.prec));
        }
        let (m, e2) = self.to_mantissa_exp();
        let mag: BigUint = if e2 >= 0 {
            m << (e2 as u64)
        } else {
            let s = (-e2) as u64;
            let q = &m >> s;
            let r = &m - (&q << s);
            // round half away from zero; exact ties never certify anyway
            if (&r << 1u8) >= (BigUint::from(1u8) << s) {
                q + 1u8
            } else {
                q
            }
        };
        let mut int = BigInt::from(mag);
        if self.is_negative() {
            int = -int;
        }
        let gap = self.sub(&HpReal::from_bigint(&int, self.prec + 64)).abs();
        (int, gap)
    }

    /// Smallest `e` with |self| <= 2^e, or None for zero.
    pub fn log2_magnitude(&self) -> Option<i64> {
        if self.is_zero() {
            return None;
        }
        let (m, e2) = self.to_mantissa_exp();
        Some(m.bits() as i64 + e2)
    }

    /// True when |self| <= 2^log2_bound.
    pub fn abs_le_pow2(&self, log2_bound: i64) -> bool {
        if self.is_zero() {
            return true;
        }
        let (m, e2) = self.to_mantissa_exp();
        // |self| < 2^(bits + e2)
        let hi = m.bits() as i64 + e2;
        if hi <= log2_bound {
            return true;
        }
        // |self| >= 2^(bits - 1 + e2)
        if m.bits() as i64 - 1 + e2 > log2_bound {
            return false;
        }
        // borderline: compare exactly against 2^log2_bound
        let bound = if log2_bound >= 0 {
            HpReal::from_bigint(&(BigInt::from(1) << log2_bound as u64), self.prec)
        } else {
            let two_pow = HpReal::from_bigint(&(BigInt::from(1) << (-log2_bound) as u64), self.prec);
            two_pow.recip()
        };
        self.abs().le(&bound)
    }

    /// Rough magnitude as f64; only for non-certifying heuristics.
    pub fn to_f64(&self) -> f64 {
        if self.is_zero() {
            return 0.0;
        }
        let (m, e2) = self.to_mantissa_exp();
        let bits = m.bits();
        let take = bits.min(53);
        let top: BigUint = &m >> (bits - take);
        let top = top.to_f64().unwrap_or(0.0);
        let scale = e2 + (bits - take) as i64;
        let val = top * 2f64.powi(scale.clamp(-2000, 2000) as i32);
        if self.is_negative() { -val } else { val }
    }

    /// Deterministic scientific-notation rendering with `digits` significant
    /// digits, computed exactly over big integers.
    pub fn to_decimal(&self, digits: usize) -> String {
        assert!(digits >= 1);
        if self.is_zero() {
            return "0".to_string();
        }
        let (m, e2) = self.to_mantissa_exp();
        let bits = m.bits() as i64 + e2;
        let mut d10 = ((bits as f64 - 0.5) * std::f64::consts::LOG10_2).floor() as i64;
        let ten = BigUint::from(10u32);
        let (t, d10) = loop {
            let a = digits as i64 - 1 - d10;
            let mut num = m.clone();
            let mut den = BigUint::from(1u8);
            if e2 >= 0 {
                num <<= e2 as u64;
            } else {
                den <<= (-e2) as u64;
            }
            if a >= 0 {
                num *= ten.pow(a as u32);
            } else {
                den *= ten.pow((-a) as u32);
            }
            // round half up on the decimal digit string
            let t = ((num << 1u8) + &den) / (den << 1u8);
            let lo = ten.pow(digits as u32 - 1);
            let hi = ten.pow(digits as u32);
            if t < lo {
                d10 -= 1;
            } else if t >= hi {
                d10 += 1;
            } else {
                break (t, d10);
            }
        };
        let ds = t.to_string();
        let mut out = String::new();
        if self.is_negative() {
            out.push('-');
        }
        out.push_str(&ds[..1]);
        if digits > 1 {
            out.push('.');
            out.push_str(&ds[1..]);
        }
        out.push('e');
        out.push_str(&d10.to_string());
        out
    }
}

impl fmt::Display for HpReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // ~ one decimal digit per 3.32 bits
        let digits = ((self.prec as f64) * std::f64::consts::LOG10_2).floor() as usize;
        f.write_str(&self.to_decimal(digits.max(6)))
    }
}

impl PartialEq for HpReal {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_total(other) == Ordering::Equal
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;
    use std::str::FromStr;

    #[test]
    fn integer_round_trip_is_exact() {
        let big = BigInt::from_str("123456789012345678901234567890123456789").unwrap();
        let x = HpReal::from_bigint(&big, 64);
        let (r, gap) = x.nearest_int();
        assert_eq!(r, big);
        assert!(gap.is_zero());
    }

    #[test]
    fn nearest_int_reports_gap() {
        let x = HpReal::parse_decimal("41.99999999", 256).unwrap();
        let (r, gap) = x.nearest_int();
        assert_eq!(r, BigInt::from(42));
        assert!(!gap.is_zero());
        assert!(gap.abs_le_pow2(-26));
        assert!(!gap.abs_le_pow2(-32));
    }

    #[test]
    fn decimal_rendering_is_exact_and_stable() {
        let x = HpReal::from_u64(1, 256).div(&HpReal::from_u64(3, 256));
        let s = x.to_decimal(30);
        assert_eq!(s, "3.33333333333333333333333333333e-1");
        let y = HpReal::parse_decimal("0.6", 256).unwrap();
        assert_eq!(y.to_decimal(5), "6.0000e-1");
        assert_eq!(HpReal::zero(128).to_decimal(10), "0");
        let n = HpReal::from_i64(-12988816, 128);
        assert_eq!(n.to_decimal(8), "-1.2988816e7");
    }

    #[test]
    fn rounding_overflow_carries_into_exponent() {
        let x = HpReal::parse_decimal("0.99999999", 256).unwrap();
        assert_eq!(x.to_decimal(3), "1.00e0");
    }

    #[test]
    fn precision_promotion_on_mixed_ops() {
        let a = HpReal::from_u64(1, 128);
        let b = HpReal::from_u64(3, 320);
        assert_eq!(a.div(&b).prec(), 320);
        assert_eq!(a.add(&b).prec(), 320);
    }

    #[test]
    fn pi_and_trig_consistency() {
        let p = 256;
        let pi = HpReal::pi(p);
        let s = pi.div_u64(6).sin();
        let err = s.sub(&HpReal::parse_decimal("0.5", p).unwrap()).abs();
        assert!(err.abs_le_pow2(-(p as i64) + 8));
    }

    #[test]
    fn hyperbolic_identity() {
        let p = 256;
        let x = HpReal::parse_decimal("0.7", p).unwrap();
        let lhs = x.cosh().square().sub(&x.sinh().square());
        let err = lhs.sub(&HpReal::one(p)).abs();
        assert!(err.abs_le_pow2(-(p as i64) + 8));
    }

    #[test]
    fn asinh_inverts_sinh() {
        let p = 256;
        let x = HpReal::parse_decimal("1.25", p).unwrap();
        let err = x.sinh().asinh().sub(&x).abs();
        assert!(err.abs_le_pow2(-(p as i64) + 8));
    }

    #[test]
    fn pow10_matches_parse() {
        let p = 192;
        let a = HpReal::pow10(-30, p);
        let b = HpReal::parse_decimal("1e-30", p).unwrap();
        let err = a.sub(&b).abs();
        assert!(err.abs_le_pow2(-(p as i64) - 90));
    }

    #[test]
    fn powi_matches_repeated_mul() {
        let p = 128;
        let x = HpReal::parse_decimal("1.5", p).unwrap();
        assert_eq!(x.powi(4), x.mul(&x).mul(&x).mul(&x));
        assert_eq!(x.powi(0), HpReal::one(p));
    }
}
