//! A double-precision mantissa with a 64-bit exponent.
//!
//! Gram-Schmidt quantities of the attack lattices span thousands of binary
//! orders of magnitude, far outside the `f64` exponent range, while 53 bits
//! of relative precision are enough to steer the exact integer row
//! operations.

use std::cmp::Ordering;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};

const MANT_MASK: u64 = (1u64 << 52) - 1;

/// `m * 2^e` with `m == 0` or `0.5 <= |m| < 1`.
#[derive(Clone, Copy, Debug, Default)]
pub struct ExtFloat {
    m: f64,
    e: i64,
}

#[inline]
fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((k + 1023) as u64) << 52)
}

impl ExtFloat {
    pub const ZERO: ExtFloat = ExtFloat { m: 0.0, e: 0 };

    #[inline]
    pub fn new(m: f64, e: i64) -> Self {
        if m == 0.0 || !m.is_finite() {
            debug_assert!(m.is_finite(), "non-finite mantissa");
            return Self::ZERO;
        }
        let bits = m.to_bits();
        let raw_exp = ((bits >> 52) & 0x7ff) as i64;
        if raw_exp == 0 {
            // subnormal: rescale into the normal range first
            return Self::new(m * pow2(64), e - 64);
        }
        let sign = bits & (1u64 << 63);
        let mant = f64::from_bits(sign | (1022u64 << 52) | (bits & MANT_MASK));
        ExtFloat { m: mant, e: e + raw_exp - 1022 }
    }

    pub fn from_f64(x: f64) -> Self {
        Self::new(x, 0)
    }

    pub fn from_i64(x: i64) -> Self {
        Self::new(x as f64, 0)
    }

    /// Rounds the top 64 bits of `x`.
    pub fn from_bigint(x: &BigInt) -> Self {
        let bits = x.bits();
        if bits <= 63 {
            return Self::new(x.to_i64().unwrap() as f64, 0);
        }
        let shift = bits - 63;
        let top = (x >> shift).to_i64().unwrap();
        Self::new(top as f64, shift as i64)
    }

    #[inline]
    pub fn is_zero(&self) -> bool {
        self.m == 0.0
    }

    #[inline]
    pub fn abs(self) -> Self {
        ExtFloat { m: self.m.abs(), e: self.e }
    }

    #[inline]
    pub fn signum(self) -> f64 {
        if self.m == 0.0 {
            0.0
        } else {
            self.m.signum()
        }
    }

    /// Binary exponent `e` with `2^(e-1) <= |x| < 2^e`.
    pub fn exponent(&self) -> i64 {
        self.e
    }

    /// Lossy conversion that saturates to `±inf` or `0`.
    pub fn to_f64(self) -> f64 {
        if self.m == 0.0 {
            0.0
        } else if self.e > 1023 {
            self.m.signum() * f64::INFINITY
        } else if self.e < -1070 {
            0.0
        } else if self.e < -1021 {
            self.m * pow2(self.e + 64) * pow2(-64)
        } else {
            self.m * pow2(self.e)
        }
    }

    /// Multiplies by `2^k`.
    pub fn ldexp(self, k: i64) -> Self {
        if self.m == 0.0 {
            self
        } else {
            ExtFloat { m: self.m, e: self.e + k }
        }
    }

    /// Nearest integer (halves away from zero).
    pub fn round_to_bigint(self) -> BigInt {
        if self.m == 0.0 || self.e <= -1 {
            // |x| < 0.5
            return BigInt::zero();
        }
        if self.e <= 62 {
            let v = (self.m * pow2(self.e)).round();
            return BigInt::from(v as i64);
        }
        let top = (self.m * pow2(53)) as i64;
        BigInt::from(top) << ((self.e - 53) as u64)
    }

    /// Nearest integer, or `None` when it does not fit an `i64`.
    pub fn round_to_i64(self) -> Option<i64> {
        if self.m == 0.0 || self.e <= -1 {
            return Some(0);
        }
        if self.e <= 62 {
            return Some((self.m * pow2(self.e)).round() as i64);
        }
        None
    }

    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }
}

impl Neg for ExtFloat {
    type Output = ExtFloat;
    #[inline]
    fn neg(self) -> Self {
        ExtFloat { m: -self.m, e: self.e }
    }
}

impl Add for ExtFloat {
    type Output = ExtFloat;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        if self.m == 0.0 {
            return rhs;
        }
        if rhs.m == 0.0 {
            return self;
        }
        let (hi, lo) = if self.e >= rhs.e { (self, rhs) } else { (rhs, self) };
        let diff = hi.e - lo.e;
        if diff > 60 {
            return hi;
        }
        ExtFloat::new(hi.m + lo.m * pow2(-diff), hi.e)
    }
}

impl Sub for ExtFloat {
    type Output = ExtFloat;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl Mul for ExtFloat {
    type Output = ExtFloat;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        if self.m == 0.0 || rhs.m == 0.0 {
            return ExtFloat::ZERO;
        }
        ExtFloat::new(self.m * rhs.m, self.e + rhs.e)
    }
}

impl Div for ExtFloat {
    type Output = ExtFloat;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        assert!(rhs.m != 0.0, "ExtFloat division by zero");
        if self.m == 0.0 {
            return ExtFloat::ZERO;
        }
        ExtFloat::new(self.m / rhs.m, self.e - rhs.e)
    }
}

impl PartialEq for ExtFloat {
    fn eq(&self, other: &Self) -> bool {
        self.partial_cmp(other) == Some(Ordering::Equal)
    }
}

impl PartialOrd for ExtFloat {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        let (sa, sb) = (self.signum(), other.signum());
        if sa != sb {
            return sa.partial_cmp(&sb);
        }
        if sa == 0.0 {
            return Some(Ordering::Equal);
        }
        let mag = match self.e.cmp(&other.e) {
            Ordering::Equal => self.m.abs().partial_cmp(&other.m.abs())?,
            o => o,
        };
        Some(if sa > 0.0 { mag } else { mag.reverse() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn arithmetic_matches_f64_in_range() {
        let xs = [3.5, -0.125, 1e10, -7.25e-5, 123456.789];
        for &a in &xs {
            for &b in &xs {
                let (ea, eb) = (ExtFloat::from_f64(a), ExtFloat::from_f64(b));
                assert!(((ea + eb).to_f64() - (a + b)).abs() <= 1e-12 * (a.abs() + b.abs()));
                assert!(((ea - eb).to_f64() - (a - b)).abs() <= 1e-12 * (a.abs() + b.abs()));
                assert!(((ea * eb).to_f64() - a * b).abs() <= 1e-12 * (a * b).abs());
                assert!(((ea / eb).to_f64() - a / b).abs() <= 1e-12 * (a / b).abs());
                assert_eq!(ea.partial_cmp(&eb), a.partial_cmp(&b));
            }
        }
    }

    #[test]
    fn huge_values_and_rounding() {
        let big: BigInt = BigInt::from(3) << 5000u32;
        let x = ExtFloat::from_bigint(&big);
        assert_eq!(x.round_to_bigint(), big);
        let sq = x * x;
        assert_eq!(sq.exponent(), 10004);
        let back = (sq / x).round_to_bigint();
        assert_eq!(back, big);
        assert_eq!(ExtFloat::from_f64(2.5).round_to_bigint(), BigInt::from(3));
        assert_eq!(ExtFloat::from_f64(-2.4).round_to_bigint(), BigInt::from(-2));
        assert_eq!(ExtFloat::from_f64(0.49).round_to_i64(), Some(0));
        let neg: BigInt = -(BigInt::from(12345) << 200u32);
        assert_eq!(ExtFloat::from_bigint(&neg).round_to_bigint(), neg);
    }

    #[test]
    fn ordering_with_signs() {
        let a = ExtFloat::from_f64(-1.0).ldexp(4000);
        let b = ExtFloat::from_f64(1.0).ldexp(-4000);
        assert!(a < b);
        assert!(a < ExtFloat::ZERO);
        assert!(a.abs() > b);
    }
}
