//! Minimal binary fixed-point arithmetic on top of `num-bigint`, used where
//! a series cancels far below `f64` resolution.

use num_bigint::{BigInt, Sign};
use num_traits::{Signed, ToPrimitive, Zero};
use std::ops::{Add, Mul, Sub};

/// `mantissa / 2^bits`
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Fixed {
    mantissa: BigInt,
    bits: u32,
}

impl Fixed {
    pub fn zero(bits: u32) -> Self {
        Self { mantissa: BigInt::zero(), bits }
    }

    /// Exact conversion; `bits` must exceed 1074 for subnormals to be exact,
    /// otherwise low-order bits are truncated.
    pub fn from_f64(x: f64, bits: u32) -> Self {
        assert!(x.is_finite());
        if x == 0.0 {
            return Self::zero(bits);
        }
        let raw = x.abs().to_bits();
        let exp_field = ((raw >> 52) & 0x7ff) as i64;
        let frac = raw & ((1u64 << 52) - 1);
        let (mant, exp) = if exp_field == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), exp_field - 1075)
        };
        let shift = exp + bits as i64;
        let m = BigInt::from(mant);
        let mut mantissa = if shift >= 0 { m << shift as usize } else { m >> (-shift) as usize };
        if x < 0.0 {
            mantissa = -mantissa;
        }
        Self { mantissa, bits }
    }

    pub fn from_i64(v: i64, bits: u32) -> Self {
        Self { mantissa: BigInt::from(v) << bits as usize, bits }
    }

    pub fn from_integer(v: BigInt, bits: u32) -> Self {
        Self { mantissa: v << bits as usize, bits }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        Self { mantissa: &self.mantissa * k, bits: self.bits }
    }

    /// Truncating quotient; panics on a zero divisor.
    pub fn div(&self, rhs: &Fixed) -> Self {
        debug_assert_eq!(self.bits, rhs.bits);
        Self { mantissa: (&self.mantissa << self.bits as usize) / &rhs.mantissa, bits: self.bits }
    }

    pub fn div_u64(&self, d: u64) -> Self {
        Self { mantissa: &self.mantissa / d, bits: self.bits }
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn abs(&self) -> Self {
        Self { mantissa: self.mantissa.abs(), bits: self.bits }
    }

    /// `log2 |self|`, or `-inf` at zero.
    pub fn log2_abs(&self) -> f64 {
        if self.mantissa.is_zero() {
            return f64::NEG_INFINITY;
        }
        let (top, shift) = self.top_bits();
        // normalize the leading bits into [1, 2) before taking the log
        let lead = top.abs().log2().floor();
        (top.abs() / 2f64.powi(lead as i32)).log2() + (lead + shift as f64 - self.bits as f64)
    }

    /// Nearest-ish `f64` (truncated to 64 leading bits, then rounded).
    pub fn to_f64(&self) -> f64 {
        if self.mantissa.is_zero() {
            return 0.0;
        }
        let (top, shift) = self.top_bits();
        let e = shift as i64 - self.bits as i64;
        // split the scaling so neither factor overflows
        let half = (e / 2) as i32;
        top * 2f64.powi(half) * 2f64.powi(e as i32 - half)
    }

    fn top_bits(&self) -> (f64, u64) {
        let len = self.mantissa.bits();
        let shift = len.saturating_sub(64);
        let top = (self.mantissa.abs() >> shift as usize).to_f64().unwrap_or(f64::MAX);
        let top = if self.mantissa.sign() == Sign::Minus { -top } else { top };
        (top, shift)
    }
}

impl Add for &Fixed {
    type Output = Fixed;
    fn add(self, rhs: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, rhs.bits);
        Fixed { mantissa: &self.mantissa + &rhs.mantissa, bits: self.bits }
    }
}

impl Sub for &Fixed {
    type Output = Fixed;
    fn sub(self, rhs: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, rhs.bits);
        Fixed { mantissa: &self.mantissa - &rhs.mantissa, bits: self.bits }
    }
}

impl Mul for &Fixed {
    type Output = Fixed;
    fn mul(self, rhs: &Fixed) -> Fixed {
        debug_assert_eq!(self.bits, rhs.bits);
        Fixed { mantissa: (&self.mantissa * &rhs.mantissa) >> self.bits as usize, bits: self.bits }
    }
}
