//! Adaptive-precision complex arithmetic and level-index magnitudes.
//!
//! Every real is an MPFR [`rug::Float`]. A [`Precision`] carries the working
//! mantissa width together with an exponent budget: operations whose result
//! would need more than `max_exponent_bits` binary orders of magnitude fail
//! with [`ArithError::ExponentBudgetExceeded`] instead of saturating.

mod complex;
pub mod dec;
mod tower;

pub use complex::HPComplex;
pub use tower::TowerMagnitude;

use rug::float::Constant;
use rug::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const MIN_PRECISION_BITS: u32 = 64;
pub const DEFAULT_PRECISION_BITS: u32 = 256;
pub const DEFAULT_MAX_EXPONENT_BITS: u64 = 1 << 20;
/// Hard ceiling imposed by MPFR's exponent range.
pub const MAX_EXPONENT_BITS_LIMIT: u64 = (1 << 30) - 1;
const GUARD_BITS: u32 = 32;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ArithError {
    #[error("exponent budget exceeded: result needs about {needed_bits:.3e} exponent bits, budget is {budget}")]
    ExponentBudgetExceeded { needed_bits: f64, budget: u64 },
    #[error("precision must be at least {MIN_PRECISION_BITS} bits (got {0})")]
    InvalidPrecision(u32),
    #[error("exponent budget must be in 1..={MAX_EXPONENT_BITS_LIMIT} (got {0})")]
    InvalidExponentBudget(u64),
    #[error("non-finite value")]
    NonFinite,
    #[error("cannot parse {0:?} as a real number")]
    Parse(String),
    #[error("logarithm of zero")]
    LogOfZero,
    #[error("division by zero")]
    DivisionByZero,
}

/// Working precision plus exponent budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Precision {
    pub bits: u32,
    pub max_exponent_bits: u64,
}

impl Default for Precision {
    fn default() -> Self {
        Precision {
            bits: DEFAULT_PRECISION_BITS,
            max_exponent_bits: DEFAULT_MAX_EXPONENT_BITS,
        }
    }
}

impl Precision {
    pub fn new(bits: u32, max_exponent_bits: u64) -> Result<Self, ArithError> {
        if bits < MIN_PRECISION_BITS {
            return Err(ArithError::InvalidPrecision(bits));
        }
        if max_exponent_bits == 0 || max_exponent_bits > MAX_EXPONENT_BITS_LIMIT {
            return Err(ArithError::InvalidExponentBudget(max_exponent_bits));
        }
        Ok(Precision { bits, max_exponent_bits })
    }

    /// `bits` with the default exponent budget. Panics below 64 bits.
    pub fn bits(bits: u32) -> Self {
        Self::new(bits, DEFAULT_MAX_EXPONENT_BITS).expect("invalid precision")
    }

    pub fn with_bits(self, bits: u32) -> Self {
        Precision { bits: bits.max(MIN_PRECISION_BITS), ..self }
    }

    pub fn with_budget(self, max_exponent_bits: u64) -> Self {
        Precision { max_exponent_bits, ..self }
    }

    /// `2^(k - bits)`: a relative tolerance `k` bits above the rounding unit.
    pub fn rel_tol(&self, k: i32) -> Float {
        Float::with_val(self.bits, 1) << (k - self.bits as i32)
    }

    /// `2^(-bits/2)`: boundary and convergence tolerance.
    pub fn half_tol(&self) -> Float {
        Float::with_val(self.bits, 1) >> (self.bits / 2)
    }

    pub fn float(&self, v: f64) -> Float {
        Float::with_val(self.bits, v)
    }

    pub fn zero(&self) -> Float {
        Float::new(self.bits)
    }

    pub fn pi(&self) -> Float {
        Float::with_val(self.bits, Constant::Pi)
    }

    pub fn two_pi(&self) -> Float {
        Float::with_val(self.bits, Constant::Pi) * 2u32
    }

    /// Euler's number.
    pub fn e(&self) -> Float {
        Float::with_val(self.bits, 1).exp()
    }

    /// Parse a decimal string at this precision.
    pub fn parse(&self, s: &str) -> Result<Float, ArithError> {
        parse_float(s.trim(), self.bits)
    }

    /// Check that `e^x` (for real `x`) fits the exponent budget. Deep
    /// underflow is refused like overflow, rather than flushed to zero.
    pub fn check_exp(&self, x: &Float) -> Result<(), ArithError> {
        let needed = x.to_f64().abs() * std::f64::consts::LOG2_E;
        if needed.is_nan() || needed > self.max_exponent_bits as f64 {
            return Err(ArithError::ExponentBudgetExceeded {
                needed_bits: needed,
                budget: self.max_exponent_bits,
            });
        }
        Ok(())
    }
}

pub(crate) fn parse_float(s: &str, bits: u32) -> Result<Float, ArithError> {
    let v = Float::parse(s).map_err(|_| ArithError::Parse(s.to_string()))?;
    let f = Float::with_val(bits, v);
    if !f.is_finite() {
        return Err(ArithError::NonFinite);
    }
    Ok(f)
}

/// `x` reduced into `[-π, π]` modulo 2π, with enough guard bits that huge
/// arguments keep `bits` correct bits after reduction.
pub(crate) fn reduce_angle(x: &Float, bits: u32) -> Float {
    let mag = x.get_exp().unwrap_or(0).max(0) as u32;
    let wp = bits + GUARD_BITS + mag;
    let two_pi = Float::with_val(wp, Constant::Pi) * 2u32;
    let xr = Float::with_val(wp, x);
    let r = xr.remainder(&two_pi);
    Float::with_val(bits + GUARD_BITS, r)
}

/// Wrap an angle into `(-π, π]`.
pub fn wrap_pi(x: &Float) -> Float {
    let bits = x.prec();
    let mut r = reduce_angle(x, bits);
    let pi = Float::with_val(r.prec(), Constant::Pi);
    if r <= -pi.clone() {
        r += Float::with_val(r.prec(), &pi * 2u32);
    }
    Float::with_val(bits, r)
}

/// Reduce an angle modulo π into `[0, π)`.
pub fn mod_pi(x: &Float) -> Float {
    let bits = x.prec();
    let wp = bits + GUARD_BITS + x.get_exp().unwrap_or(0).max(0) as u32;
    let pi = Float::with_val(wp, Constant::Pi);
    let mut r = Float::with_val(wp, x).remainder(&pi);
    if r < 0 {
        r += &pi;
    }
    if r >= pi {
        r -= &pi;
    }
    Float::with_val(bits, r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precision_validation() {
        assert!(Precision::new(63, 100).is_err());
        assert!(Precision::new(64, 0).is_err());
        assert!(Precision::new(64, 1 << 31).is_err());
        let p = Precision::default();
        assert_eq!(p.bits, 256);
        assert_eq!(p.max_exponent_bits, 1 << 20);
    }

    #[test]
    fn angle_reduction_of_huge_arguments() {
        let p = Precision::bits(128);
        // 2^200 mod 2π by an oracle at much higher precision
        let x = Float::with_val(128, 1) << 200;
        let hi = Float::with_val(1024, Constant::Pi) * 2u32;
        let want = Float::with_val(1024, &x).remainder(&hi);
        let got = reduce_angle(&x, p.bits);
        let err = Float::with_val(1024, &got - &want).abs();
        assert!(err < p.rel_tol(4), "{err}");
    }

    #[test]
    fn wrap_and_mod() {
        let p = Precision::bits(128);
        let pi = p.pi();
        let w = wrap_pi(&(Float::with_val(128, &pi * 3u32) - 0.1f64));
        assert!((w - (pi.clone() - 0.1f64)).abs() < p.rel_tol(8));
        let m = mod_pi(&Float::with_val(128, -0.5));
        assert!((m - (pi - 0.5f64)).abs() < p.rel_tol(8));
    }
}
