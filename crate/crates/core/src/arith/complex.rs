use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rug::float::Constant;
use rug::Float;
use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{dec, reduce_angle, ArithError, Precision};

/// A complex number with MPFR real and imaginary parts.
///
/// Both parts are finite and rounded to `precision().bits`. Binary
/// operations return results at the precision of the left operand.
#[derive(Clone, Debug, PartialEq)]
pub struct HPComplex {
    re: Float,
    im: Float,
    prec: Precision,
}

impl HPComplex {
    pub fn new(re: Float, im: Float, prec: Precision) -> Result<Self, ArithError> {
        if !re.is_finite() || !im.is_finite() {
            return Err(ArithError::NonFinite);
        }
        Ok(Self::raw(re, im, prec))
    }

    fn raw(re: Float, im: Float, prec: Precision) -> Self {
        let b = prec.bits;
        let re = if re.prec() == b { re } else { Float::with_val(b, re) };
        let im = if im.prec() == b { im } else { Float::with_val(b, im) };
        HPComplex { re, im, prec }
    }

    /// Panics on non-finite input.
    pub fn from_f64(re: f64, im: f64, prec: Precision) -> Self {
        assert!(re.is_finite() && im.is_finite(), "non-finite component");
        Self::raw(prec.float(re), prec.float(im), prec)
    }

    pub fn from_real(re: Float, prec: Precision) -> Result<Self, ArithError> {
        Self::new(re, prec.zero(), prec)
    }

    pub fn parse(re: &str, im: &str, prec: Precision) -> Result<Self, ArithError> {
        Self::new(prec.parse(re)?, prec.parse(im)?, prec)
    }

    /// Parse `"re,im"`; a lone number is taken as real.
    pub fn parse_pair(s: &str, prec: Precision) -> Result<Self, ArithError> {
        match s.split_once(',') {
            Some((a, b)) => Self::parse(a, b, prec),
            None => Self::parse(s, "0", prec),
        }
    }

    pub fn zero(prec: Precision) -> Self {
        Self::raw(prec.zero(), prec.zero(), prec)
    }

    pub fn one(prec: Precision) -> Self {
        Self::raw(prec.float(1.0), prec.zero(), prec)
    }

    pub fn i(prec: Precision) -> Self {
        Self::raw(prec.zero(), prec.float(1.0), prec)
    }

    pub fn from_polar(r: &Float, theta: &Float, prec: Precision) -> Self {
        let t = reduce_angle(theta, prec.bits);
        let (s, c) = t.sin_cos(Float::new(prec.bits + 32));
        Self::raw(
            Float::with_val(prec.bits, r * &c),
            Float::with_val(prec.bits, r * &s),
            prec,
        )
    }

    pub fn re(&self) -> &Float {
        &self.re
    }

    pub fn im(&self) -> &Float {
        &self.im
    }

    pub fn precision(&self) -> Precision {
        self.prec
    }

    pub fn into_parts(self) -> (Float, Float) {
        (self.re, self.im)
    }

    /// Re-round to another precision (zero-extends when widening).
    pub fn with_precision(&self, prec: Precision) -> Self {
        Self::raw(self.re.clone(), self.im.clone(), prec)
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    fn b(&self) -> u32 {
        self.prec.bits
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.b(), self.re.hypot_ref(&self.im))
    }

    pub fn abs_sq(&self) -> Float {
        let b = self.b();
        Float::with_val(b, self.re.square_ref()) + Float::with_val(b, self.im.square_ref())
    }

    /// Principal argument in `(-π, π]`.
    pub fn arg(&self) -> Float {
        Float::with_val(self.b(), self.im.atan2_ref(&self.re))
    }

    pub fn conj(&self) -> Self {
        Self::raw(self.re.clone(), Float::with_val(self.b(), -&self.im), self.prec)
    }

    pub fn scale(&self, k: &Float) -> Self {
        let b = self.b();
        Self::raw(Float::with_val(b, &self.re * k), Float::with_val(b, &self.im * k), self.prec)
    }

    pub fn add_real(&self, x: &Float) -> Self {
        Self::raw(Float::with_val(self.b(), &self.re + x), self.im.clone(), self.prec)
    }

    pub fn add_imag(&self, y: &Float) -> Self {
        Self::raw(self.re.clone(), Float::with_val(self.b(), &self.im + y), self.prec)
    }

    pub fn mul_i(&self) -> Self {
        Self::raw(Float::with_val(self.b(), -&self.im), self.re.clone(), self.prec)
    }

    pub fn div(&self, o: &HPComplex) -> Result<Self, ArithError> {
        if o.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        // scale by the larger component of the divisor to avoid overflow
        let b = self.b() + 16;
        let (c, d) = (Float::with_val(b, &o.re), Float::with_val(b, &o.im));
        let (a, bb) = (Float::with_val(b, &self.re), Float::with_val(b, &self.im));
        let (re, im) = if c.clone().abs() >= d.clone().abs() {
            let r = Float::with_val(b, &d / &c);
            let den = Float::with_val(b, &c + Float::with_val(b, &d * &r));
            (
                Float::with_val(b, &a + Float::with_val(b, &bb * &r)) / &den,
                Float::with_val(b, &bb - Float::with_val(b, &a * &r)) / &den,
            )
        } else {
            let r = Float::with_val(b, &c / &d);
            let den = Float::with_val(b, Float::with_val(b, &c * &r) + &d);
            (
                Float::with_val(b, Float::with_val(b, &a * &r) + &bb) / &den,
                Float::with_val(b, Float::with_val(b, &bb * &r) - &a) / &den,
            )
        };
        Self::new(re, im, self.prec)
    }

    pub fn recip(&self) -> Result<Self, ArithError> {
        Self::one(self.prec).div(self)
    }

    /// `e^z`. Fails when `Re z · log2 e` exceeds the exponent budget.
    pub fn exp(&self) -> Result<Self, ArithError> {
        self.prec.check_exp(&self.re)?;
        let b = self.b();
        let mag = Float::with_val(b + 8, self.re.exp_ref());
        let t = reduce_angle(&self.im, b);
        let (s, c) = t.sin_cos(Float::new(b + 8));
        Self::new(
            Float::with_val(b, &mag * &c),
            Float::with_val(b, &mag * &s),
            self.prec,
        )
    }

    /// Principal logarithm `ln|z| + i Arg z`, `Arg` in `(-π, π]`.
    pub fn ln(&self) -> Result<Self, ArithError> {
        if self.is_zero() {
            return Err(ArithError::LogOfZero);
        }
        let b = self.b();
        let r = Float::with_val(b + 8, self.re.hypot_ref(&self.im));
        Self::new(Float::with_val(b, r.ln()), self.arg(), self.prec)
    }

    pub fn dist(&self, o: &HPComplex) -> Float {
        (self - o).abs()
    }

    /// Nearest doubles (may be infinite for huge values).
    pub fn to_f64(&self) -> (f64, f64) {
        (self.re.to_f64(), self.im.to_f64())
    }

    /// `2π i` at this precision.
    pub fn two_pi_i(prec: Precision) -> Self {
        Self::raw(prec.zero(), Float::with_val(prec.bits, Constant::Pi) * 2u32, prec)
    }
}

impl<'a> Add<&'a HPComplex> for &HPComplex {
    type Output = HPComplex;
    fn add(self, o: &'a HPComplex) -> HPComplex {
        let b = self.b();
        HPComplex::raw(Float::with_val(b, &self.re + &o.re), Float::with_val(b, &self.im + &o.im), self.prec)
    }
}

impl<'a> Sub<&'a HPComplex> for &HPComplex {
    type Output = HPComplex;
    fn sub(self, o: &'a HPComplex) -> HPComplex {
        let b = self.b();
        HPComplex::raw(Float::with_val(b, &self.re - &o.re), Float::with_val(b, &self.im - &o.im), self.prec)
    }
}

impl<'a> Mul<&'a HPComplex> for &HPComplex {
    type Output = HPComplex;
    fn mul(self, o: &'a HPComplex) -> HPComplex {
        let b = self.b();
        let w = b + 16;
        let ac = Float::with_val(w, &self.re * &o.re);
        let bd = Float::with_val(w, &self.im * &o.im);
        let ad = Float::with_val(w, &self.re * &o.im);
        let bc = Float::with_val(w, &self.im * &o.re);
        HPComplex::raw(Float::with_val(b, ac - bd), Float::with_val(b, ad + bc), self.prec)
    }
}

impl Neg for &HPComplex {
    type Output = HPComplex;
    fn neg(self) -> HPComplex {
        HPComplex::raw(Float::with_val(self.b(), -&self.re), Float::with_val(self.b(), -&self.im), self.prec)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $m(self, o: HPComplex) -> HPComplex {
                (&self).$m(&o)
            }
        }
        impl<'a> $tr<&'a HPComplex> for HPComplex {
            type Output = HPComplex;
            fn $m(self, o: &'a HPComplex) -> HPComplex {
                (&self).$m(o)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

impl fmt::Display for HPComplex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision();
        let show = |x: &Float| x.to_string_radix(10, digits);
        if self.im.is_sign_negative() {
            write!(f, "{} - {}i", show(&self.re), show(&Float::with_val(self.b(), -&self.im)))
        } else {
            write!(f, "{} + {}i", show(&self.re), show(&self.im))
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Wire {
    re: String,
    im: String,
    prec: u32,
}

impl Serialize for HPComplex {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        Wire { re: dec::to_string(&self.re), im: dec::to_string(&self.im), prec: self.b() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for HPComplex {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let w = Wire::deserialize(d)?;
        let prec = Precision::new(w.prec, super::DEFAULT_MAX_EXPONENT_BITS).map_err(D::Error::custom)?;
        HPComplex::parse(&w.re, &w.im, prec).map_err(D::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p() -> Precision {
        Precision::default()
    }

    fn close(a: &HPComplex, b: &HPComplex, rel: &Float) -> bool {
        let scale = Float::with_val(a.b(), b.abs()).max(&Float::with_val(a.b(), 1));
        a.dist(b) <= Float::with_val(a.b(), rel * scale)
    }

    #[test]
    fn exp_of_zero_is_one() {
        assert_eq!(HPComplex::zero(p()).exp().unwrap(), HPComplex::one(p()));
    }

    #[test]
    fn euler_identity() {
        let z = HPComplex::new(p().zero(), p().pi(), p()).unwrap();
        let w = z.exp().unwrap();
        assert!(close(&w, &HPComplex::from_f64(-1.0, 0.0, p()), &p().rel_tol(1)));
    }

    #[test]
    fn exp_matches_series_oracle() {
        // Taylor series at 400 bits, independent of MPFR's exp
        let x = Float::with_val(400, Float::parse("10.01").unwrap());
        let mut term = Float::with_val(400, 1);
        let mut sum = Float::with_val(400, 1);
        for k in 1..400u32 {
            term *= &x;
            term /= k;
            sum += &term;
        }
        let z = HPComplex::parse("10.01", "0", p()).unwrap().exp().unwrap();
        let rel = Float::with_val(400, z.re() - &sum).abs() / &sum;
        assert!(rel < p().rel_tol(1));
        assert!(z.im().is_zero());
        assert!((z.re().to_f64() - 22247.8354563182).abs() < 1e-9);
    }

    #[test]
    fn budget_is_enforced() {
        let prec = Precision::new(128, 1000).unwrap();
        assert!(HPComplex::from_f64(690.0, 0.0, prec).exp().is_ok());
        assert!(matches!(
            HPComplex::from_f64(700.0, 0.0, prec).exp(),
            Err(ArithError::ExponentBudgetExceeded { .. })
        ));
        assert!(HPComplex::from_f64(-700.0, 0.0, prec).exp().is_err());
    }

    #[test]
    fn ln_inverts_exp() {
        let z = HPComplex::from_f64(1.5, -2.0, p());
        let back = z.exp().unwrap().ln().unwrap();
        assert!(close(&back, &z, &p().rel_tol(4)));
        assert_eq!(HPComplex::zero(p()).ln(), Err(ArithError::LogOfZero));
    }

    #[test]
    fn division() {
        let a = HPComplex::from_f64(3.0, 4.0, p());
        let b = HPComplex::from_f64(1.0, -2.0, p());
        let q = a.div(&b).unwrap();
        assert!(close(&(&q * &b), &a, &p().rel_tol(4)));
        assert!(a.div(&HPComplex::zero(p())).is_err());
    }

    #[test]
    fn json_roundtrip() {
        let z = HPComplex::from_f64(1.0 / 3.0, -7.25, p());
        let s = serde_json::to_string(&z).unwrap();
        assert!(s.contains("\"prec\":256"));
        let back: HPComplex = serde_json::from_str(&s).unwrap();
        assert_eq!(back, z);
    }

    proptest! {
        #[test]
        fn exp_is_2pi_periodic(re in -50.0f64..50.0, im in -64.0f64..64.0) {
            let z = HPComplex::from_f64(re, im, p());
            let a = z.exp().unwrap();
            let b = (&z + &HPComplex::two_pi_i(p())).exp().unwrap();
            prop_assert!(close(&a, &b, &p().rel_tol(8)));
        }

        #[test]
        fn exp_commutes_with_conjugation(re in -50.0f64..50.0, im in -1e9f64..1e9) {
            let z = HPComplex::from_f64(re, im, p());
            prop_assert_eq!(z.conj().exp().unwrap(), z.exp().unwrap().conj());
        }

        #[test]
        fn exp_is_multiplicative(a in -20.0f64..20.0, b in -20.0f64..20.0, c in -9.0f64..9.0, d in -9.0f64..9.0) {
            let x = HPComplex::from_f64(a, c, p());
            let y = HPComplex::from_f64(b, d, p());
            let lhs = (&x + &y).exp().unwrap();
            let rhs = &x.exp().unwrap() * &y.exp().unwrap();
            prop_assert!(close(&lhs, &rhs, &p().rel_tol(8)));
        }
    }
}
