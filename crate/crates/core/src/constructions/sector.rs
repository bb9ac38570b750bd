use rug::Float;
use serde::Serialize;

use super::ConstructionError;
use crate::arith::{dec, HPComplex};
use crate::dynmap::ExpMap;

#[derive(Debug, Clone, Serialize)]
pub struct SectorPreimage {
    pub y: HPComplex,
    /// `f(y)`, with `f(w) = z`.
    pub w: HPComplex,
    /// Branch index of `w = log(z/λ) + 2πik`.
    #[serde(with = "dec")]
    pub k: Float,
}

/// `y = log(w/λ) + 2πim` with `w = log(z/λ) + 2πik`, so that `f²(y) = z`.
/// `k` and `m` are integer-valued floats.
pub fn second_preimage(map: &ExpMap, z: &HPComplex, k: &Float, m: &Float) -> Result<(HPComplex, HPComplex), ConstructionError> {
    if z.is_zero() {
        return Err(ConstructionError::ZeroTarget);
    }
    let prec = map.precision();
    let lam = map.lambda().with_precision(prec);
    let tau = prec.two_pi();
    let l = z.with_precision(prec).div(&lam)?.ln()?;
    let w = l.add_imag(&Float::with_val(prec.bits, &tau * k));
    let v = w.div(&lam)?.ln()?;
    let y = v.add_imag(&Float::with_val(prec.bits, &tau * m));
    Ok((y, w))
}

/// A point `y` with `f²(y) = z` and `|arg y - π/4| < eps`.
///
/// The branch `k` of the first logarithm doubles from 1; `m` is chosen so
/// that `Im y` is as close to `Re y` as possible. Larger `k` pushes `y`
/// further out, where the sector condition gets easier.
pub fn sector_preimage(map: &ExpMap, z: &HPComplex, eps: f64) -> Result<SectorPreimage, ConstructionError> {
    if z.is_zero() {
        return Err(ConstructionError::ZeroTarget);
    }
    if !(eps > 0.0 && eps < 0.5) {
        return Err(ConstructionError::InvalidEpsilon(eps));
    }
    let prec = map.precision();
    let quarter = Float::with_val(prec.bits, prec.pi() / 4u32);
    let zero = prec.zero();
    let scale = z.abs().max(&prec.float(1.0));
    for j in 0..=prec.bits / 2 {
        let k = Float::with_val(prec.bits, 1) << j as i32;
        let (v, _) = second_preimage(map, z, &k, &zero)?;
        let m = (Float::with_val(prec.bits, v.re() - v.im()) / prec.two_pi()).round();
        let (y, w) = second_preimage(map, z, &k, &m)?;
        let off = Float::with_val(prec.bits, y.arg() - &quarter).abs();
        if off >= eps {
            continue;
        }
        // the round trip loses about log2|w| bits
        let back = map.apply(&map.apply(&y)?)?;
        let tol = Float::with_val(prec.bits, &scale * prec.rel_tol(j as i32 + 32));
        if back.dist(z) <= tol {
            return Ok(SectorPreimage { y, w, k });
        }
    }
    Err(ConstructionError::ExponentBudgetExceeded { needed_bits: (prec.bits / 2) as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Precision;
    use crate::dynmap::{make_map, KPolicy};

    fn p() -> Precision {
        Precision::default()
    }

    fn check(map: &ExpMap, z: &HPComplex, eps: f64) -> SectorPreimage {
        let s = sector_preimage(map, z, eps).unwrap();
        let arg = s.y.arg().to_f64();
        assert!((arg - std::f64::consts::FRAC_PI_4).abs() < eps);
        // f(y) = w and f(w) = z separately
        let fy = map.apply(&s.y).unwrap();
        assert!(fy.dist(&s.w) < Float::with_val(256, s.w.abs() * p().rel_tol(40)));
        let back = map.apply(&fy).unwrap();
        assert!(back.dist(z) < 1e-40);
        s
    }

    #[test]
    fn unit_lambda_target_one() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        check(&m, &HPComplex::one(p()), 0.1);
    }

    #[test]
    fn smaller_sector_goes_further_out() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let z = HPComplex::from_f64(-0.7, 2.5, p());
        let a = check(&m, &z, 0.1);
        let b = check(&m, &z, 0.01);
        assert!(b.k >= a.k);
        assert!(b.y.abs() >= a.y.abs());
    }

    #[test]
    fn complex_lambda() {
        let m = make_map(HPComplex::from_f64(0.3, -1.2, p()), KPolicy::Auto).unwrap();
        check(&m, &HPComplex::from_f64(5.0, 5.0, p()), 0.2);
    }

    #[test]
    fn zero_target() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        assert_eq!(sector_preimage(&m, &HPComplex::zero(p()), 0.1).unwrap_err(), ConstructionError::ZeroTarget);
        assert!(matches!(sector_preimage(&m, &HPComplex::one(p()), 0.7), Err(ConstructionError::InvalidEpsilon(_))));
    }
}
