use rug::Float;

use super::HairError;
use crate::arith::HPComplex;
use crate::dynmap::ExpMap;

/// The inverse of `f` on `S_s`: the unique `z ∈ S_s` with `f(z) = w`.
///
/// Requires `Re w >= 0` and `|w| >= |λ| e^K` up to the boundary band.
/// Round trips lose about `log2 |ln w|` bits to conditioning.
pub fn inverse_branch(map: &ExpMap, w: &HPComplex, s: u8) -> Result<HPComplex, HairError> {
    let prec = map.precision();
    let w = w.with_precision(prec);
    let tol = prec.half_tol();
    let r = w.abs();
    if Float::with_val(prec.bits, w.re() + Float::with_val(prec.bits, &r * &tol)) < 0 {
        return Err(HairError::OutsideRange(format!("Re w = {:.6e} < 0", w.re().to_f64())));
    }
    let floor = map.inner_radius() * (1 - tol);
    if r < floor {
        return Err(HairError::OutsideRange(format!(
            "|w| = {:.6e} below |lambda| e^K = {:.6e}",
            r.to_f64(),
            map.inner_radius().to_f64()
        )));
    }
    log_branch(map, &w, s)
}

/// `ln(|w| / |λ|) + i (c_s + Arg w)`, `Arg` in `(-π, π]`: the branch of
/// `f^{-1}` on the full strip of height 2π around the center of `Ŝ_s`.
pub fn log_branch(map: &ExpMap, w: &HPComplex, s: u8) -> Result<HPComplex, HairError> {
    let prec = map.precision();
    if w.is_zero() {
        return Err(HairError::OutsideRange("w = 0".into()));
    }
    let w = w.with_precision(prec);
    let re = Float::with_val(prec.bits, w.abs().ln() - map.ln_abs_lambda());
    let im = Float::with_val(prec.bits, map.strips().center(s) + w.arg());
    Ok(HPComplex::new(re, im, prec)?)
}
