use rug::Float;
use serde::Serialize;

use super::{log_branch, HairError, Itinerary};
use crate::arith::{dec, HPComplex};
use crate::dynmap::ExpMap;

#[derive(Debug, Clone, PartialEq)]
pub enum SeedPolicy {
    /// `1 + i (c + 1)` with `c` the center of the first symbol's strip.
    StripDefault,
    Explicit(HPComplex),
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicPoint {
    pub z: HPComplex,
    pub period: u32,
    /// `|Df^p(z)| = Π |f^j(z)|`, `j = 1..p`.
    #[serde(with = "dec")]
    pub multiplier_abs: Float,
    pub itinerary: Itinerary,
    /// `|f^p(z) - z|`.
    #[serde(with = "dec")]
    pub residual: Float,
    pub iterations: u32,
}

/// `L_{c_0} ∘ .. ∘ L_{c_{p-1}}` with the full-strip log branches.
fn pullback_cycle(map: &ExpMap, cycle: &[u8], z: &HPComplex) -> Result<HPComplex, HairError> {
    let mut w = z.clone();
    for &c in cycle.iter().rev() {
        w = log_branch(map, &w, c)?;
    }
    Ok(w)
}

/// `(f^p(z), Df^p(z))`.
fn forward_cycle(map: &ExpMap, p: usize, z: &HPComplex) -> Result<(HPComplex, HPComplex), HairError> {
    let prec = map.precision();
    let mut w = z.clone();
    let mut d = HPComplex::one(prec);
    for _ in 0..p {
        w = map.apply(&w)?;
        d = &d * &w;
    }
    Ok((w, d))
}

/// A repelling periodic point with the given cycle of strip symbols.
///
/// Iterates the composed inverse branch until successive iterates differ by
/// less than `2^(-p/2)`, then polishes with Newton steps on `f^p(z) - z` so
/// the result is accurate to near working precision.
pub fn periodic_point(map: &ExpMap, cycle: &[u8], seed: SeedPolicy) -> Result<PeriodicPoint, HairError> {
    let itinerary = Itinerary::periodic(cycle.to_vec())?;
    let prec = map.precision();
    let b = prec.bits;
    let tol = prec.half_tol();
    let mut z = match seed {
        SeedPolicy::Explicit(z) => z.with_precision(prec),
        SeedPolicy::StripDefault => {
            let c = map.strips().center(cycle[0]);
            HPComplex::new(prec.float(1.0), Float::with_val(b, c + 1u32), prec)?
        }
    };
    let max_iter = 10 * b;
    let mut iterations = 0;
    loop {
        if iterations >= max_iter {
            return Err(HairError::NonConvergence { iterations });
        }
        let next = pullback_cycle(map, cycle, &z)?;
        iterations += 1;
        let step = next.dist(&z);
        z = next;
        if step < tol {
            break;
        }
    }
    let p = cycle.len();
    let floor = Float::with_val(b, z.abs().max(&Float::with_val(b, 1)) * prec.rel_tol(8));
    let mut last = Float::with_val(b, f64::INFINITY);
    for _ in 0..16 {
        let (w, d) = forward_cycle(map, p, &z)?;
        let g = &w - &z;
        let dg = &d - &HPComplex::one(prec);
        let step = match g.div(&dg) {
            Ok(s) => s,
            Err(_) => break,
        };
        let size = step.abs();
        if size >= last {
            break;
        }
        z = &z - &step;
        if size <= floor {
            break;
        }
        last = size;
    }
    let (w, d) = forward_cycle(map, p, &z)?;
    let residual = w.dist(&z);
    if residual >= Float::with_val(b, &tol * 10u32) {
        return Err(HairError::NonConvergence { iterations });
    }
    let multiplier_abs = d.abs();
    if multiplier_abs <= 1 {
        return Err(HairError::NotRepelling(multiplier_abs.to_f64()));
    }
    Ok(PeriodicPoint { z, period: p as u32, multiplier_abs, itinerary, residual, iterations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Precision;
    use crate::dynmap::{make_map, KPolicy};

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn fixed_point_of_exp() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let fp = periodic_point(&m, &[0], SeedPolicy::StripDefault).unwrap();
        let (x, y) = fp.z.to_f64();
        assert!((x - 0.3181315052).abs() < 1e-9 && (y - 1.3372357014).abs() < 1e-9);
        assert!((fp.multiplier_abs.to_f64() - fp.z.abs().to_f64()).abs() < 1e-12);
        assert!(fp.multiplier_abs > 1);
        assert!(fp.residual < Float::with_val(256, 1) >> 200);
    }

    #[test]
    fn fixed_point_in_upper_strip() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let fp = periodic_point(&m, &[1], SeedPolicy::StripDefault).unwrap();
        let im = fp.z.im().to_f64();
        assert!((im - 2.0 * std::f64::consts::PI).abs() < 1.6, "{im}");
        let w = m.apply(&fp.z).unwrap();
        assert!(w.dist(&fp.z) < 1e-70);
    }

    #[test]
    fn period_three() {
        let m = make_map(HPComplex::from_f64(0.5, 0.5, p()), KPolicy::Auto).unwrap();
        let pp = periodic_point(&m, &[0, 1, 1], SeedPolicy::StripDefault).unwrap();
        assert_eq!(pp.period, 3);
        let mut w = pp.z.clone();
        for _ in 0..3 {
            w = m.apply(&w).unwrap();
        }
        assert!(w.dist(&pp.z) < 1e-60);
        assert!(pp.multiplier_abs > 1);
    }

    #[test]
    fn empty_cycle_is_rejected() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        assert!(periodic_point(&m, &[], SeedPolicy::StripDefault).is_err());
    }
}
