use rug::Float;
use serde::Serialize;

use super::{check_jordan, corner_angle, sector_preimage, ConstructionError, Verified};
use crate::arith::{dec, wrap_pi, HPComplex, Precision};
use crate::curves::{iterate_curve_with, BaseShape, Parametrization, RefineOptions, SampledCurve};
use crate::dynmap::ExpMap;

/// Sector half-width used to pick the second preimage.
const SECTOR_EPS: f64 = 0.45;
const RETRIES: u32 = 8;

/// An arc of a circle centred at the origin, lifted by `translate · 2πi`.
#[derive(Debug, Clone, Serialize)]
pub struct ArcSpec {
    #[serde(with = "dec")]
    pub radius: Float,
    #[serde(with = "dec::pair")]
    pub theta_range: (Float, Float),
    pub translate: i32,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourArcCertificate {
    #[serde(flatten)]
    pub verified: Verified,
    /// Half the gap between the two radii of each pair.
    pub delta: f64,
    /// How many times the arcs were shrunk before verification passed.
    pub retries: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct FourArc {
    pub y: HPComplex,
    pub arcs: [ArcSpec; 4],
    pub image: SampledCurve,
    pub cert: FourArcCertificate,
}

/// The point `x + ih` with `|ζ| = rho`, `|ζ - 2πi| = sigma` and `x > 0`.
pub(crate) fn circle_corner(rho: &Float, sigma: &Float, prec: Precision) -> Option<HPComplex> {
    let b = prec.bits;
    let tau = prec.two_pi();
    let pi4 = Float::with_val(b, prec.pi() * 4u32);
    let num = Float::with_val(b, rho.square_ref()) - Float::with_val(b, sigma.square_ref())
        + Float::with_val(b, tau.square_ref());
    let h = num / &pi4;
    let x2 = Float::with_val(b, rho.square_ref()) - Float::with_val(b, h.square_ref());
    if x2 <= 0 {
        return None;
    }
    HPComplex::new(x2.sqrt(), h, prec).ok()
}

fn arc_piece(center: &HPComplex, from: &HPComplex, to: &HPComplex, radius: &Float) -> BaseShape {
    let t0 = (from - center).arg();
    let turn = wrap_pi(&Float::with_val(t0.prec(), (to - center).arg() - &t0));
    let t1 = Float::with_val(t0.prec(), &t0 + &turn);
    BaseShape::Arc {
        center: center.clone(),
        radius: radius.clone(),
        theta0: t0,
        theta1: t1,
        ends: Some((from.clone(), to.clone())),
    }
}

struct Quad {
    arcs: [ArcSpec; 4],
    pieces: Vec<BaseShape>,
}

/// Arcs of `|ζ| = |y| ∓ δ` and `|ζ - 2πi| = |y - 2πi| ∓ δ` between their
/// four intersection points, traversed as one loop around `y`.
fn build_quad(y: &HPComplex, delta: &Float) -> Option<Quad> {
    let prec = y.precision();
    let b = prec.bits;
    let two_pi_i = HPComplex::two_pi_i(prec);
    let yt = y - &two_pi_i;
    let r = y.abs();
    let s = yt.abs();
    let rho = [Float::with_val(b, &r - delta), Float::with_val(b, &r + delta)];
    let sig = [Float::with_val(b, &s - delta), Float::with_val(b, &s + delta)];
    let p = |i: usize, j: usize| circle_corner(&rho[i], &sig[j], prec);
    let (p11, p12, p22, p21) = (p(0, 0)?, p(0, 1)?, p(1, 1)?, p(1, 0)?);
    let zero = HPComplex::zero(prec);
    let pieces = vec![
        arc_piece(&zero, &p11, &p12, &rho[0]),
        arc_piece(&two_pi_i, &p12, &p22, &sig[1]),
        arc_piece(&zero, &p22, &p21, &rho[1]),
        arc_piece(&two_pi_i, &p21, &p11, &sig[0]),
    ];
    let spec = |piece: &BaseShape, t: i32| match piece {
        BaseShape::Arc { radius, theta0, theta1, .. } => {
            ArcSpec { radius: radius.clone(), theta_range: (theta0.clone(), theta1.clone()), translate: t }
        }
        _ => unreachable!(),
    };
    let arcs = [spec(&pieces[0], 0), spec(&pieces[1], 1), spec(&pieces[2], 0), spec(&pieces[3], 1)];
    Some(Quad { arcs, pieces })
}

/// A Jordan curve `f²(C₁ ∪ C₂ ∪ C₃ ∪ C₄)` around `z` of diameter at most
/// `eps`, where the `C_j` are arcs of circles centred at `0` (two of them
/// lifted by `2πi`) near a second preimage `y` of `z`.
///
/// The arcs are shrunk by halves up to eight times until the image passes
/// every check: winding number ±1, diameter, transversal corners, and no
/// self-crossings.
pub fn four_arc_jordan(map: &ExpMap, z: &HPComplex, eps: f64) -> Result<FourArc, ConstructionError> {
    if z.is_zero() {
        return Err(ConstructionError::ZeroTarget);
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ConstructionError::InvalidEpsilon(eps));
    }
    let prec = map.precision();
    let sp = sector_preimage(map, z, SECTOR_EPS)?;
    let y = sp.y;
    let two_pi_i = HPComplex::two_pi_i(prec);
    let alpha = Float::with_val(prec.bits, y.arg() - (&y - &two_pi_i).arg()).abs();
    let zw = Float::with_val(prec.bits, z.abs() * sp.w.abs());
    let first = Float::with_val(prec.bits, eps / Float::with_val(prec.bits, &zw * 8u32));
    let cap = Float::with_val(prec.bits, 1) / Float::with_val(prec.bits, sp.w.abs() * 8u32);
    let mut delta = first.min(&cap) * alpha.sin();
    let tol = eps / 64.0;
    let mut last = String::new();
    for retry in 0..=RETRIES {
        if retry > 0 {
            delta /= 2u32;
        }
        let Some(quad) = build_quad(&y, &delta) else {
            last = "arcs: circles do not meet".into();
            continue;
        };
        let src = Parametrization::new(BaseShape::Composite { pieces: quad.pieces.clone() }, prec);
        let curve = SampledCurve::from_source(map, src, 33, true)?;
        let image = iterate_curve_with(map, &curve, 2, &RefineOptions::absolute(tol))?;
        let mut ends = Vec::with_capacity(8);
        for piece in &quad.pieces {
            let pp = Parametrization::new(piece.clone(), prec).then_iterate(2);
            let (_, d0) = pp.eval(map, &prec.zero()).map_err(|e| e.into_curve_error(None))?;
            let (_, d1) = pp.eval(map, &prec.float(1.0)).map_err(|e| e.into_curve_error(None))?;
            ends.push((d0, d1));
        }
        let angles: Vec<f64> = (0..4).map(|j| corner_angle(&ends[j].1, &ends[(j + 1) % 4].0)).collect();
        match check_jordan(&image, z, eps, tol, &angles) {
            Ok(verified) => {
                let cert = FourArcCertificate { verified, delta: delta.to_f64(), retries: retry };
                return Ok(FourArc { y, arcs: quad.arcs, image, cert });
            }
            Err(why) => last = why,
        }
    }
    Err(ConstructionError::VerificationFailed(last))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::winding_number_by_crossings;
    use crate::dynmap::{make_map, KPolicy};

    fn p() -> Precision {
        Precision::default()
    }

    fn unit() -> ExpMap {
        make_map(HPComplex::one(p()), KPolicy::Auto).unwrap()
    }

    fn oracle_winding(image: &SampledCurve, z: &HPComplex) -> i64 {
        // f64 angle sum, independent of the library predicates
        let (zx, zy) = z.to_f64();
        let pts: Vec<(f64, f64)> = image.points().iter().map(|q| q.to_f64()).collect();
        let mut total = 0.0;
        for i in 0..pts.len() {
            let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
            let (ux, uy, vx, vy) = (a.0 - zx, a.1 - zy, b.0 - zx, b.1 - zy);
            total += (ux * vy - uy * vx).atan2(ux * vx + uy * vy);
        }
        (total / std::f64::consts::TAU).round() as i64
    }

    #[test]
    fn surrounds_two() {
        let z = HPComplex::from_f64(2.0, 0.0, p());
        let fa = four_arc_jordan(&unit(), &z, 0.1).unwrap();
        assert_eq!(fa.cert.verified.winding.abs(), 1);
        assert_eq!(oracle_winding(&fa.image, &z).abs(), 1);
        assert!(fa.cert.verified.diameter <= 0.1);
        assert!(fa.cert.verified.corner_angles.iter().all(|a| *a >= 1e-3));
    }

    #[test]
    fn surrounds_minus_one() {
        let z = HPComplex::from_f64(-1.0, 0.0, p());
        let fa = four_arc_jordan(&unit(), &z, 0.5).unwrap();
        assert_eq!(winding_number_by_crossings(&fa.image, &z).unwrap().abs(), 1);
        assert!(crate::curves::diameter(&fa.image.points()) <= 0.5);
    }

    #[test]
    fn paired_arcs_are_disjoint() {
        let fa = four_arc_jordan(&unit(), &HPComplex::from_f64(0.3, -2.0, p()), 0.1).unwrap();
        let [c1, c3, c2, c4] = &fa.arcs;
        assert_ne!(c1.radius, c2.radius);
        assert_ne!(c3.radius, c4.radius);
        assert_eq!((c1.translate, c3.translate, c2.translate, c4.translate), (0, 1, 0, 1));
        for a in &fa.arcs {
            let len = Float::with_val(64, &a.theta_range.1 - &a.theta_range.0).abs() * &a.radius;
            assert!(len < 0.1);
        }
    }

    #[test]
    fn corner_formula() {
        let c = circle_corner(&p().float(10.0), &p().float(9.0), p()).unwrap();
        assert!((c.abs().to_f64() - 10.0).abs() < 1e-60);
        let t = &c - &HPComplex::two_pi_i(p());
        assert!((t.abs().to_f64() - 9.0).abs() < 1e-60);
        assert!(circle_corner(&p().float(1.0), &p().float(9.0), p()).is_none());
    }
}
