use rug::Float;
use serde::Serialize;

use super::geometry::{orient, overlapping_pairs, segment_intersection, Orientation};
use super::iterate::{iterate_curve_with, RefineOptions};
use super::{CurveError, SampledCurve};
use crate::arith::{dec, mod_pi, HPComplex};
use crate::dynmap::ExpMap;
use crate::hairs::HairSample;

/// Crossings at smaller angles (mod π) are reported as tangential and left
/// out of the angle set.
pub const TRANSVERSALITY_FLOOR: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct AngleSetOptions {
    /// Refinement of the image curve. When no region is given, refinement is
    /// restricted to a box around the hairs.
    pub refine: RefineOptions,
    /// Bisection steps used to locate each crossing parameter.
    pub bisection_steps: u32,
}

impl Default for AngleSetOptions {
    fn default() -> Self {
        AngleSetOptions { refine: RefineOptions::relative(1e-3, 1e-4), bisection_steps: 96 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AngleEntry {
    /// Angle in `[0, π)` from the hair direction to the curve tangent.
    pub angle: f64,
    #[serde(with = "dec")]
    pub t: Float,
    pub z: HPComplex,
    /// Itinerary prefix of the hair that was crossed.
    pub hair: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct AngleSet {
    pub n: u32,
    pub angles: Vec<AngleEntry>,
    pub tangential: Vec<AngleEntry>,
}

/// How well one angle set is contained in another.
#[derive(Debug, Clone, Serialize)]
pub struct Inclusion {
    pub matched: usize,
    pub unmatched: Vec<f64>,
    /// Largest distance (mod π) from an angle to its best match.
    pub worst_gap: f64,
}

impl Inclusion {
    pub fn holds(&self) -> bool {
        self.unmatched.is_empty()
    }
}

fn gap_mod_pi(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(std::f64::consts::PI);
    d.min(std::f64::consts::PI - d)
}

impl AngleSet {
    pub fn values(&self) -> Vec<f64> {
        self.angles.iter().map(|e| e.angle).collect()
    }

    /// Match every angle of `self` against `other` within `tol`.
    pub fn included_in(&self, other: &AngleSet, tol: f64) -> Inclusion {
        let mut inc = Inclusion { matched: 0, unmatched: Vec::new(), worst_gap: 0.0 };
        for a in &self.angles {
            let gap = other.angles.iter().map(|b| gap_mod_pi(a.angle, b.angle)).fold(f64::INFINITY, f64::min);
            if gap <= tol {
                inc.matched += 1;
            } else {
                inc.unmatched.push(a.angle);
            }
            if gap.is_finite() {
                inc.worst_gap = inc.worst_gap.max(gap);
            } else {
                inc.worst_gap = f64::INFINITY;
            }
        }
        inc
    }
}

fn hair_box(hairs: &[HairSample], prec: crate::arith::Precision) -> Option<[Float; 4]> {
    let mut pts = hairs.iter().flat_map(|h| h.points.iter().map(|p| &p.z));
    let first = pts.next()?;
    let mut b = [first.re().clone(), first.re().clone(), first.im().clone(), first.im().clone()];
    for z in pts {
        if *z.re() < b[0] {
            b[0] = z.re().clone();
        }
        if *z.re() > b[1] {
            b[1] = z.re().clone();
        }
        if *z.im() < b[2] {
            b[2] = z.im().clone();
        }
        if *z.im() > b[3] {
            b[3] = z.im().clone();
        }
    }
    let w = Float::with_val(prec.bits, &b[1] - &b[0]);
    let h = Float::with_val(prec.bits, &b[3] - &b[2]);
    let pad = Float::with_val(prec.bits, w.max(&h) / 16u32) + 1u32;
    b[0] -= &pad;
    b[1] += &pad;
    b[2] -= &pad;
    b[3] += &pad;
    Some(b)
}

/// The angles at which `f^n ∘ c` crosses the given hairs.
///
/// Each crossing found on the sampled polylines is located by bisection on
/// the exact image curve, and the angle is taken between its tangent there
/// and the direction of the hair segment it crosses.
pub fn angle_set(
    map: &ExpMap,
    c: &SampledCurve,
    n: u32,
    hairs: &[HairSample],
    opts: &AngleSetOptions,
) -> Result<AngleSet, CurveError> {
    let prec = map.precision();
    let mut refine = opts.refine.clone();
    if refine.region.is_none() {
        refine.region = hair_box(hairs, prec);
    }
    let image = iterate_curve_with(map, c, n, &refine)?;
    let src = c.effective_source().then_iterate(n);
    let pts = image.points();
    let mut out = AngleSet { n, angles: Vec::new(), tangential: Vec::new() };
    for hair in hairs {
        let line = hair.polyline();
        if line.len() < 2 {
            continue;
        }
        let label = hair.itinerary.prefix_string(hair.itinerary_depth as usize);
        for (i, j) in overlapping_pairs(&pts, false, Some((&line, false))) {
            let (ha, hb) = (&line[j], &line[j + 1]);
            if segment_intersection(&pts[i], &pts[i + 1], ha, hb).is_none() {
                continue;
            }
            let mut lo = image.samples[i].t.clone();
            let mut hi = image.samples[i + 1].t.clone();
            let side_lo = orient(ha, hb, &pts[i]);
            for _ in 0..opts.bisection_steps {
                let mid = Float::with_val(prec.bits.max(lo.prec()), &lo + &hi) / 2u32;
                if mid <= lo || mid >= hi {
                    break;
                }
                let z = src.point(map, &mid).map_err(|e| e.into_curve_error(None))?;
                let side = orient(ha, hb, &z);
                if side == Orientation::Collinear {
                    lo = mid.clone();
                    hi = mid;
                    break;
                }
                if side == side_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let t = Float::with_val(prec.bits.max(lo.prec()), &lo + &hi) / 2u32;
            let (z, dz) = src.eval(map, &t).map_err(|e| e.into_curve_error(None))?;
            let dir = hb - ha;
            let entry = |angle| AngleEntry { angle, t: t.clone(), z: z.clone(), hair: label.clone() };
            if dz.is_zero() {
                out.tangential.push(entry(0.0));
                continue;
            }
            let raw = Float::with_val(prec.bits, dz.arg() - dir.arg());
            let angle = mod_pi(&raw).to_f64();
            let angle = if angle >= std::f64::consts::PI { 0.0 } else { angle };
            if angle < TRANSVERSALITY_FLOOR || std::f64::consts::PI - angle < TRANSVERSALITY_FLOOR {
                out.tangential.push(entry(angle));
            } else {
                out.angles.push(entry(angle));
            }
        }
    }
    out.angles.sort_by(|a, b| a.t.partial_cmp(&b.t).unwrap());
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Precision;
    use crate::curves::Parametrization;
    use crate::dynmap::{make_map, KPolicy};
    use crate::hairs::{trace_hair, Itinerary};
    use std::f64::consts::PI;

    fn p() -> Precision {
        Precision::default()
    }

    fn setup() -> (ExpMap, Vec<HairSample>) {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let anchors: Vec<Float> = (0..41).map(|k| p().float(10.6 + 0.02 * k as f64)).collect();
        let mut hairs = vec![trace_hair(&m, &Itinerary::zeros(), 12, &anchors).unwrap()];
        let far: Vec<Float> = (0..41).map(|k| p().float(11f64.exp() - 2.0 + 0.1 * k as f64)).collect();
        hairs.push(trace_hair(&m, &Itinerary::zeros(), 12, &far).unwrap());
        (m, hairs)
    }

    fn through_11(m: &ExpMap, dir: (f64, f64)) -> SampledCurve {
        let h = 0.005;
        let src = Parametrization::segment(
            HPComplex::from_f64(11.0 - h * dir.0, -h * dir.1, p()),
            HPComplex::from_f64(11.0 + h * dir.0, h * dir.1, p()),
        );
        SampledCurve::from_source(m, src, 4, false).unwrap()
    }

    #[test]
    fn vertical_and_diagonal_crossings() {
        let (m, hairs) = setup();
        let opts = AngleSetOptions::default();
        let v = angle_set(&m, &through_11(&m, (0.0, 1.0)), 0, &hairs, &opts).unwrap();
        assert_eq!(v.angles.len(), 1);
        assert!((v.angles[0].angle - PI / 2.0).abs() < 1e-12);
        let d = angle_set(&m, &through_11(&m, (1.0, 1.0)), 0, &hairs, &opts).unwrap();
        assert_eq!(d.angles.len(), 1);
        assert!((d.angles[0].angle - PI / 4.0).abs() < 1e-12);
        assert_eq!(d.angles[0].hair, "000000000000");
    }

    #[test]
    fn next_iterate_keeps_angles() {
        let (m, hairs) = setup();
        let opts = AngleSetOptions::default();
        for dir in [(0.0, 1.0), (1.0, 1.0), (1.0, -0.3)] {
            let c = through_11(&m, dir);
            let a0 = angle_set(&m, &c, 0, &hairs, &opts).unwrap();
            let a1 = angle_set(&m, &c, 1, &hairs, &opts).unwrap();
            let inc = a0.included_in(&a1, 1e-3);
            assert!(inc.holds(), "{inc:?}");
        }
    }

    #[test]
    fn tangent_crossing_is_excluded() {
        let (m, hairs) = setup();
        let src = Parametrization::new(
            crate::curves::BaseShape::Arc {
                center: HPComplex::from_f64(11.0, 1.0, p()),
                radius: p().float(1.0),
                theta0: p().float(-PI / 2.0 - 0.01),
                theta1: p().float(-PI / 2.0 + 0.01),
                ends: None,
            },
            p(),
        );
        let c = SampledCurve::from_source(&m, src, 9, false).unwrap();
        let a = angle_set(&m, &c, 0, &hairs, &AngleSetOptions::default()).unwrap();
        assert!(a.angles.is_empty());
    }

    #[test]
    fn gaps_wrap_around_pi() {
        assert!(gap_mod_pi(0.0005, PI - 0.0005) < 1.1e-3);
    }
}
