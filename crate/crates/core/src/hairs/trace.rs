use rug::Float;
use serde::{Deserialize, Serialize};

use super::{inverse_branch, HairError, Itinerary};
use crate::arith::{dec, HPComplex, Precision};
use crate::dynmap::ExpMap;
use crate::par;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoundarySide {
    Upper,
    Lower,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HairSide {
    OnHair,
    UpperBoundary(u32),
    LowerBoundary(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HairPoint {
    /// Real part of the seed orbit at level 0.
    #[serde(with = "dec")]
    pub anchor: Float,
    pub z: HPComplex,
    /// Truncation bound from the product of `1/|f^j(z)|` along the
    /// computed backward orbit. Rounding (about `2^(8-p)|z|`) is not included.
    #[serde(rename = "err", with = "dec")]
    pub error_bound: Float,
    /// The same bound with every factor replaced by `1/2000`.
    #[serde(rename = "err_worst", with = "dec")]
    pub worst_case_bound: Float,
    /// Level at which the seed was placed.
    pub seed_level: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HairSample {
    pub itinerary: Itinerary,
    #[serde(rename = "depth")]
    pub itinerary_depth: u32,
    pub side: HairSide,
    pub points: Vec<HairPoint>,
}

impl HairSample {
    pub fn polyline(&self) -> Vec<HPComplex> {
        self.points.iter().map(|p| p.z.clone()).collect()
    }

    /// Largest distance from a point of `self` to the polyline of `other`.
    pub fn directed_hausdorff(&self, other: &HairSample) -> Float {
        let line = other.polyline();
        let bits = self.points.first().map_or(64, |p| p.z.precision().bits);
        let mut worst = Float::new(bits);
        for p in &self.points {
            let d = crate::curves::distance_to_polyline(&p.z, &line, false);
            if d > worst {
                worst = d;
            }
        }
        worst
    }
}

enum Seed {
    Center,
    Boundary(u32, BoundarySide),
}

/// The real orbit `r_0 = R`, `r_{k+1} = |λ| e^{r_k}` up to the deepest level
/// whose successor is still representable and below `2^(2p)` (or `depth`).
fn real_orbit(map: &ExpMap, anchor: &Float, depth: u32) -> Vec<Float> {
    let prec = map.precision();
    let cap = Float::with_val(prec.bits, 1) << (2 * prec.bits as i32);
    let mut r = vec![Float::with_val(prec.bits, anchor)];
    while (r.len() as u32) <= depth {
        let x = Float::with_val(prec.bits, r.last().unwrap() + map.ln_abs_lambda());
        if prec.check_exp(&x).is_err() {
            break;
        }
        let next = x.exp();
        if next > cap {
            break;
        }
        r.push(next);
    }
    r
}

fn pull_back(
    map: &ExpMap,
    symbols: &[u8],
    anchor: &Float,
    depth: u32,
    seed: &Seed,
) -> Result<HairPoint, HairError> {
    let prec = map.precision();
    let b = prec.bits;
    if Float::with_val(b, anchor + prec.half_tol()) < *map.k() {
        return Err(HairError::OutsideRange(format!(
            "anchor {:.6} is left of K = {:.6}",
            anchor.to_f64(),
            map.k().to_f64()
        )));
    }
    let r = real_orbit(map, anchor, depth);
    let m = (r.len() - 1) as u32;
    let strips = map.strips();
    let (level, im, exact) = match *seed {
        Seed::Boundary(k, side) if k <= m => {
            let st = &strips.chosen()[symbols[k as usize] as usize];
            let im = match side {
                BoundarySide::Upper => st.im_high().clone(),
                BoundarySide::Lower => st.im_low().clone(),
            };
            (k, im, true)
        }
        _ => (m, strips.center(symbols[m as usize]).clone(), false),
    };
    let mut z = HPComplex::new(r[level as usize].clone(), im, prec)?;
    let mut contraction = Float::with_val(b, 1);
    for j in (0..level as usize).rev() {
        contraction /= z.abs();
        z = inverse_branch(map, &z, symbols[j])?;
    }
    let pi = prec.pi();
    let (error_bound, worst_case_bound) = if exact {
        (Float::new(b), Float::new(b))
    } else {
        let levels = match *seed {
            Seed::Boundary(k, _) => k,
            Seed::Center => depth,
        };
        let tail = (levels - level) as i32 * 2 * b as i32;
        let sharp = Float::with_val(b, &pi * &contraction) >> tail;
        let worst = Float::with_val(b, &pi / Float::with_val(b, Float::u_pow_u(2000, levels)));
        (sharp, worst)
    };
    Ok(HairPoint { anchor: Float::with_val(b, anchor), z, error_bound, worst_case_bound, seed_level: level })
}

fn sorted(anchors: &[Float], prec: Precision) -> Vec<Float> {
    let mut a: Vec<Float> = anchors.iter().map(|x| Float::with_val(prec.bits, x)).collect();
    a.sort_by(|x, y| x.partial_cmp(y).expect("finite anchors"));
    a
}

/// Points of the hair `T_a` with the given level-0 real parts.
///
/// For each anchor `R` the real orbit `r_k` of `R` under `x ↦ |λ| e^x` gives
/// a seed `r_m + i c(a_m)` at the strip center on level `m`, the deepest
/// useful level not beyond `depth`; it is pulled back along `a_{m-1}, .., a_0`.
/// Levels between `m` and `depth` contract by more than `2^(2p)` each and
/// enter the error bound only.
pub fn trace_hair(map: &ExpMap, a: &Itinerary, depth: u32, anchors: &[Float]) -> Result<HairSample, HairError> {
    if depth == 0 {
        return Err(HairError::InvalidDepth);
    }
    let symbols = a.take(depth as usize + 1)?;
    let anchors = sorted(anchors, map.precision());
    let points = par::map(&anchors, |r| pull_back(map, &symbols, r, depth, &Seed::Center))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HairSample { itinerary: a.clone(), itinerary_depth: depth, side: HairSide::OnHair, points })
}

/// Points of `W^±_{k,a}`: seeded on the upper or lower edge of `S_{a_k}` at
/// level `k` and pulled back along `a_{k-1}, .., a_0`. When level `k` is past
/// the representable range the curve agrees with `T_a` to working precision
/// and the hair seed is used.
pub fn trace_boundary(
    map: &ExpMap,
    a: &Itinerary,
    k: u32,
    side: BoundarySide,
    anchors: &[Float],
) -> Result<HairSample, HairError> {
    let symbols = a.take(k as usize + 1)?;
    let anchors = sorted(anchors, map.precision());
    let seed = Seed::Boundary(k, side);
    let points = par::map(&anchors, |r| pull_back(map, &symbols, r, k, &seed))
        .into_iter()
        .collect::<Result<Vec<_>, _>>()?;
    let side = match side {
        BoundarySide::Upper => HairSide::UpperBoundary(k),
        BoundarySide::Lower => HairSide::LowerBoundary(k),
    };
    Ok(HairSample { itinerary: a.clone(), itinerary_depth: k, side, points })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynmap::{itinerary_of, make_map, KPolicy, Membership};

    fn p() -> Precision {
        Precision::default()
    }

    fn anchors(xs: &[f64]) -> Vec<Float> {
        xs.iter().map(|&x| p().float(x)).collect()
    }

    fn unit() -> ExpMap {
        make_map(HPComplex::one(p()), KPolicy::Auto).unwrap()
    }

    #[test]
    fn real_hair_is_real() {
        let h = trace_hair(&unit(), &Itinerary::zeros(), 6, &anchors(&[50.0, 12.0, 20.0])).unwrap();
        let re: Vec<f64> = h.points.iter().map(|p| p.z.re().to_f64()).collect();
        assert_eq!(re, vec![12.0, 20.0, 50.0]);
        for pt in &h.points {
            assert!(pt.z.im().clone().abs() <= pt.error_bound);
        }
    }

    #[test]
    fn distinct_itineraries_give_distinct_points() {
        let m = unit();
        let a = trace_hair(&m, &Itinerary::zeros(), 5, &anchors(&[12.0, 20.0])).unwrap();
        let b = trace_hair(&m, &"1(0)".parse().unwrap(), 5, &anchors(&[12.0, 20.0])).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert!(x.z.dist(&y.z) > 6);
        }
    }

    #[test]
    fn seeds_sit_where_expected() {
        let m = unit();
        let h = trace_hair(&m, &"01*".parse().unwrap(), 4, &anchors(&[11.0])).unwrap();
        assert_eq!(h.points[0].seed_level, 1);
        assert!(h.points[0].error_bound <= h.points[0].worst_case_bound);
        let a: Itinerary = "0110*".parse().unwrap();
        let (w, _) = itinerary_of(&m, &h.points[0].z, 2);
        assert_eq!(w, vec![0, 1]);
        let deep = trace_hair(&m, &a, 3, &anchors(&[10.5, 11.0, 14.0])).unwrap();
        for pt in &deep.points {
            assert!(matches!(m.membership(&pt.z), Membership::In(0)));
        }
    }

    #[test]
    fn anchors_left_of_k_are_rejected() {
        let r = trace_hair(&unit(), &Itinerary::zeros(), 3, &anchors(&[10.0]));
        assert!(matches!(r, Err(HairError::OutsideRange(_))));
        assert!(matches!(trace_hair(&unit(), &Itinerary::zeros(), 0, &anchors(&[12.0])), Err(HairError::InvalidDepth)));
        let short: Itinerary = "01".parse().unwrap();
        assert!(matches!(trace_hair(&unit(), &short, 3, &anchors(&[12.0])), Err(HairError::ItineraryTooShort { .. })));
    }

    #[test]
    fn boundary_level_zero_is_strip_edge() {
        let b = trace_boundary(&unit(), &Itinerary::zeros(), 0, BoundarySide::Upper, &anchors(&[11.0, 15.0])).unwrap();
        let half_pi = Float::with_val(256, p().pi() / 2u32);
        for pt in &b.points {
            assert_eq!(pt.z.im(), &half_pi);
            assert!(*pt.z.re() >= 10.5);
        }
    }

    #[test]
    fn boundary_level_one_maps_to_edge() {
        let m = unit();
        let b = trace_boundary(&m, &Itinerary::zeros(), 1, BoundarySide::Lower, &anchors(&[11.0, 15.0])).unwrap();
        let half_pi = Float::with_val(256, p().pi() / 2u32);
        for pt in &b.points {
            let w = m.apply(&pt.z).unwrap();
            let err = Float::with_val(256, w.im() + &half_pi).abs();
            assert!(err < Float::with_val(256, w.abs() * p().rel_tol(16)));
            assert!(*w.re() >= 10.5);
        }
    }

    #[test]
    fn boundaries_squeeze_the_hair() {
        let m = make_map(HPComplex::from_f64(0.0, 1.0, p()), KPolicy::Auto).unwrap();
        let a: Itinerary = "10*".parse().unwrap();
        let xs = anchors(&[11.0, 11.5, 12.0, 13.0, 15.0]);
        let hair = trace_hair(&m, &a, 8, &xs).unwrap();
        for side in [BoundarySide::Upper, BoundarySide::Lower] {
            let mut prev: Option<Float> = None;
            for k in 0..4 {
                let w = trace_boundary(&m, &a, k, side, &xs).unwrap();
                let d = w.directed_hausdorff(&hair);
                if let Some(pd) = prev {
                    assert!(d < pd || (d.is_zero() && pd.is_zero()), "k = {k}");
                }
                prev = Some(d);
            }
        }
    }
}
