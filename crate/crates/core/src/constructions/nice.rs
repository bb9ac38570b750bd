use rug::Float;
use serde::Serialize;

use super::ConstructionError;
use crate::arith::{dec, HPComplex, Precision};
use crate::curves::{orient, Orientation, SampledCurve};
use crate::dynmap::{forward_orbit, ExpMap, OrbitValue};
use crate::par;

/// An open region of the plane.
#[derive(Debug, Clone, PartialEq)]
pub enum Region {
    UpperHalfPlane,
    LowerHalfPlane,
    Disk { center: HPComplex, radius: Float },
    /// Interior of a simple polygon, vertices in either orientation.
    Polygon { vertices: Vec<HPComplex> },
}

impl Region {
    /// `halfplane:upper`, `halfplane:lower`, `disk:RE,IM,R` or
    /// `polygon:X1,Y1;X2,Y2;...`.
    pub fn parse(s: &str, prec: Precision) -> Result<Region, ConstructionError> {
        let bad = || ConstructionError::Invalid(format!("cannot parse region {s:?}"));
        let (kind, rest) = s.split_once(':').ok_or_else(bad)?;
        let nums = |t: &str| -> Result<Vec<Float>, ConstructionError> {
            t.split(',').map(|x| prec.parse(x.trim()).map_err(|_| bad())).collect()
        };
        match kind.trim() {
            "halfplane" => match rest.trim() {
                "upper" => Ok(Region::UpperHalfPlane),
                "lower" => Ok(Region::LowerHalfPlane),
                _ => Err(bad()),
            },
            "disk" => {
                let v = nums(rest)?;
                if v.len() != 3 || v[2] <= 0u32 {
                    return Err(bad());
                }
                let [re, im, r]: [Float; 3] = v.try_into().map_err(|_| bad())?;
                Ok(Region::Disk { center: HPComplex::new(re, im, prec)?, radius: r })
            }
            "polygon" => {
                let mut vertices = Vec::new();
                for p in rest.split(';') {
                    let v = nums(p)?;
                    let [x, y]: [Float; 2] = v.try_into().map_err(|_| bad())?;
                    vertices.push(HPComplex::new(x, y, prec)?);
                }
                if vertices.len() < 3 {
                    return Err(bad());
                }
                Ok(Region::Polygon { vertices })
            }
            _ => Err(bad()),
        }
    }

    /// How far `z` lies inside, for points strictly inside; `None` for
    /// points on the boundary or outside. For polygons the depth is only
    /// a ranking (distance to the nearest edge line).
    pub fn depth(&self, z: &HPComplex) -> Option<Float> {
        let b = z.precision().bits;
        match self {
            Region::UpperHalfPlane => (*z.im() > 0u32).then(|| z.im().clone()),
            Region::LowerHalfPlane => (*z.im() < 0u32).then(|| Float::with_val(b, -z.im())),
            Region::Disk { center, radius } => {
                let d = Float::with_val(b, radius - &z.dist(center));
                (d > 0u32).then_some(d)
            }
            Region::Polygon { vertices } => {
                let n = vertices.len();
                let mut inside = false;
                for i in 0..n {
                    let (a, c) = (&vertices[i], &vertices[(i + 1) % n]);
                    let o = orient(a, c, z);
                    if o == Orientation::Collinear && on_segment(a, c, z) {
                        return None;
                    }
                    if (*a.im() > *z.im()) != (*c.im() > *z.im()) {
                        let up = *c.im() > *a.im();
                        if (o == Orientation::CounterClockwise) == up {
                            inside = !inside;
                        }
                    }
                }
                if !inside {
                    return None;
                }
                let mut best: Option<Float> = None;
                for i in 0..n {
                    let d = line_distance(&vertices[i], &vertices[(i + 1) % n], z);
                    if best.as_ref().is_none_or(|x| d < *x) {
                        best = Some(d);
                    }
                }
                best
            }
        }
    }

    /// Whether a point known only by its magnitude lies inside: `Some(false)`
    /// when it certainly does not, `None` when the lost angle would decide.
    fn tower_inside(&self, positive_real: bool) -> Option<bool> {
        match self {
            // a tower value is beyond every representable bounded region
            Region::Disk { .. } | Region::Polygon { .. } => Some(false),
            Region::UpperHalfPlane | Region::LowerHalfPlane => positive_real.then_some(false),
        }
    }

    fn bounded(&self) -> bool {
        matches!(self, Region::Disk { .. } | Region::Polygon { .. })
    }
}

fn on_segment(a: &HPComplex, b: &HPComplex, z: &HPComplex) -> bool {
    let within = |lo: &Float, hi: &Float, x: &Float| (lo <= x && x <= hi) || (hi <= x && x <= lo);
    within(a.re(), b.re(), z.re()) && within(a.im(), b.im(), z.im())
}

fn line_distance(a: &HPComplex, b: &HPComplex, z: &HPComplex) -> Float {
    let d = b - a;
    let w = z - a;
    let cross = Float::with_val(z.precision().bits, d.re() * w.im()) - Float::with_val(z.precision().bits, d.im() * w.re());
    cross.abs() / d.abs()
}

#[derive(Debug, Clone)]
pub struct NiceOptions {
    /// Chord tolerance between neighbouring orbit points at each step.
    pub tol: f64,
    /// Chords up to `rel_tol · |z|` are also accepted.
    pub rel_tol: f64,
    pub sample_cap: usize,
}

impl Default for NiceOptions {
    fn default() -> Self {
        NiceOptions { tol: 0.05, rel_tol: 0.05, sample_cap: 1 << 18 }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "verdict")]
pub enum NiceVerdict {
    /// No sampled point of `f^n(∂R)`, `1 <= n <= depth`, lies in the region.
    NiceUpTo { depth: u32, samples: usize },
    /// `f^n(γ(t))` lies strictly inside; the deepest such sample at the first
    /// such `n`.
    Violation {
        n: u32,
        #[serde(with = "dec")]
        t: Float,
        z: HPComplex,
    },
}

struct Sample {
    t: Float,
    orbit: Vec<OrbitValue>,
}

fn sample(map: &ExpMap, src: &crate::curves::Parametrization, t: &Float, depth: u32) -> Result<Sample, ConstructionError> {
    let z = src.point(map, t).map_err(|e| e.into_curve_error(None))?;
    Ok(Sample { t: t.clone(), orbit: forward_orbit(map, &z, depth) })
}

fn needs_split(a: &Sample, b: &Sample, region: &Region, opts: &NiceOptions) -> bool {
    for (x, y) in a.orbit.iter().zip(&b.orbit).skip(1) {
        let (Some(x), Some(y)) = (x.exact(), y.exact()) else { continue };
        if region.bounded() {
            // both far outside a bounded region and close to each other
            // relative to their size: the chord cannot reach in
            if let Region::Disk { center, radius } = region {
                let r = radius.to_f64();
                let (dx, dy) = (x.dist(center).to_f64(), y.dist(center).to_f64());
                let chord = x.dist(y).to_f64();
                if dx - chord > 2.0 * r && dy - chord > 2.0 * r {
                    continue;
                }
            }
        }
        let chord = x.dist(y).to_f64();
        let scale = x.abs().to_f64().max(y.abs().to_f64());
        if chord > opts.tol.max(opts.rel_tol * scale) {
            return true;
        }
    }
    false
}

/// Golden-section search for the deepest point of `f^n ∘ γ` over `[lo, hi]`.
fn deepest_between(
    map: &ExpMap,
    src: &crate::curves::Parametrization,
    region: &Region,
    n: u32,
    lo: &Float,
    hi: &Float,
) -> Option<(Float, Float, HPComplex)> {
    let bits = map.precision().bits;
    let depth_at = |t: &Float| -> Option<(Float, HPComplex)> {
        let mut z = src.point(map, t).ok()?;
        for _ in 0..n {
            z = map.apply(&z).ok()?;
        }
        let d = region.depth(&z).unwrap_or_else(|| Float::with_val(bits, f64::NEG_INFINITY));
        Some((d, z))
    };
    let g = Float::with_val(bits, Float::with_val(bits, 5u32).sqrt() - 1u32) / 2u32;
    let (mut a, mut b) = (Float::with_val(bits, lo), Float::with_val(bits, hi));
    let inner = |a: &Float, b: &Float| {
        let w = Float::with_val(bits, b - a);
        (Float::with_val(bits, b - Float::with_val(bits, &g * &w)), Float::with_val(bits, a + Float::with_val(bits, &g * &w)))
    };
    let (mut x1, mut x2) = inner(&a, &b);
    let (mut f1, mut f2) = (depth_at(&x1)?, depth_at(&x2)?);
    for _ in 0..(3 * bits / 4) {
        if f1.0 >= f2.0 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = inner(&a, &b).0;
            f1 = depth_at(&x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = inner(&a, &b).1;
            f2 = depth_at(&x2)?;
        }
    }
    let (t, (d, z)) = if f1.0 >= f2.0 { (x1, f1) } else { (x2, f2) };
    d.is_finite().then_some((d, t, z))
}

/// Whether `f^n(∂R)` avoids `region` for `n = 1..=depth`, judged on an
/// adaptively refined sample of `boundary`. `∂R` itself must not enter the
/// region.
pub fn nice_check(
    map: &ExpMap,
    boundary: &SampledCurve,
    region: &Region,
    depth: u32,
    opts: &NiceOptions,
) -> Result<NiceVerdict, ConstructionError> {
    let prec = map.precision();
    for s in &boundary.samples {
        // points of the boundary itself may sit inside by rounding only
        let slack = Float::with_val(prec.bits, s.z.abs().max(&prec.float(1.0)) * prec.rel_tol(16));
        if region.depth(&s.z).is_some_and(|d| d > slack) {
            return Err(ConstructionError::Invalid("the boundary itself enters the region".into()));
        }
    }
    if depth == 0 {
        return Ok(NiceVerdict::NiceUpTo { depth: 0, samples: boundary.len() });
    }
    let src = boundary.effective_source();
    let ts: Vec<Float> = boundary.samples.iter().map(|s| s.t.clone()).collect();
    let mut samples: Vec<Sample> =
        par::map(&ts, |t| sample(map, &src, t, depth)).into_iter().collect::<Result<_, _>>()?;
    let min_width = Float::with_val(map.precision().bits, 1u32) >> (map.precision().bits - 8);
    loop {
        let mids: Vec<(usize, Float)> = samples
            .windows(2)
            .enumerate()
            .filter(|(_, w)| {
                needs_split(&w[0], &w[1], region, opts)
                    && Float::with_val(min_width.prec(), &w[1].t - &w[0].t) > min_width
            })
            .map(|(i, w)| (i, Float::with_val(w[0].t.prec(), &w[0].t + &w[1].t) / 2u32))
            .collect();
        if mids.is_empty() {
            break;
        }
        if samples.len() + mids.len() > opts.sample_cap {
            return Err(ConstructionError::Invalid(format!("more than {} samples needed", opts.sample_cap)));
        }
        let new = par::map(&mids, |(_, t)| sample(map, &src, t, depth));
        let mut merged = Vec::with_capacity(samples.len() + new.len());
        let mut it = mids.iter().zip(new).peekable();
        for (i, s) in samples.into_iter().enumerate() {
            merged.push(s);
            if let Some(((j, _), _)) = it.peek() {
                if *j == i {
                    let (_, r) = it.next().unwrap();
                    merged.push(r?);
                }
            }
        }
        samples = merged;
    }
    for n in 1..=depth {
        let mut undecided = false;
        let mut best: Option<(Float, usize)> = None;
        for (i, s) in samples.iter().enumerate() {
            match s.orbit.get(n as usize) {
                Some(OrbitValue::Exact(z)) => {
                    if let Some(d) = region.depth(z) {
                        if best.as_ref().is_none_or(|(b, _)| d > *b) {
                            best = Some((d, i));
                        }
                    }
                }
                Some(OrbitValue::Tower { positive_real, .. }) => {
                    if region.tower_inside(*positive_real).is_none() {
                        undecided = true;
                    }
                }
                None => undecided = true,
            }
        }
        if let Some((d, i)) = best {
            let s = &samples[i];
            let z = s.orbit[n as usize].exact().expect("exact").clone();
            let lo = &samples[i.saturating_sub(1)].t;
            let hi = &samples[(i + 1).min(samples.len() - 1)].t;
            let (t, z) = match deepest_between(map, &src, region, n, lo, hi) {
                Some((dd, t, zz)) if dd >= d => (t, zz),
                _ => (s.t.clone(), z),
            };
            return Ok(NiceVerdict::Violation { n, t, z });
        }
        if undecided {
            return Err(ConstructionError::BudgetStop { step: n, verified_up_to: n - 1 });
        }
    }
    Ok(NiceVerdict::NiceUpTo { depth, samples: samples.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::Parametrization;
    use crate::dynmap::{make_map, KPolicy};

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn parse_regions() {
        assert_eq!(Region::parse("halfplane:upper", p()).unwrap(), Region::UpperHalfPlane);
        assert!(matches!(Region::parse("disk:0,0,1", p()).unwrap(), Region::Disk { .. }));
        assert!(matches!(Region::parse("polygon:0,0;1,0;0,1", p()).unwrap(), Region::Polygon { .. }));
        assert!(Region::parse("disk:0,0,-1", p()).is_err());
        assert!(Region::parse("square:1", p()).is_err());
    }

    #[test]
    fn polygon_membership() {
        let r = Region::parse("polygon:0,0;2,0;2,2;0,2", p()).unwrap();
        let d = r.depth(&HPComplex::from_f64(0.5, 1.0, p())).unwrap();
        assert!((d.to_f64() - 0.5).abs() < 1e-30);
        assert!(r.depth(&HPComplex::from_f64(2.0, 1.0, p())).is_none());
        assert!(r.depth(&HPComplex::from_f64(3.0, 1.0, p())).is_none());
        let cw = Region::parse("polygon:0,0;0,2;2,2;2,0", p()).unwrap();
        assert!(cw.depth(&HPComplex::from_f64(1.0, 1.0, p())).is_some());
    }

    #[test]
    fn unit_circle_enters_its_disk() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let c = SampledCurve::from_source(
            &m,
            Parametrization::circle(HPComplex::zero(p()), p().float(1.0)),
            64,
            true,
        )
        .unwrap();
        let disk = Region::parse("disk:0,0,1", p()).unwrap();
        let v = nice_check(&m, &c, &disk, 1, &NiceOptions::default()).unwrap();
        let NiceVerdict::Violation { n, z, .. } = v else { panic!("{v:?}") };
        assert_eq!(n, 1);
        let e1 = (-1.0f64).exp();
        let (x, y) = z.to_f64();
        assert!((x - e1).abs() < 1e-30 && y.abs() < 1e-30);
    }

    #[test]
    fn real_segment_avoids_upper_half_plane() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let c = SampledCurve::from_source(
            &m,
            Parametrization::segment(HPComplex::from_f64(-5.0, 0.0, p()), HPComplex::from_f64(5.0, 0.0, p())),
            33,
            false,
        )
        .unwrap();
        let v = nice_check(&m, &c, &Region::UpperHalfPlane, 5, &NiceOptions::default()).unwrap();
        assert!(matches!(v, NiceVerdict::NiceUpTo { depth: 5, .. }), "{v:?}");
    }

    #[test]
    fn boundary_inside_is_rejected() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let c = SampledCurve::from_source(
            &m,
            Parametrization::segment(HPComplex::from_f64(0.0, 1.0, p()), HPComplex::from_f64(1.0, 1.0, p())),
            5,
            false,
        )
        .unwrap();
        assert!(nice_check(&m, &c, &Region::UpperHalfPlane, 1, &NiceOptions::default()).is_err());
    }
}
