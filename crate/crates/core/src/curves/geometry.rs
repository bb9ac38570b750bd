use std::cmp::Ordering;

use rug::{Float, Rational};
use serde::Serialize;

use super::{CurveError, SampledCurve};
use crate::arith::{dec, mod_pi, HPComplex};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    CounterClockwise,
    Clockwise,
    Collinear,
}

fn exact(x: &Float) -> Rational {
    x.to_rational().expect("finite coordinate")
}

/// Sign of `(b - a) × (c - a)`, decided exactly.
///
/// A floating-point evaluation with twice the input precision settles almost
/// every case; when its error bound straddles zero the determinant is
/// recomputed in rationals.
pub fn orient(a: &HPComplex, b: &HPComplex, c: &HPComplex) -> Orientation {
    let q = 2 * a.precision().bits.max(b.precision().bits).max(c.precision().bits) + 64;
    let f = |x: &Float, y: &Float| Float::with_val(q, x - y);
    let (bx, by) = (f(b.re(), a.re()), f(b.im(), a.im()));
    let (cx, cy) = (f(c.re(), a.re()), f(c.im(), a.im()));
    let l = Float::with_val(q, &bx * &cy);
    let r = Float::with_val(q, &by * &cx);
    let det = Float::with_val(q, &l - &r);
    let bound = Float::with_val(q, l.abs_ref()) + Float::with_val(q, r.abs_ref());
    let bound = bound >> (q as i32 - 4);
    let sign = if det > bound {
        Ordering::Greater
    } else if det < -bound.clone() {
        Ordering::Less
    } else {
        let (ax, ay) = (exact(a.re()), exact(a.im()));
        let bx = exact(b.re()) - &ax;
        let by = exact(b.im()) - &ay;
        let cx = exact(c.re()) - &ax;
        let cy = exact(c.im()) - &ay;
        let d = bx * cy - by * cx;
        d.cmp0()
    };
    match sign {
        Ordering::Greater => Orientation::CounterClockwise,
        Ordering::Less => Orientation::Clockwise,
        Ordering::Equal => Orientation::Collinear,
    }
}

fn cross(u: &HPComplex, v: &HPComplex) -> Float {
    let b = u.precision().bits + 16;
    Float::with_val(b, u.re() * v.im()) - Float::with_val(b, u.im() * v.re())
}

fn dot(u: &HPComplex, v: &HPComplex) -> Float {
    let b = u.precision().bits + 16;
    Float::with_val(b, u.re() * v.re()) + Float::with_val(b, u.im() * v.im())
}

fn within_box(p: &HPComplex, a: &HPComplex, b: &HPComplex) -> bool {
    let inside = |x: &Float, lo: &Float, hi: &Float| {
        let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
        x >= lo && x <= hi
    };
    inside(p.re(), a.re(), b.re()) && inside(p.im(), a.im(), b.im())
}

/// Where the half-open segments `[a, b)` and `[c, d)` meet, as fractions
/// `(s, u)` along each. Collinear overlaps are not reported.
pub fn segment_intersection(a: &HPComplex, b: &HPComplex, c: &HPComplex, d: &HPComplex) -> Option<(Float, Float)> {
    use Orientation::Collinear as Z;
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if o1 == Z && o2 == Z {
        return None;
    }
    let straddles = |x: Orientation, y: Orientation| x != y || x == Z;
    if !(straddles(o1, o2) && straddles(o3, o4)) {
        return None;
    }
    // touching cases: the end of either segment is excluded
    if o2 == Z && within_box(d, a, b) {
        return None;
    }
    if o4 == Z && within_box(b, c, d) {
        return None;
    }
    if o1 == Z && !within_box(c, a, b) {
        return None;
    }
    if o3 == Z && !within_box(a, c, d) {
        return None;
    }
    let bits = a.precision().bits;
    let r = b - a;
    let s = d - c;
    let den = cross(&r, &s);
    if den.is_zero() {
        return None;
    }
    let ca = c - a;
    let mut t = Float::with_val(bits, cross(&ca, &s) / &den);
    let mut u = Float::with_val(bits, cross(&ca, &r) / &den);
    if o3 == Z {
        t = Float::new(bits);
    }
    if o1 == Z {
        u = Float::new(bits);
    }
    Some((t, u))
}

/// Distance from `z` to the polyline through `line`.
pub fn distance_to_polyline(z: &HPComplex, line: &[HPComplex], closed: bool) -> Float {
    let bits = z.precision().bits;
    let mut best: Option<Float> = None;
    let n = line.len();
    let segs = if closed { n } else { n.saturating_sub(1) };
    if n == 1 {
        return z.dist(&line[0]);
    }
    for i in 0..segs {
        let (a, b) = (&line[i], &line[(i + 1) % n]);
        let ab = b - a;
        let az = z - a;
        let len2 = ab.abs_sq();
        let d = if len2.is_zero() {
            az.abs()
        } else {
            let mut t = Float::with_val(bits, dot(&az, &ab) / &len2);
            if t < 0 {
                t = Float::new(bits);
            } else if t > 1 {
                t = Float::with_val(bits, 1);
            }
            (&az - &ab.scale(&t)).abs()
        };
        if best.as_ref().is_none_or(|b| d < *b) {
            best = Some(d);
        }
    }
    best.unwrap_or_else(|| Float::with_val(bits, f64::INFINITY))
}

fn closed_points(c: &SampledCurve) -> Result<Vec<HPComplex>, CurveError> {
    if !c.closed {
        return Err(CurveError::NotClosed);
    }
    let mut pts = c.points();
    if pts.len() > 1 && pts[0] == *pts.last().unwrap() {
        pts.pop();
    }
    Ok(pts)
}

fn check_off_curve(pts: &[HPComplex], z: &HPComplex) -> Result<(), CurveError> {
    let prec = z.precision();
    let scale = pts.iter().fold(z.abs().max(&prec.float(1.0)), |m, p| m.max(&p.abs()));
    let tol = Float::with_val(prec.bits, scale * prec.rel_tol(16));
    let d = distance_to_polyline(z, pts, true);
    if d <= tol {
        return Err(CurveError::PointOnCurve { distance: d.to_f64() });
    }
    Ok(())
}

/// Winding number of the closed polyline around `z`, from the sum of the
/// signed angles subtended by its edges.
pub fn winding_number(c: &SampledCurve, z: &HPComplex) -> Result<i64, CurveError> {
    let pts = closed_points(c)?;
    check_off_curve(&pts, z)?;
    let bits = z.precision().bits;
    let mut total = Float::new(bits + 16);
    let n = pts.len();
    for i in 0..n {
        let u = &pts[i] - z;
        let v = &pts[(i + 1) % n] - z;
        let c = cross(&u, &v);
        let d = dot(&u, &v);
        total += c.atan2(&d);
    }
    let turns = (total / z.precision().two_pi()).to_f64();
    Ok(turns.round() as i64)
}

/// Winding number by signed crossings of the downward ray from `z`, with exact
/// orientation tests. Independent of [`winding_number`].
pub fn winding_number_by_crossings(c: &SampledCurve, z: &HPComplex) -> Result<i64, CurveError> {
    let pts = closed_points(c)?;
    check_off_curve(&pts, z)?;
    let n = pts.len();
    let mut w = 0i64;
    for i in 0..n {
        let (a, b) = (&pts[i], &pts[(i + 1) % n]);
        if a.re() <= z.re() {
            if b.re() > z.re() && orient(a, b, z) == Orientation::CounterClockwise {
                w += 1;
            }
        } else if b.re() <= z.re() && orient(a, b, z) == Orientation::Clockwise {
            w -= 1;
        }
    }
    Ok(w)
}

#[derive(Debug, Clone, Serialize)]
pub struct Crossing {
    #[serde(with = "dec")]
    pub t1: Float,
    #[serde(with = "dec")]
    pub t2: Float,
    /// Angle between the two segment directions, in `[0, π)`.
    pub angle: f64,
}

struct Seg {
    lo_x: Float,
    hi_x: Float,
    lo_y: Float,
    hi_y: Float,
    i: usize,
}

fn segments(pts: &[HPComplex], closed: bool) -> Vec<Seg> {
    let n = pts.len();
    let count = if closed { n } else { n - 1 };
    (0..count)
        .map(|i| {
            let (a, b) = (&pts[i], &pts[(i + 1) % n]);
            let (lo_x, hi_x) = if a.re() <= b.re() { (a.re(), b.re()) } else { (b.re(), a.re()) };
            let (lo_y, hi_y) = if a.im() <= b.im() { (a.im(), b.im()) } else { (b.im(), a.im()) };
            Seg { lo_x: lo_x.clone(), hi_x: hi_x.clone(), lo_y: lo_y.clone(), hi_y: hi_y.clone(), i }
        })
        .collect()
}

/// Candidate pairs `(i, j)` of segments whose bounding boxes overlap; `i`
/// from `a`, `j` from `b` (or both from `a`, `i < j`, when `b` is `None`).
pub(crate) fn overlapping_pairs(
    a: &[HPComplex],
    a_closed: bool,
    b: Option<(&[HPComplex], bool)>,
) -> Vec<(usize, usize)> {
    let sa = segments(a, a_closed);
    let sb = b.map(|(pts, cl)| segments(pts, cl));
    let mut events: Vec<(bool, &Seg)> = sa.iter().map(|s| (false, s)).collect();
    if let Some(sb) = &sb {
        events.extend(sb.iter().map(|s| (true, s)));
    }
    events.sort_by(|x, y| x.1.lo_x.partial_cmp(&y.1.lo_x).unwrap());
    let mut active: Vec<(bool, &Seg)> = Vec::new();
    let mut out = Vec::new();
    for (side, s) in events {
        active.retain(|(_, o)| o.hi_x >= s.lo_x);
        for (oside, o) in &active {
            if sb.is_some() && *oside == side {
                continue;
            }
            if o.hi_y < s.lo_y || s.hi_y < o.lo_y {
                continue;
            }
            let pair = if sb.is_some() {
                if side { (o.i, s.i) } else { (s.i, o.i) }
            } else {
                (o.i.min(s.i), o.i.max(s.i))
            };
            out.push(pair);
        }
        active.push((side, s));
    }
    out.sort_unstable();
    out
}

pub(crate) fn direction_angle(u: &HPComplex, v: &HPComplex) -> f64 {
    let a = Float::with_val(u.precision().bits, v.arg() - u.arg());
    mod_pi(&a).to_f64()
}

/// Crossings between non-adjacent segments of the polyline. An empty list
/// certifies that the curve is simple at sampling resolution.
pub fn self_intersections(c: &SampledCurve) -> Vec<Crossing> {
    let mut pts = c.points();
    if c.closed && pts.len() > 1 && pts[0] == *pts.last().unwrap() {
        pts.pop();
    }
    let n = pts.len();
    if n < 4 {
        return Vec::new();
    }
    let nseg = if c.closed { n } else { n - 1 };
    let t_of = |i: usize| c.samples[i.min(c.samples.len() - 1)].t.clone();
    let bits = pts[0].precision().bits;
    let mut out = Vec::new();
    for (i, j) in overlapping_pairs(&pts, c.closed, None) {
        let adjacent = j == i + 1 || (c.closed && i == 0 && j == nseg - 1);
        if adjacent || i == j {
            continue;
        }
        let (a, b) = (&pts[i], &pts[(i + 1) % n]);
        let (p, q) = (&pts[j], &pts[(j + 1) % n]);
        if let Some((s, u)) = segment_intersection(a, b, p, q) {
            let lerp = |k: usize, f: &Float| {
                let (t0, t1) = (t_of(k), if k + 1 < c.samples.len() { t_of(k + 1) } else { Float::with_val(bits, 1) });
                Float::with_val(bits, &t0 + Float::with_val(bits, Float::with_val(bits, &t1 - &t0) * f))
            };
            out.push(Crossing { t1: lerp(i, &s), t2: lerp(j, &u), angle: direction_angle(&(b - a), &(q - p)) });
        }
    }
    out
}

/// Convex hull, counterclockwise, by the monotone chain.
pub fn convex_hull(points: &[HPComplex]) -> Vec<HPComplex> {
    let mut pts: Vec<HPComplex> = points.to_vec();
    pts.sort_by(|a, b| a.re().partial_cmp(b.re()).unwrap().then(a.im().partial_cmp(b.im()).unwrap()));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let mut hull: Vec<HPComplex> = Vec::with_capacity(2 * pts.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &HPComplex>> =
            if pass == 0 { Box::new(pts.iter()) } else { Box::new(pts.iter().rev()) };
        for p in iter {
            while hull.len() >= start + 2
                && orient(&hull[hull.len() - 2], &hull[hull.len() - 1], p) != Orientation::CounterClockwise
            {
                hull.pop();
            }
            hull.push(p.clone());
        }
        hull.pop();
    }
    hull
}

/// Largest distance between two samples.
pub fn diameter(points: &[HPComplex]) -> Float {
    let hull = convex_hull(points);
    let bits = points.first().map_or(64, |p| p.precision().bits);
    let mut best = Float::new(bits);
    for i in 0..hull.len() {
        for j in i + 1..hull.len() {
            let d = hull[i].dist(&hull[j]);
            if d > best {
                best = d;
            }
        }
    }
    best
}
