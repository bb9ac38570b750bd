use std::f64::consts::PI;

use rug::Float;
use serde::{Deserialize, Serialize};

use super::four_arc::circle_corner;
use super::{check_jordan, corner_angle, ConstructionError};
use crate::arith::{dec, HPComplex, Precision};
use crate::curves::{
    angle_set, diameter, iterate_curve_with, winding_number, winding_number_by_crossings, AngleSetOptions,
    Parametrization, RefineOptions, SampledCurve, TRANSVERSALITY_FLOOR,
};
use crate::dynmap::ExpMap;
use crate::hairs::HairSample;
use crate::par;

/// Largest C¹ distance from a circle arc for a strand: relative radius
/// error plus tangent angle error.
pub const C1_GATE: f64 = 0.05;
/// Iterates from the source curve to the target: one onto the circle
/// arcs, two more from there to `z`.
const ITERATES: u32 = 3;

#[derive(Debug, Clone)]
pub struct SurroundBudget {
    pub max_precision_bits: u32,
    /// Samples per smooth piece of the curve when looking for strands.
    pub strand_samples: usize,
    /// How many candidate quadrilaterals are built and verified.
    pub max_candidates: usize,
}

impl Default for SurroundBudget {
    fn default() -> Self {
        SurroundBudget { max_precision_bits: 131072, strand_samples: 64, max_candidates: 16 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verified {
    pub winding: i64,
    pub diameter: f64,
    pub corner_angles: Vec<f64>,
}

/// `f^iterates` of the source curve between parameters `start` and `end`,
/// traversed in that order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Subarc {
    #[serde(with = "dec")]
    pub start: Float,
    #[serde(with = "dec")]
    pub end: Float,
    pub iterates: u32,
}

impl Subarc {
    pub fn interval(&self) -> (Float, Float) {
        if self.start <= self.end {
            (self.start.clone(), self.end.clone())
        } else {
            (self.end.clone(), self.start.clone())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurroundCertificate {
    pub subarcs: Vec<Subarc>,
    pub target: HPComplex,
    pub epsilon: f64,
    /// Working precision needed to evaluate the subarcs.
    pub precision_bits: u32,
    /// Second preimage of the target inside the quadrilateral of arcs.
    pub y: HPComplex,
    pub verified: Verified,
}

/// A piece of the source curve that `f` maps close to a circle arc centred
/// at the origin.
#[derive(Debug, Clone)]
struct Strand {
    lo: Float,
    hi: Float,
    root: Float,
    /// Im of the curve over the strand; `arg λ + v` is the arc's angle.
    v_lo: Float,
    v_hi: Float,
    radius: Float,
}

fn tilt(dz: &HPComplex) -> f64 {
    let (x, y) = (dz.re().to_f64(), dz.im().to_f64());
    let t = (y.atan2(x) - PI / 2.0).rem_euclid(PI);
    if t > PI / 2.0 {
        t - PI
    } else {
        t
    }
}

fn strands(map: &ExpMap, src: &Parametrization, samples: usize) -> Result<Vec<Strand>, ConstructionError> {
    let prec = map.precision();
    let bits = prec.bits;
    let mut cuts = vec![prec.zero()];
    cuts.extend(src.corners(prec));
    cuts.push(prec.float(1.0));
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();
    let n = samples.max(2);
    let ln_lam = map.ln_abs_lambda().clone();
    let mut out = Vec::new();
    for w in cuts.windows(2) {
        let (a, b) = (&w[0], &w[1]);
        let span = Float::with_val(bits, b - a);
        // midpoints: a vertex of a polyline belongs to the next segment
        let ts: Vec<Float> = (0..n)
            .map(|i| Float::with_val(bits, a + Float::with_val(bits, &span * (2 * i + 1) as u32) / (2 * n) as u32))
            .collect();
        let vals = par::map(&ts, |t| src.eval(map, t));
        let mut pts = Vec::with_capacity(n);
        for v in vals {
            pts.push(v.map_err(|e| e.into_curve_error(None))?);
        }
        let tilts: Vec<f64> = pts.iter().map(|(_, d)| tilt(d)).collect();
        let mut i = 0;
        while i < n {
            if tilts[i].abs() > C1_GATE / 2.0 {
                i += 1;
                continue;
            }
            let mut j = i;
            while j + 1 < n && tilts[j + 1].abs() <= C1_GATE / 2.0 {
                j += 1;
            }
            let ic = (i..=j).min_by(|&p, &q| tilts[p].abs().total_cmp(&tilts[q].abs())).unwrap();
            let x = pts[ic].0.re().clone();
            let metric = |k: usize| {
                let dx = Float::with_val(64, pts[k].0.re() - &x).to_f64();
                dx.exp_m1().abs() + tilts[k].abs()
            };
            let (mut lo_i, mut hi_i) = (i, j);
            while lo_i < ic && metric(lo_i) > C1_GATE {
                lo_i += 1;
            }
            while hi_i > ic && metric(hi_i) > C1_GATE {
                hi_i -= 1;
            }
            let lo = if lo_i == 0 { a.clone() } else { ts[lo_i].clone() };
            let hi = if hi_i == n - 1 { b.clone() } else { ts[hi_i].clone() };
            if lo < hi {
                let ends = [src.point(map, &lo), src.point(map, &hi)];
                let mut v_lo = pts[lo_i].0.im().clone();
                let mut v_hi = v_lo.clone();
                let mut widen = |v: &Float| {
                    if *v < v_lo {
                        v_lo = v.clone();
                    }
                    if *v > v_hi {
                        v_hi = v.clone();
                    }
                };
                for k in lo_i..=hi_i {
                    widen(pts[k].0.im());
                }
                for e in ends.into_iter().flatten() {
                    widen(e.im());
                }
                let radius = Float::with_val(bits, &ln_lam + &x).exp();
                out.push(Strand { lo, hi, root: ts[ic].clone(), v_lo, v_hi, radius });
            }
            i = j + 1;
        }
    }
    Ok(out)
}

fn in_window(phi: &Float, s: &Strand, arg_lambda: &Float, prec: Precision) -> bool {
    let tau = prec.two_pi();
    let width = Float::with_val(prec.bits, &s.v_hi - &s.v_lo);
    if width >= tau {
        return true;
    }
    let mut d = Float::with_val(prec.bits, phi - arg_lambda) - &s.v_lo;
    d = d.remainder(&tau);
    if d < 0 {
        d += &tau;
    }
    d <= width
}

/// Four strands `a, b` (circles about 0) and `c, d` (lifted by `2πi`), with
/// a second preimage `y` of the target inside the quadrilateral they bound.
#[derive(Debug, Clone)]
struct Candidate {
    idx: [usize; 4],
    y: HPComplex,
    ln_diameter: f64,
}

enum Search {
    Found(Vec<Candidate>),
    Horizon(u32, String),
}

/// Second preimages `log(w/λ) + 2πim`, `w = log(z/λ) + 2πik`, for the few
/// branches `k` whose `y` lands nearest `target`. Both logs are needed at
/// full precision since `|w|` is about `|λ| e^{Re y}`.
fn preimages_near(map: &ExpMap, z: &HPComplex, target: &HPComplex) -> Vec<HPComplex> {
    let prec = map.precision();
    let b = prec.bits;
    let tau = prec.two_pi();
    let lam = map.lambda();
    let Ok(l) = z.with_precision(prec).div(lam).and_then(|q| q.ln()) else {
        return Vec::new();
    };
    let big_w = Float::with_val(b, map.ln_abs_lambda() + target.re()).exp();
    let rad = Float::with_val(b, big_w.square_ref()) - Float::with_val(b, l.re().square_ref());
    if rad <= 0 {
        return Vec::new();
    }
    let k0 = Float::with_val(b, (rad.sqrt() - l.im()) / &tau).round();
    let mut out = Vec::new();
    for dk in -2i32..=2 {
        let k = Float::with_val(b, &k0 + dk);
        let w = l.add_imag(&Float::with_val(b, &tau * &k));
        let Ok(v) = w.div(lam).and_then(|q| q.ln()) else { continue };
        let m = (Float::with_val(b, target.im() - v.im()) / &tau).round();
        out.push(v.add_imag(&Float::with_val(b, &tau * &m)));
    }
    out
}

fn candidates(map: &ExpMap, z: &HPComplex, eps: f64, st: &[Strand], budget: &SurroundBudget) -> Search {
    let prec = map.precision();
    let b = prec.bits;
    let arg_l = map.arg_lambda();
    let two_pi_i = HPComplex::two_pi_i(prec);
    let ln_eps = (0.9 * eps).ln();
    let ln_z_lam = Float::with_val(b, z.abs().ln() + map.ln_abs_lambda()).to_f64();
    let mut found = Vec::new();
    let mut too_deep: Option<u32> = None;
    let mut geometric = 0usize;
    let n = st.len();
    for ia in 0..n {
        for ib in 0..n {
            if st[ia].radius >= st[ib].radius {
                continue;
            }
            for ic in 0..n {
                for id in 0..n {
                    if st[ic].radius >= st[id].radius {
                        continue;
                    }
                    let (ra, rb, sc, sd) = (&st[ia].radius, &st[ib].radius, &st[ic].radius, &st[id].radius);
                    let rho = Float::with_val(b, ra + rb) / 2u32;
                    let sigma = Float::with_val(b, sc + sd) / 2u32;
                    let Some(y0) = circle_corner(&rho, &sigma, prec) else { continue };
                    let (phi, phit) = (y0.arg(), (&y0 - &two_pi_i).arg());
                    if !in_window(&phi, &st[ia], arg_l, prec)
                        || !in_window(&phi, &st[ib], arg_l, prec)
                        || !in_window(&phit, &st[ic], arg_l, prec)
                        || !in_window(&phit, &st[id], arg_l, prec)
                    {
                        continue;
                    }
                    let alpha = Float::with_val(b, &phi - &phit).abs().to_f64();
                    if alpha < 1.2 * TRANSVERSALITY_FLOOR {
                        continue;
                    }
                    let gap = Float::with_val(b, rb - ra).max(&Float::with_val(b, sd - sc));
                    let ln_quad = Float::with_val(b, gap * 2u32).ln().to_f64() - alpha.sin().ln();
                    let x = y0.re().to_f64();
                    let ln_diameter = ln_z_lam + x + ln_quad;
                    if !(ln_diameter <= ln_eps) {
                        continue;
                    }
                    geometric += 1;
                    let need = (x.max(0.0) * std::f64::consts::LOG2_E).ceil() as u32 + 320;
                    if need > budget.max_precision_bits {
                        too_deep = Some(too_deep.map_or(need, |t| t.min(need)));
                        continue;
                    }
                    let hp = map.with_precision(prec.with_bits(need.max(b)));
                    let inside = preimages_near(&hp, z, &y0).into_iter().find(|y| {
                        let (r, t) = (y.abs(), (y - &HPComplex::two_pi_i(hp.precision())).abs());
                        r > *ra && r < *rb && t > *sc && t < *sd
                    });
                    if let Some(y) = inside {
                        found.push(Candidate { idx: [ia, ib, ic, id], y, ln_diameter });
                    }
                }
            }
        }
    }
    if found.is_empty() {
        return match too_deep {
            Some(need) => Search::Horizon(ITERATES, format!("quadrilateral needs {need} bits")),
            None if geometric > 0 => Search::Horizon(
                ITERATES,
                format!("{geometric} small quadrilateral(s), none contains a second preimage of the target"),
            ),
            None => Search::Horizon(1, format!("{n} strands, no small quadrilateral around a second preimage")),
        };
    }
    found.sort_by(|p, q| p.ln_diameter.total_cmp(&q.ln_diameter));
    found.truncate(budget.max_candidates);
    Search::Found(found)
}

/// `f(γ(s)) + 2πiτ` and its derivative.
fn lifted(map: &ExpMap, src: &Parametrization, s: &Float, tau: bool) -> Result<(HPComplex, HPComplex), String> {
    let (g, dg) = src.then_iterate(1).eval(map, s).map_err(|e| format!("{:?}", e.cause))?;
    let g = if tau { &g + &HPComplex::two_pi_i(map.precision()) } else { g };
    Ok((g, dg))
}

/// Parameter on the strand whose image has angle `phi`.
fn param_for_angle(map: &ExpMap, src: &Parametrization, st: &Strand, phi: &Float) -> Result<Float, String> {
    let prec = map.precision();
    let b = prec.bits;
    let tau = prec.two_pi();
    let mid = Float::with_val(b, &st.v_lo + &st.v_hi) / 2u32;
    let raw = Float::with_val(b, phi - map.arg_lambda());
    let turns = Float::with_val(b, Float::with_val(b, &mid - &raw) / &tau).round();
    let v = raw + Float::with_val(b, &tau * turns);
    let mut s = st.root.clone();
    for _ in 0..40 {
        let (zc, dz) = src.eval(map, &s).map_err(|e| format!("{:?}", e.cause))?;
        if dz.im().is_zero() {
            break;
        }
        let step = Float::with_val(b, Float::with_val(b, zc.im() - &v) / dz.im());
        s -= &step;
        s = s.clamp(&st.lo, &st.hi);
        if step.is_zero() {
            break;
        }
    }
    Ok(s)
}

/// Solve `f(γ(s)) + 2πiτ_i = f(γ(u)) + 2πiτ_j` near the ideal corner `p`.
fn corner(
    map: &ExpMap,
    src: &Parametrization,
    (si, ti): (&Strand, bool),
    (sj, tj): (&Strand, bool),
    p: &HPComplex,
) -> Result<(Float, Float, HPComplex), String> {
    let prec = map.precision();
    let b = prec.bits;
    let two_pi_i = HPComplex::two_pi_i(prec);
    let unlift = |t: bool| if t { (p - &two_pi_i).arg() } else { p.arg() };
    let mut s = param_for_angle(map, src, si, &unlift(ti))?;
    let mut u = param_for_angle(map, src, sj, &unlift(tj))?;
    let mut last: Option<Float> = None;
    for _ in 0..80 {
        let (gi, di) = lifted(map, src, &s, ti)?;
        let (gj, dj) = lifted(map, src, &u, tj)?;
        let f = &gi - &gj;
        let res = f.abs();
        let scale = gi.abs();
        if res <= Float::with_val(b, &scale * prec.rel_tol(48)) {
            if s < si.lo || s > si.hi || u < sj.lo || u > sj.hi {
                return Err("corner outside strand".into());
            }
            return Ok((s, u, gi));
        }
        if last.as_ref().is_some_and(|l| res >= *l) {
            return Err("corner iteration stalled".into());
        }
        last = Some(res);
        // [di, -dj] (ds, du) = -f, as a real 2×2 system
        let (a, bb, c, d) = (di.re(), dj.re(), di.im(), dj.im());
        let det = Float::with_val(b, Float::with_val(b, bb * c) - Float::with_val(b, a * d));
        if det.is_zero() {
            return Err("tangent corner".into());
        }
        let (r1, r2) = (f.re(), f.im());
        // with B = -bb, D = -d, r = -f
        let ds = Float::with_val(b, Float::with_val(b, r1 * d) - Float::with_val(b, bb * r2)) / &det;
        let du = Float::with_val(b, Float::with_val(b, c * r1) - Float::with_val(b, a * r2)) / &det;
        s += ds;
        u += du;
    }
    Err("corner iteration did not converge".into())
}

fn sample_piece(
    map: &ExpMap,
    src: &Parametrization,
    start: &Float,
    end: &Float,
    iterates: u32,
    tol: f64,
) -> Result<SampledCurve, ConstructionError> {
    let piece = src.restrict(start, end).then_iterate(iterates);
    let curve = SampledCurve::from_source(map, piece, 9, false)?;
    Ok(iterate_curve_with(map, &curve, 0, &RefineOptions::absolute(tol))?)
}

fn build(
    map: &ExpMap,
    src: &Parametrization,
    z: &HPComplex,
    eps: f64,
    st: &[Strand],
    cand: &Candidate,
) -> Result<SurroundCertificate, String> {
    let y = cand.y.clone();
    let prec = y.precision();
    let map = map.with_precision(prec);
    let b = prec.bits;
    let [ia, ib, ic, id] = cand.idx;
    let (sa, sb, sc, sd) = (&st[ia], &st[ib], &st[ic], &st[id]);

    let ideal = |r: &Strand, s: &Strand| circle_corner(&r.radius, &s.radius, prec).ok_or("circles do not meet");
    // loop: a from (a,c) to (a,d), d to (b,d), b to (b,c), c back to (a,c)
    let (pac, pad, pbd, pbc) = (ideal(sa, sc)?, ideal(sa, sd)?, ideal(sb, sd)?, ideal(sb, sc)?);
    let (a_in, c_out, q_ac) = corner(&map, src, (sa, false), (sc, true), &pac)?;
    let (a_out, d_in, q_ad) = corner(&map, src, (sa, false), (sd, true), &pad)?;
    let (b_in, d_out, q_bd) = corner(&map, src, (sb, false), (sd, true), &pbd)?;
    let (b_out, c_in, q_bc) = corner(&map, src, (sb, false), (sc, true), &pbc)?;
    let subarcs = vec![
        Subarc { start: a_in, end: a_out, iterates: ITERATES },
        Subarc { start: d_in, end: d_out, iterates: ITERATES },
        Subarc { start: b_in, end: b_out, iterates: ITERATES },
        Subarc { start: c_in, end: c_out, iterates: ITERATES },
    ];
    for i in 0..4 {
        for j in i + 1..4 {
            let (p, q) = (subarcs[i].interval(), subarcs[j].interval());
            if p.0 <= q.1 && q.0 <= p.1 {
                return Err("subarcs overlap".into());
            }
        }
    }
    let corners = [q_ad, q_bd, q_bc, q_ac];

    let tol = eps / 64.0;
    let mut pieces = Vec::with_capacity(4);
    for sa in &subarcs {
        pieces.push(sample_piece(&map, src, &sa.start, &sa.end, sa.iterates, tol).map_err(|e| e.to_string())?);
    }
    // shared corners: f² of the corner in the plane of the arcs
    for (j, q) in corners.iter().enumerate() {
        let img = map.apply(q).and_then(|v| map.apply(&v)).map_err(|e| e.to_string())?;
        let next = (j + 1) % 4;
        let end = pieces[j].samples.last_mut().unwrap();
        let gap1 = end.z.dist(&img).to_f64();
        end.z = img.clone();
        let start = &mut pieces[next].samples[0];
        let gap2 = start.z.dist(&img).to_f64();
        start.z = img;
        if gap1.max(gap2) > tol {
            return Err(format!("corner gap {:.3e}", gap1.max(gap2)));
        }
    }
    let mut angles = Vec::with_capacity(4);
    for j in 0..4 {
        let tin = pieces[j].samples.last().unwrap().tangent.clone();
        let tout = pieces[(j + 1) % 4].samples[0].tangent.clone();
        match (tin, tout) {
            (Some(p), Some(q)) => angles.push(corner_angle(&p, &q)),
            _ => return Err("corner tangent vanishes".into()),
        }
    }
    let mut pts: Vec<HPComplex> = pieces[0].points();
    for p in &pieces[1..] {
        pts.extend(p.points().into_iter().skip(1));
    }
    let image = SampledCurve::polyline(pts, true).map_err(|e| e.to_string())?;
    let verified = check_jordan(&image, &z.with_precision(prec), 0.99 * eps, tol, &angles)?;
    Ok(SurroundCertificate { subarcs, target: z.clone(), epsilon: eps, precision_bits: b, y, verified })
}

/// Four subarcs of `c` whose images form a Jordan curve around `z` of
/// diameter at most `eps`.
///
/// The curve must cross `hair` transversally. The search looks for strands,
/// pieces of `c` that `f` maps C¹-close to circle arcs centred at 0, picks
/// four whose circles bound a small quadrilateral around a second preimage
/// `y` of `z`, joins them at corners found by Newton's method, and verifies
/// the image under three iterates. When no quadrilateral fits within the
/// budget the answer is [`ConstructionError::PrecisionHorizon`]; a
/// certificate is returned only after every check has passed.
pub fn surround_from_curve(
    map: &ExpMap,
    c: &SampledCurve,
    hair: &HairSample,
    z: &HPComplex,
    eps: f64,
    budget: &SurroundBudget,
) -> Result<SurroundCertificate, ConstructionError> {
    if z.is_zero() {
        return Err(ConstructionError::ZeroTarget);
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(ConstructionError::InvalidEpsilon(eps));
    }
    c.validate()?;
    let crossings = angle_set(map, c, 0, std::slice::from_ref(hair), &AngleSetOptions::default())?;
    if crossings.angles.is_empty() {
        return Err(ConstructionError::NoTransversalCrossing);
    }
    let bits = map.precision().bits.max(c.precision().bits);
    let work = map.with_precision(map.precision().with_bits(bits));
    let src = c.effective_source();
    let st = strands(&work, &src, budget.strand_samples)?;
    if st.len() < 2 {
        return Err(ConstructionError::PrecisionHorizon {
            step: 1,
            reason: format!("{} strand(s) close to circle arcs", st.len()),
        });
    }
    let cands = match candidates(&work, z, eps, &st, budget) {
        Search::Found(c) => c,
        Search::Horizon(step, reason) => return Err(ConstructionError::PrecisionHorizon { step, reason }),
    };
    let results = par::map(&cands, |cand| build(&work, &src, z, eps, &st, cand));
    let mut last = String::new();
    for r in results {
        match r {
            Ok(cert) => return Ok(cert),
            Err(why) => last = why,
        }
    }
    Err(ConstructionError::PrecisionHorizon { step: ITERATES, reason: format!("no candidate verified ({last})") })
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplayReport {
    pub winding: Option<i64>,
    pub winding_by_crossings: Option<i64>,
    pub diameter: f64,
    /// Largest distance between consecutive subarc endpoints.
    pub closure_gap: f64,
    pub ok: bool,
}

/// Re-evaluate a certificate from scratch: sample each subarc image with a
/// finer tolerance, join them without snapping corners, and recompute the
/// winding number and diameter.
pub fn replay(map: &ExpMap, c: &SampledCurve, cert: &SurroundCertificate) -> Result<ReplayReport, ConstructionError> {
    let prec = map.precision().with_bits(cert.precision_bits.max(map.precision().bits));
    let map = map.with_precision(prec);
    let src = c.effective_source();
    let tol = cert.epsilon / 128.0;
    let mut pts = Vec::new();
    let mut gap = 0f64;
    let mut last: Option<HPComplex> = None;
    let mut first: Option<HPComplex> = None;
    for sa in &cert.subarcs {
        let piece = sample_piece(&map, &src, &sa.start, &sa.end, sa.iterates, tol)?;
        let p = piece.points();
        if let Some(l) = &last {
            gap = gap.max(l.dist(&p[0]).to_f64());
        }
        first.get_or_insert_with(|| p[0].clone());
        last = p.last().cloned();
        pts.extend(p);
    }
    if let (Some(a), Some(b)) = (&first, &last) {
        gap = gap.max(a.dist(b).to_f64());
    }
    let image = SampledCurve::polyline(pts, true)?;
    let z = cert.target.with_precision(prec);
    let w1 = winding_number(&image, &z).ok();
    let w2 = winding_number_by_crossings(&image, &z).ok();
    let d = diameter(&image.points()).to_f64();
    let ok = gap <= cert.epsilon / 32.0 && w1.is_some() && w1 == w2 && w1.map(i64::abs) == Some(1) && d <= cert.epsilon;
    Ok(ReplayReport { winding: w1, winding_by_crossings: w2, diameter: d, closure_gap: gap, ok })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChainStage {
    pub target: HPComplex,
    pub epsilon: f64,
    /// Window of the original curve and iterates the stage started from.
    #[serde(with = "dec::pair")]
    pub input_interval: (Float, Float),
    pub input_iterates: u32,
    pub certificate: SurroundCertificate,
    /// Window of the original curve that survives this stage.
    #[serde(with = "dec::pair")]
    pub interval: (Float, Float),
    pub iterates: u32,
}

#[derive(Debug, Clone, Serialize)]
pub struct RefinementChain {
    pub stages: Vec<ChainStage>,
    /// Why the chain stopped before the last target, if it did.
    pub stopped: Option<String>,
    pub horizon_step: Option<u32>,
}

/// The curve a stage works on: `f^iterates` of `c` over `interval`.
pub fn stage_input(
    map: &ExpMap,
    c: &SampledCurve,
    interval: &(Float, Float),
    iterates: u32,
) -> Result<SampledCurve, ConstructionError> {
    if iterates == 0 && interval.0 == 0 && interval.1 == 1 {
        return Ok(c.clone());
    }
    let bits = map.precision().bits.max(c.precision().bits);
    let work = map.with_precision(map.precision().with_bits(bits));
    let src = c.effective_source().restrict(&interval.0, &interval.1).then_iterate(iterates);
    Ok(SampledCurve::from_source(&work, src, 65, false)?)
}

/// Apply [`surround_from_curve`] to each target in turn, each time on the
/// image of the subarc that survived the previous stage. Stops at the first
/// stage that cannot be certified.
pub fn refine_dense_orbit(
    map: &ExpMap,
    c: &SampledCurve,
    hair: &HairSample,
    targets: &[(HPComplex, f64)],
    budget: &SurroundBudget,
) -> RefinementChain {
    let bits = map.precision().bits.max(c.precision().bits);
    let mut chain = RefinementChain { stages: Vec::new(), stopped: None, horizon_step: None };
    let mut interval = (Float::with_val(bits, 0), Float::with_val(bits, 1));
    let mut iterates = 0u32;
    for (z, eps) in targets {
        let result = stage_input(map, c, &interval, iterates)
            .and_then(|curve| surround_from_curve(map, &curve, hair, z, *eps, budget));
        let cert = match result {
            Ok(cert) => cert,
            Err(e) => {
                if let ConstructionError::PrecisionHorizon { step, .. } = &e {
                    chain.horizon_step = Some(iterates + step);
                }
                chain.stopped = Some(e.to_string());
                break;
            }
        };
        let (lo, hi) = cert.subarcs[0].interval();
        let span = Float::with_val(bits, &interval.1 - &interval.0);
        let next = (
            Float::with_val(bits, &interval.0 + Float::with_val(bits, &span * &lo)),
            Float::with_val(bits, &interval.0 + Float::with_val(bits, &span * &hi)),
        );
        let next_iterates = iterates + cert.subarcs[0].iterates;
        chain.stages.push(ChainStage {
            target: z.clone(),
            epsilon: *eps,
            input_interval: interval.clone(),
            input_iterates: iterates,
            certificate: cert,
            interval: next.clone(),
            iterates: next_iterates,
        });
        interval = next;
        iterates = next_iterates;
    }
    chain
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::curves::BaseShape;
    use crate::dynmap::{make_map, KPolicy};
    use crate::hairs::{trace_hair, Itinerary};

    fn p() -> Precision {
        Precision::default()
    }

    pub(crate) fn real_hair(map: &ExpMap) -> HairSample {
        let anchors: Vec<Float> = (0..21).map(|k| p().float(10.6 + 0.04 * k as f64)).collect();
        trace_hair(map, &Itinerary::zeros(), 10, &anchors).unwrap()
    }

    /// A polyline crossing the real axis at 11 and then visiting four short
    /// vertical pieces whose images are arcs of circles straddling a second
    /// preimage of `z` (found with `|y|` near `radius`), `spread` times the
    /// nominal gap apart.
    pub(crate) fn designed_curve(map: &ExpMap, z: &HPComplex, eps: f64, radius: f64, spread: f64, bits: u32) -> SampledCurve {
        let prec = map.precision().with_bits(bits);
        let hi = map.with_precision(prec);
        let x = radius / 2f64.sqrt();
        let tau = prec.two_pi();
        let big_w = Float::with_val(bits, hi.ln_abs_lambda() + prec.float(x)).exp();
        let k = Float::with_val(bits, &big_w / &tau).round();
        let (v, w) = super::super::second_preimage(&hi, z, &k, &prec.zero()).unwrap();
        let m = (Float::with_val(bits, v.re() - v.im()) / &tau).round();
        let (y, _) = super::super::second_preimage(&hi, z, &k, &m).unwrap();
        let yt = &y - &HPComplex::two_pi_i(prec);
        let alpha = Float::with_val(bits, y.arg() - yt.arg()).abs();
        let delta = Float::with_val(bits, eps * alpha.sin()) / Float::with_val(bits, z.abs() * w.abs() * 8u32) * spread;
        let (ry, rt) = (y.abs(), yt.abs());
        let mut verts = vec![HPComplex::from_f64(10.95, -0.05, prec), HPComplex::from_f64(11.05, 0.05, prec)];
        for (r, phi, sign) in [(&ry, y.arg(), -1i32), (&ry, y.arg(), 1), (&rt, yt.arg(), -1), (&rt, yt.arg(), 1)] {
            let rr = Float::with_val(bits, r + Float::with_val(bits, &delta * sign));
            let xr = Float::with_val(bits, rr.ln() - hi.ln_abs_lambda());
            let v0 = Float::with_val(bits, &phi - hi.arg_lambda());
            let lo = HPComplex::new(xr.clone(), Float::with_val(bits, &v0 - 0.001), prec).unwrap();
            let top = HPComplex::new(xr.clone(), Float::with_val(bits, &v0 + 0.001), prec).unwrap();
            let detour = HPComplex::new(Float::with_val(bits, &xr + 1u32), top.im().clone(), prec).unwrap();
            verts.extend([lo, top, detour]);
        }
        let n = verts.len() - 1;
        let ts = (0..=n).map(|i| Float::with_val(bits, i) / n as u32).collect();
        let src = Parametrization::new(BaseShape::Polyline { ts, zs: verts }, prec);
        SampledCurve::from_source(&hi, src, 2, false).unwrap()
    }

    #[test]
    fn vertical_segment_hits_the_horizon() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let c = SampledCurve::from_source(
            &m,
            Parametrization::segment(HPComplex::from_f64(11.0, -1.0, p()), HPComplex::from_f64(11.0, 1.0, p())),
            9,
            false,
        )
        .unwrap();
        let r = surround_from_curve(&m, &c, &real_hair(&m), &HPComplex::from_f64(2.0, 0.0, p()), 0.5, &SurroundBudget::default());
        assert!(matches!(r, Err(ConstructionError::PrecisionHorizon { step: 1, .. })), "{r:?}");
    }

    #[test]
    fn tangent_curve_is_rejected() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let c = SampledCurve::from_source(
            &m,
            Parametrization::segment(HPComplex::from_f64(10.8, 0.0, p()), HPComplex::from_f64(11.2, 0.0001, p())),
            9,
            false,
        )
        .unwrap();
        let r = surround_from_curve(&m, &c, &real_hair(&m), &HPComplex::from_f64(2.0, 0.0, p()), 0.5, &SurroundBudget::default());
        assert_eq!(r.unwrap_err(), ConstructionError::NoTransversalCrossing);
    }

    #[test]
    fn designed_curve_is_certified_and_replays() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let z = HPComplex::from_f64(2.0, 0.0, p());
        let c = designed_curve(&m, &z, 0.5, 2000.0, 1.0, 2400);
        let cert = surround_from_curve(&m, &c, &real_hair(&m), &z, 0.5, &SurroundBudget::default()).unwrap();
        assert_eq!(cert.verified.winding.abs(), 1);
        assert!(cert.verified.diameter <= 0.5);
        assert!(cert.subarcs.iter().all(|s| s.iterates == 3));
        let r = replay(&m, &c, &cert).unwrap();
        assert!(r.ok, "{r:?}");

        let json = serde_json::to_string(&cert).unwrap();
        let back: SurroundCertificate = serde_json::from_str(&json).unwrap();
        assert!(replay(&m, &c, &back).unwrap().ok);
    }

    #[test]
    fn wide_quadrilateral_is_not_certified() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let z = HPComplex::from_f64(2.0, 0.0, p());
        let c = designed_curve(&m, &z, 0.5, 2000.0, 1e6, 2400);
        let r = surround_from_curve(&m, &c, &real_hair(&m), &z, 0.5, &SurroundBudget::default());
        assert!(matches!(r, Err(ConstructionError::PrecisionHorizon { .. })), "{r:?}");
    }

    #[test]
    fn chain_stages_are_nested() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let z = HPComplex::from_f64(2.0, 0.0, p());
        let c = designed_curve(&m, &z, 0.5, 2000.0, 1.0, 2400);
        let targets = vec![(z.clone(), 0.5), (HPComplex::from_f64(-1.0, 1.0, p()), 0.5)];
        let chain = refine_dense_orbit(&m, &c, &real_hair(&m), &targets, &SurroundBudget::default());
        assert_eq!(chain.stages.len(), 1);
        assert!(chain.stopped.is_some());
        let s = &chain.stages[0];
        assert!(s.interval.0 >= s.input_interval.0 && s.interval.1 <= s.input_interval.1);
        assert!(s.interval.0 < s.interval.1);
        assert!(refine_dense_orbit(&m, &c, &real_hair(&m), &[], &SurroundBudget::default()).stages.is_empty());
    }
}
