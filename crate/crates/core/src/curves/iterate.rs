use rug::Float;

use super::param::EvalError;
use super::{unit, CurveError, CurveSample, Parametrization, SampledCurve};
use crate::arith::HPComplex;
use crate::dynmap::ExpMap;
use crate::par;

/// Controls for adaptive refinement of an image curve.
#[derive(Debug, Clone)]
pub struct RefineOptions {
    /// Largest allowed chord between neighbouring image samples.
    pub tol: f64,
    /// If set, chords up to `rel_tol · |z|` are also accepted, for curves far
    /// out where absolute tolerances are meaningless.
    pub rel_tol: Option<f64>,
    /// Largest turn (radians) between neighbouring tangents, and between a
    /// chord and the tangents at its ends.
    pub max_turn: f64,
    pub sample_cap: usize,
    /// Intervals whose image lies clearly outside this box
    /// `(re_min, re_max, im_min, im_max)` are not refined further.
    pub region: Option<[Float; 4]>,
}

pub const DEFAULT_MAX_TURN: f64 = 0.1;
pub const DEFAULT_SAMPLE_CAP: usize = 1 << 20;

impl RefineOptions {
    pub fn absolute(tol: f64) -> Self {
        RefineOptions { tol, rel_tol: None, max_turn: DEFAULT_MAX_TURN, sample_cap: DEFAULT_SAMPLE_CAP, region: None }
    }

    pub fn relative(tol: f64, rel_tol: f64) -> Self {
        RefineOptions { rel_tol: Some(rel_tol), ..Self::absolute(tol) }
    }
}

/// `f^n ∘ c`, refined until neighbouring samples are within `tol` and the
/// image turns by less than 0.1 rad between samples.
pub fn iterate_curve(map: &ExpMap, c: &SampledCurve, n: u32, tol: f64) -> Result<SampledCurve, CurveError> {
    iterate_curve_with(map, c, n, &RefineOptions::absolute(tol))
}

pub fn iterate_curve_with(
    map: &ExpMap,
    c: &SampledCurve,
    n: u32,
    opts: &RefineOptions,
) -> Result<SampledCurve, CurveError> {
    c.validate()?;
    let source = c.effective_source().then_iterate(n);
    let ts: Vec<Float> = c.samples.iter().map(|s| s.t.clone()).collect();
    match refine(map, &source, ts, c.corners.clone(), c.closed, opts) {
        Ok(curve) => Ok(curve),
        Err(Failure::Eval(e)) if e.step > source.iterates - n => {
            // failure inside the new iterates: report the last good image
            let good = e.step - (source.iterates - n) - 1;
            let partial = if good == 0 { c.clone() } else { iterate_curve_with(map, c, good, opts)? };
            Err(CurveError::ExponentBudgetExceeded { step: e.step - (source.iterates - n), partial: Box::new(partial) })
        }
        Err(Failure::Eval(e)) => Err(e.into_curve_error(None)),
        Err(Failure::Curve(e)) => Err(e),
    }
}

enum Failure {
    Eval(EvalError),
    Curve(CurveError),
}

fn evaluate(map: &ExpMap, src: &Parametrization, ts: &[Float]) -> Result<Vec<CurveSample>, Failure> {
    let vals = par::map(ts, |t| src.eval(map, t));
    let mut first_err: Option<EvalError> = None;
    let mut out = Vec::with_capacity(ts.len());
    for (t, v) in ts.iter().zip(vals) {
        match v {
            Ok((z, d)) => out.push(CurveSample { t: t.clone(), z, tangent: unit(&d) }),
            Err(e) => {
                if first_err.as_ref().is_none_or(|f| e.step < f.step) {
                    first_err = Some(e);
                }
            }
        }
    }
    match first_err {
        Some(e) => Err(Failure::Eval(e)),
        None => Ok(out),
    }
}

/// Angle in `[0, π]` between two directions.
pub fn turn_angle(a: &HPComplex, b: &HPComplex) -> f64 {
    let cross = Float::with_val(64, a.re() * b.im()) - Float::with_val(64, a.im() * b.re());
    let dot = Float::with_val(64, a.re() * b.re()) + Float::with_val(64, a.im() * b.im());
    // atan2 in MPFR: chords far out overflow f64
    cross.atan2(&dot).to_f64().abs()
}

fn outside_region(a: &HPComplex, b: &HPComplex, chord: &Float, region: &[Float; 4]) -> bool {
    let pad = Float::with_val(chord.prec(), chord * 2u32);
    let lo = |x: &Float, y: &Float| Float::with_val(x.prec(), x.clone().min(y) - &pad);
    let hi = |x: &Float, y: &Float| Float::with_val(x.prec(), x.clone().max(y) + &pad);
    hi(a.re(), b.re()) < region[0]
        || lo(a.re(), b.re()) > region[1]
        || hi(a.im(), b.im()) < region[2]
        || lo(a.im(), b.im()) > region[3]
}

/// `b_is_corner`: the tangent stored at `b` belongs to the next piece.
fn needs_split(a: &CurveSample, b: &CurveSample, b_is_corner: bool, opts: &RefineOptions) -> bool {
    let prec = a.z.precision();
    let d = &b.z - &a.z;
    let chord = d.abs();
    let scale = a.z.abs().max(&b.z.abs());
    // below rounding resolution nothing more can be learned
    if chord <= Float::with_val(prec.bits, &scale * prec.rel_tol(24)) {
        return false;
    }
    if let Some(region) = &opts.region {
        if outside_region(&a.z, &b.z, &chord, region) {
            return false;
        }
    }
    let mut limit = Float::with_val(prec.bits, opts.tol);
    if let Some(r) = opts.rel_tol {
        let rel = Float::with_val(prec.bits, &scale * r);
        if rel > limit {
            limit = rel;
        }
    }
    if chord > limit {
        return true;
    }
    match (&a.tangent, &b.tangent) {
        (Some(ta), _) if b_is_corner => turn_angle(&d, ta) > opts.max_turn,
        (Some(ta), Some(tb)) => {
            turn_angle(ta, tb) > opts.max_turn || turn_angle(&d, ta) > opts.max_turn || turn_angle(&d, tb) > opts.max_turn
        }
        _ => false,
    }
}

fn refine(
    map: &ExpMap,
    src: &Parametrization,
    mut ts: Vec<Float>,
    corners: Vec<Float>,
    closed: bool,
    opts: &RefineOptions,
) -> Result<SampledCurve, Failure> {
    let prec = map.precision();
    for c in &corners {
        if !ts.contains(c) {
            ts.push(c.clone());
        }
    }
    ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut samples = evaluate(map, src, &ts)?;
    loop {
        let split: Vec<usize> = (0..samples.len() - 1)
            .filter(|&i| needs_split(&samples[i], &samples[i + 1], corners.contains(&samples[i + 1].t), opts))
            .collect();
        if split.is_empty() {
            break;
        }
        if samples.len() + split.len() > opts.sample_cap {
            return Err(Failure::Curve(CurveError::SampleCapExceeded { cap: opts.sample_cap }));
        }
        let mut mids = Vec::with_capacity(split.len());
        for &i in &split {
            let (a, b) = (&samples[i].t, &samples[i + 1].t);
            let m = Float::with_val(prec.bits.max(a.prec()), a + b) / 2u32;
            if m <= *a || m >= *b {
                return Err(Failure::Curve(CurveError::ParameterResolution { t: a.to_f64() }));
            }
            mids.push(m);
        }
        let new = evaluate(map, src, &mids)?;
        let mut merged = Vec::with_capacity(samples.len() + new.len());
        let mut it = new.into_iter();
        let mut next_split = split.iter().peekable();
        for (i, s) in samples.into_iter().enumerate() {
            merged.push(s);
            if next_split.peek() == Some(&&i) {
                next_split.next();
                merged.push(it.next().unwrap());
            }
        }
        samples = merged;
    }
    let closed = closed || {
        let (a, b) = (&samples[0].z, &samples.last().unwrap().z);
        let scale = a.abs().max(&b.abs()).max(&prec.float(1.0));
        a.dist(b) <= Float::with_val(prec.bits, scale * prec.rel_tol(24))
    };
    Ok(SampledCurve { closed, samples, corners, source: Some(src.clone()) })
}
