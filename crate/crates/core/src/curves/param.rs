use rug::Float;
use serde::{Deserialize, Serialize};

use super::CurveError;
use crate::arith::{dec, ArithError, HPComplex, Precision};
use crate::dynmap::ExpMap;

/// Exact base curves on the parameter interval `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaseShape {
    /// `a + s (b - a)`.
    Segment { a: HPComplex, b: HPComplex },
    /// `center + radius e^{iθ}`, `θ` running from `theta0` to `theta1`.
    /// `ends`, when present, replaces the values at `s = 0` and `s = 1`, so
    /// that arcs sharing a corner share it bit for bit.
    Arc {
        center: HPComplex,
        #[serde(with = "dec")]
        radius: Float,
        #[serde(with = "dec")]
        theta0: Float,
        #[serde(with = "dec")]
        theta1: Float,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        ends: Option<(HPComplex, HPComplex)>,
    },
    /// Piecewise linear through `zs` at increasing parameters `ts`.
    Polyline {
        #[serde(with = "dec::vec")]
        ts: Vec<Float>,
        zs: Vec<HPComplex>,
    },
    /// Pieces traversed in order, each on an equal share of `[0, 1]`.
    Composite { pieces: Vec<BaseShape> },
}

/// `t ↦ f^iterates(base(t0 + (t1 - t0) t))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parametrization {
    pub base: BaseShape,
    #[serde(with = "dec")]
    pub t0: Float,
    #[serde(with = "dec")]
    pub t1: Float,
    pub iterates: u32,
}

/// Evaluation stopped at `step` (0 means the base curve itself failed).
#[derive(Debug, Clone, PartialEq)]
pub struct EvalError {
    pub step: u32,
    pub cause: ArithError,
}

impl EvalError {
    pub(crate) fn into_curve_error(self, partial: Option<super::SampledCurve>) -> CurveError {
        match (self.cause, partial) {
            (ArithError::ExponentBudgetExceeded { .. }, Some(p)) => {
                CurveError::ExponentBudgetExceeded { step: self.step, partial: Box::new(p) }
            }
            (c, _) => CurveError::Arith(c),
        }
    }
}

impl BaseShape {
    fn eval(&self, s: &Float, prec: Precision) -> Result<(HPComplex, HPComplex), ArithError> {
        let b = prec.bits;
        match self {
            BaseShape::Segment { a, b: e } => {
                let a = a.with_precision(prec);
                let d = &e.with_precision(prec) - &a;
                Ok((&a + &d.scale(s), d))
            }
            BaseShape::Arc { center, radius, theta0, theta1, ends } => {
                let span = Float::with_val(b, theta1 - theta0);
                let th = Float::with_val(b, theta0 + Float::with_val(b, &span * s));
                let r = Float::with_val(b, radius);
                let e = HPComplex::from_polar(&r, &th, prec);
                let d = e.mul_i().scale(&span);
                let z = match ends {
                    Some((p, _)) if s.is_zero() => p.with_precision(prec),
                    Some((_, q)) if *s == 1 => q.with_precision(prec),
                    _ => &center.with_precision(prec) + &e,
                };
                Ok((z, d))
            }
            BaseShape::Polyline { ts, zs } => {
                let n = ts.len();
                if n < 2 || zs.len() != n {
                    return Err(ArithError::NonFinite);
                }
                let i = match ts.binary_search_by(|t| t.partial_cmp(s).unwrap()) {
                    Ok(i) => {
                        let j = i.min(n - 2);
                        let d = segment_derivative(&zs[j], &zs[j + 1], &ts[j], &ts[j + 1], prec)?;
                        return Ok((zs[i].with_precision(prec), d));
                    }
                    Err(i) => i.clamp(1, n - 1) - 1,
                };
                let d = segment_derivative(&zs[i], &zs[i + 1], &ts[i], &ts[i + 1], prec)?;
                let u = Float::with_val(b, s - &ts[i]);
                Ok((&zs[i].with_precision(prec) + &d.scale(&u), d))
            }
            BaseShape::Composite { pieces } => {
                let n = pieces.len();
                if n == 0 {
                    return Err(ArithError::NonFinite);
                }
                let x = Float::with_val(b, s * n as u32);
                let j = x.to_f64().floor().clamp(0.0, (n - 1) as f64) as usize;
                let local = Float::with_val(b, &x - j as u32);
                let (z, d) = pieces[j].eval(&local, prec)?;
                Ok((z, d.scale(&Float::with_val(b, n as u32))))
            }
        }
    }

    /// Parameters in `(0, 1)` where the shape may fail to be C¹.
    pub fn corners(&self, prec: Precision) -> Vec<Float> {
        match self {
            BaseShape::Composite { pieces } => {
                let n = pieces.len() as u32;
                (1..n).map(|j| Float::with_val(prec.bits, j) / n).collect()
            }
            BaseShape::Polyline { ts, .. } if ts.len() > 2 => {
                ts[1..ts.len() - 1].iter().map(|t| Float::with_val(prec.bits.max(t.prec()), t)).collect()
            }
            _ => Vec::new(),
        }
    }
}

fn segment_derivative(
    a: &HPComplex,
    b: &HPComplex,
    ta: &Float,
    tb: &Float,
    prec: Precision,
) -> Result<HPComplex, ArithError> {
    let dt = Float::with_val(prec.bits, tb - ta);
    if dt.is_zero() {
        return Err(ArithError::DivisionByZero);
    }
    let inv = Float::with_val(prec.bits, 1u32) / dt;
    Ok((&b.with_precision(prec) - &a.with_precision(prec)).scale(&inv))
}

impl Parametrization {
    pub fn new(base: BaseShape, prec: Precision) -> Self {
        Parametrization { base, t0: prec.zero(), t1: prec.float(1.0), iterates: 0 }
    }

    pub fn segment(a: HPComplex, b: HPComplex) -> Self {
        let prec = a.precision();
        Self::new(BaseShape::Segment { a, b }, prec)
    }

    /// The full circle `|z - center| = radius`, counterclockwise from angle 0.
    pub fn circle(center: HPComplex, radius: Float) -> Self {
        let prec = center.precision();
        let end = prec.two_pi();
        Self::new(BaseShape::Arc { center, radius, theta0: prec.zero(), theta1: end, ends: None }, prec)
    }

    /// The same curve composed with `n` more iterates.
    pub fn then_iterate(&self, n: u32) -> Self {
        Parametrization { iterates: self.iterates + n, ..self.clone() }
    }

    /// Restrict to the parameter window `[a, b]` of this curve, re-scaled to `[0, 1]`.
    pub fn restrict(&self, a: &Float, b: &Float) -> Self {
        let bits = self.t0.prec().max(a.prec()).max(b.prec());
        let span = Float::with_val(bits, &self.t1 - &self.t0);
        let t0 = Float::with_val(bits, &self.t0 + Float::with_val(bits, &span * a));
        let t1 = Float::with_val(bits, &self.t0 + Float::with_val(bits, &span * b));
        Parametrization { t0, t1, ..self.clone() }
    }

    /// Map a parameter of this curve to the base parameter.
    pub fn base_parameter(&self, t: &Float) -> Float {
        let bits = self.t0.prec().max(t.prec());
        let span = Float::with_val(bits, &self.t1 - &self.t0);
        Float::with_val(bits, &self.t0 + Float::with_val(bits, &span * t))
    }

    /// Corners of the base shape inside this window, as parameters of this curve.
    pub fn corners(&self, prec: Precision) -> Vec<Float> {
        let span = Float::with_val(prec.bits, &self.t1 - &self.t0);
        self.base
            .corners(prec)
            .into_iter()
            .filter(|c| *c > self.t0 && *c < self.t1)
            .map(|c| Float::with_val(prec.bits, c - &self.t0) / &span)
            .collect()
    }

    /// `(f^n(γ(t)), d/dt f^n(γ(t)))` at the map's precision.
    pub fn eval(&self, map: &ExpMap, t: &Float) -> Result<(HPComplex, HPComplex), EvalError> {
        let prec = map.precision();
        let s = self.base_parameter(t);
        let s = Float::with_val(prec.bits.max(s.prec()), s);
        let (mut z, d) = self.base.eval(&s, prec).map_err(|cause| EvalError { step: 0, cause })?;
        let span = Float::with_val(prec.bits, &self.t1 - &self.t0);
        let mut d = d.scale(&span);
        for step in 1..=self.iterates {
            z = map.apply(&z).map_err(|cause| EvalError { step, cause })?;
            d = &d * &z;
        }
        Ok((z, d))
    }

    /// Just the point; cheaper bookkeeping for callers that ignore tangents.
    pub fn point(&self, map: &ExpMap, t: &Float) -> Result<HPComplex, EvalError> {
        self.eval(map, t).map(|(z, _)| z)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynmap::{make_map, KPolicy};

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn segment_and_restriction() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let seg = Parametrization::segment(HPComplex::from_f64(0.0, 0.0, p()), HPComplex::from_f64(2.0, 2.0, p()));
        let r = seg.restrict(&p().float(0.25), &p().float(0.75));
        let (z, d) = r.eval(&m, &p().float(0.5)).unwrap();
        assert_eq!(z, HPComplex::from_f64(1.0, 1.0, p()));
        assert_eq!(d, HPComplex::from_f64(1.0, 1.0, p()));
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let m = make_map(HPComplex::from_f64(0.3, 0.8, p()), KPolicy::Auto).unwrap();
        let c = Parametrization::circle(HPComplex::from_f64(0.5, 0.5, p()), p().float(0.7)).then_iterate(2);
        let t = p().float(0.3);
        let h = Float::with_val(256, 1) >> 100;
        let (_, d) = c.eval(&m, &t).unwrap();
        let a = c.point(&m, &Float::with_val(256, &t + &h)).unwrap();
        let b = c.point(&m, &Float::with_val(256, &t - &h)).unwrap();
        let q = (&a - &b).scale(&(Float::with_val(256, 1) / Float::with_val(256, &h * 2u32)));
        assert!(q.dist(&d) / d.abs() < 1e-25);
    }

    #[test]
    fn composite_shares_corners() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let corner = HPComplex::from_f64(1.0, 1.0, p());
        let a = BaseShape::Segment { a: HPComplex::zero(p()), b: corner.clone() };
        let b = BaseShape::Segment { a: corner.clone(), b: HPComplex::from_f64(2.0, 0.0, p()) };
        let c = Parametrization::new(BaseShape::Composite { pieces: vec![a, b] }, p());
        assert_eq!(c.point(&m, &p().float(0.5)).unwrap(), corner);
        assert_eq!(c.corners(p()), vec![p().float(0.5)]);
        let (_, d) = c.eval(&m, &p().float(0.75)).unwrap();
        assert_eq!(d, HPComplex::from_f64(2.0, -2.0, p()));
    }

    #[test]
    fn budget_failure_reports_step() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let seg = Parametrization::segment(HPComplex::from_f64(11.0, 0.0, p()), HPComplex::from_f64(12.0, 0.0, p()));
        let e = seg.then_iterate(3).eval(&m, &p().float(0.5)).unwrap_err();
        assert_eq!(e.step, 3);
    }
}
