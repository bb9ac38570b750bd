//! Sampled curves, forward iteration with adaptive refinement, and planar
//! predicates on high-precision polylines.

mod angles;
mod geometry;
mod iterate;
mod param;

pub use angles::{angle_set, AngleEntry, AngleSet, AngleSetOptions, Inclusion, TRANSVERSALITY_FLOOR};
pub use geometry::{
    convex_hull, diameter, distance_to_polyline, orient, segment_intersection, self_intersections,
    winding_number, winding_number_by_crossings, Crossing, Orientation,
};
pub use iterate::{iterate_curve, iterate_curve_with, turn_angle, RefineOptions};
pub use param::{BaseShape, Parametrization};

use rug::Float;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::arith::{dec, ArithError, HPComplex, Precision};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CurveError {
    #[error("exponent budget exceeded at iterate {step}")]
    ExponentBudgetExceeded { step: u32, partial: Box<SampledCurve> },
    #[error("more than {cap} samples needed")]
    SampleCapExceeded { cap: usize },
    #[error("parameter interval near t = {t:.6e} cannot be split at this precision")]
    ParameterResolution { t: f64 },
    #[error("point lies on the curve (distance {distance:.3e})")]
    PointOnCurve { distance: f64 },
    #[error("curve is not closed")]
    NotClosed,
    #[error("invalid curve: {0}")]
    Invalid(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

impl CurveError {
    /// The iterate at which evaluation ran out of exponent budget, if that
    /// is what happened.
    pub fn budget_step(&self) -> Option<u32> {
        match self {
            CurveError::ExponentBudgetExceeded { step, .. } => Some(*step),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveSample {
    #[serde(with = "dec")]
    pub t: Float,
    pub z: HPComplex,
    /// Unit tangent, absent where the derivative vanishes or is unknown.
    pub tangent: Option<HPComplex>,
}

/// Ordered samples of a piecewise C¹ curve on `[0, 1]`.
///
/// When the curve was produced from an exact parametrization it keeps that
/// `source`, so further iterates and refinements evaluate the exact curve
/// rather than the polyline.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampledCurve {
    pub closed: bool,
    pub samples: Vec<CurveSample>,
    #[serde(with = "dec::vec", default)]
    pub corners: Vec<Float>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Parametrization>,
}

impl SampledCurve {
    /// Sample `source` at `count` equally spaced parameters (at least 2) and
    /// at its corners. Fails if the source itself cannot be evaluated.
    pub fn from_source(
        map: &crate::dynmap::ExpMap,
        source: Parametrization,
        count: usize,
        closed: bool,
    ) -> Result<SampledCurve, CurveError> {
        let prec = map.precision();
        let count = count.max(2);
        let mut ts: Vec<Float> = (0..count).map(|i| Float::with_val(prec.bits, i) / (count - 1) as u32).collect();
        let corners = source.corners(prec);
        ts.extend(corners.iter().cloned());
        ts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        ts.dedup();
        let pts = crate::par::map(&ts, |t| source.eval(map, t));
        let mut samples = Vec::with_capacity(ts.len());
        for (t, r) in ts.into_iter().zip(pts) {
            let (z, d) = r.map_err(|e| e.into_curve_error(None))?;
            samples.push(CurveSample { t, z, tangent: unit(&d) });
        }
        Ok(SampledCurve { closed, samples, corners, source: Some(source) })
    }

    /// A polyline through `points` with uniform parameters.
    pub fn polyline(points: Vec<HPComplex>, closed: bool) -> Result<SampledCurve, CurveError> {
        if points.len() < 2 {
            return Err(CurveError::Invalid("need at least two points".into()));
        }
        let prec = points[0].precision();
        let n = points.len() - 1;
        let samples = points
            .into_iter()
            .enumerate()
            .map(|(i, z)| CurveSample { t: Float::with_val(prec.bits, i) / n as u32, z, tangent: None })
            .collect();
        Ok(SampledCurve { closed, samples, corners: Vec::new(), source: None })
    }

    pub fn points(&self) -> Vec<HPComplex> {
        self.samples.iter().map(|s| s.z.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn precision(&self) -> Precision {
        self.samples.first().map_or_else(Precision::default, |s| s.z.precision())
    }

    /// The exact source, or a polyline interpolating the samples.
    pub fn effective_source(&self) -> Parametrization {
        self.source.clone().unwrap_or_else(|| {
            let prec = self.precision();
            Parametrization::new(BaseShape::Polyline {
                ts: self.samples.iter().map(|s| s.t.clone()).collect(),
                zs: self.points(),
            }, prec)
        })
    }

    /// Check the structural invariants.
    pub fn validate(&self) -> Result<(), CurveError> {
        if self.samples.len() < 2 {
            return Err(CurveError::Invalid("need at least two samples".into()));
        }
        for w in self.samples.windows(2) {
            if w[1].t <= w[0].t {
                return Err(CurveError::Invalid("parameters must increase strictly".into()));
            }
        }
        if self.samples[0].t < 0 || self.samples.last().unwrap().t > 1 {
            return Err(CurveError::Invalid("parameters must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub(crate) fn unit(d: &HPComplex) -> Option<HPComplex> {
    let r = d.abs();
    if r.is_zero() {
        None
    } else {
        let inv = Float::with_val(r.prec(), 1u32) / r;
        Some(d.scale(&inv))
    }
}
