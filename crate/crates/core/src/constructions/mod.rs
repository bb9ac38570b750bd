//! Constructions built on top of curve iteration: second preimages in a
//! sector, four-arc Jordan curves around a target, surround certificates
//! from subarcs of a curve, nested refinement, covering of the segment `𝒦`
//! and nice-set checks.

mod covering;
mod four_arc;
mod nice;
mod sector;
mod surround;

pub use covering::{covering_check, kappa_crosses_strips, kappa_segment, CoveringReport, CoveringStep};
pub use four_arc::{four_arc_jordan, ArcSpec, FourArc, FourArcCertificate};
pub use nice::{nice_check, NiceOptions, NiceVerdict, Region};
pub use sector::{second_preimage, sector_preimage, SectorPreimage};
pub use surround::{
    refine_dense_orbit, replay, stage_input, surround_from_curve, ChainStage, RefinementChain, ReplayReport,
    Subarc, SurroundBudget, SurroundCertificate, Verified,
};

use thiserror::Error;

use crate::arith::{ArithError, HPComplex};
use crate::curves::{
    diameter, self_intersections, winding_number, winding_number_by_crossings, CurveError, SampledCurve,
    TRANSVERSALITY_FLOOR,
};
use crate::dynmap::MapError;
use crate::hairs::HairError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstructionError {
    #[error("target must be nonzero")]
    ZeroTarget,
    #[error("invalid epsilon {0}")]
    InvalidEpsilon(f64),
    #[error("invalid radius {0}")]
    InvalidRadius(f64),
    #[error("exponent budget exceeded (about {needed_bits:.0} bits needed)")]
    ExponentBudgetExceeded { needed_bits: f64 },
    #[error("verification failed: {0}")]
    VerificationFailed(String),
    #[error("precision horizon at iterate {step}: {reason}")]
    PrecisionHorizon { step: u32, reason: String },
    #[error("exponent budget exceeded at iterate {step}; verified up to iterate {verified_up_to}")]
    BudgetStop { step: u32, verified_up_to: u32 },
    #[error("curve has no transversal crossing with the hair")]
    NoTransversalCrossing,
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Hair(#[from] HairError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Crossing angle (in `[0, π/2]`) between two directions meeting at a corner.
pub(crate) fn corner_angle(incoming: &HPComplex, outgoing: &HPComplex) -> f64 {
    let t = crate::curves::turn_angle(incoming, outgoing);
    t.min(std::f64::consts::PI - t)
}

/// Checks shared by the four-arc and surround constructions. `tol` is the
/// sampling tolerance; the diameter must stay below `limit - tol`.
pub(crate) fn check_jordan(
    image: &SampledCurve,
    z: &HPComplex,
    limit: f64,
    tol: f64,
    corner_angles: &[f64],
) -> Result<Verified, String> {
    let w = winding_number(image, z).map_err(|e| format!("winding: {e}"))?;
    let w2 = winding_number_by_crossings(image, z).map_err(|e| format!("winding: {e}"))?;
    if w != w2 || w.abs() != 1 {
        return Err(format!("winding: {w} (crossing count {w2})"));
    }
    let d = diameter(&image.points()).to_f64();
    if d + tol > limit {
        return Err(format!("diameter: {d:.4e} exceeds {limit:.4e}"));
    }
    if let Some(a) = corner_angles.iter().find(|a| **a < TRANSVERSALITY_FLOOR) {
        return Err(format!("corner angle: {a:.3e}"));
    }
    if !self_intersections(image).is_empty() {
        return Err("simple: image crosses itself".into());
    }
    Ok(Verified { winding: w, diameter: d, corner_angles: corner_angles.to_vec() })
}
