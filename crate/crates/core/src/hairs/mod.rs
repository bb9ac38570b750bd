//! Inverse branches of `f` on the strips, hairs `T_a`, the boundary curves
//! `W^±_{k,a}` that squeeze them, and repelling periodic points.

mod branch;
mod itinerary;
mod periodic;
mod trace;

pub use branch::{inverse_branch, log_branch};
pub use itinerary::Itinerary;
pub use periodic::{periodic_point, PeriodicPoint, SeedPolicy};
pub use trace::{trace_boundary, trace_hair, BoundarySide, HairPoint, HairSample, HairSide};

use thiserror::Error;

use crate::arith::ArithError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HairError {
    #[error("point outside the range of the inverse branch: {0}")]
    OutsideRange(String),
    #[error("invalid itinerary: {0}")]
    InvalidItinerary(String),
    #[error("itinerary has only {available} symbols, {needed} needed")]
    ItineraryTooShort { needed: usize, available: usize },
    #[error("depth must be at least 1")]
    InvalidDepth,
    #[error("periodic point iteration did not converge after {iterations} iterations")]
    NonConvergence { iterations: u32 },
    #[error("cycle point is not repelling (|multiplier| = {0})")]
    NotRepelling(f64),
    #[error(transparent)]
    Arith(#[from] ArithError),
}
