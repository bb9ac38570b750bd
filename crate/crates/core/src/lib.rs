//! High-precision toolkit for the exponential family `f(z) = λ e^z`.
//!
//! The crate is layered bottom-up:
//!
//! * [`arith`]: MPFR-backed complex numbers and level-index magnitudes.
//! * [`dynmap`]: the map itself, its two-strip coding and orbit diagnostics.
//! * [`hairs`]: inverse branches, hair and boundary tracing, periodic points.
//! * [`curves`]: sampled curves, adaptive forward iteration and planar predicates.
//! * [`constructions`]: Jordan curves built from circle arcs, surround
//!   certificates, nested refinement, covering and nice-set checks.
//!
//! Data-parallel loops go through [`par`], which uses rayon when the
//! `parallel` feature is on and can be switched to sequential at runtime.

pub mod arith;
pub mod constructions;
pub mod curves;
pub mod dynmap;
pub mod hairs;
pub mod par;

pub use arith::{ArithError, HPComplex, Precision, TowerMagnitude};
pub use dynmap::{make_map, ExpMap, KPolicy};

