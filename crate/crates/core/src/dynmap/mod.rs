//! The map `f(z) = λ e^z`, its strip system and orbit diagnostics.

mod orbit;
mod strips;

pub use orbit::{
    classify, forward_orbit, itinerary_of, verify_lemelt, Classification, LemEltReport, LemEltStep,
    OrbitRecord, OrbitSample, OrbitStatus, OrbitValue,
};
pub use strips::{Membership, Strip, StripSystem};

use rug::Float;
use thiserror::Error;

use crate::arith::{ArithError, HPComplex, Precision};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MapError {
    #[error("invalid lambda: {0}")]
    InvalidLambda(String),
    #[error("invalid K: {0}")]
    InvalidK(String),
    #[error("exponent budget exceeded at step {step}")]
    ExponentBudgetExceeded { step: u32 },
    #[error("orbit left S at step {step}")]
    OrbitLeftS { step: u32 },
    #[error("strip membership undecidable at step {step}")]
    AmbiguousMembership { step: u32 },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

#[derive(Debug, Clone, PartialEq)]
pub enum KPolicy {
    /// `max(10.5, K* + 0.5)` where `|λ| e^K* = 200 K*`.
    Auto,
    Explicit(Float),
}

/// `f(z) = λ e^z` together with the cutoff `K` and the strip system.
#[derive(Debug, Clone)]
pub struct ExpMap {
    lambda: HPComplex,
    k: Float,
    strips: StripSystem,
    ln_abs_lambda: Float,
    arg_lambda: Float,
}

/// `ln|λ| + K - ln(200 K)`; positive exactly when `|λ| e^K > 200 K`.
fn growth_margin(ln_abs_lambda: &Float, k: &Float) -> Float {
    let b = k.prec();
    let t = Float::with_val(b, k * 200u32).ln();
    Float::with_val(b, ln_abs_lambda + k) - t
}

pub fn make_map(lambda: HPComplex, policy: KPolicy) -> Result<ExpMap, MapError> {
    if lambda.is_zero() {
        return Err(MapError::InvalidLambda("lambda must be nonzero".into()));
    }
    let prec = lambda.precision();
    let ln_abs = Float::with_val(prec.bits, lambda.abs().ln());
    let k = match policy {
        KPolicy::Explicit(k) => {
            let k = Float::with_val(prec.bits, k);
            if k <= 10 {
                return Err(MapError::InvalidK(format!("K = {} must exceed 10", k.to_f64())));
            }
            if growth_margin(&ln_abs, &k) <= 0 {
                return Err(MapError::InvalidK(format!(
                    "|lambda| e^K > 200 K fails at K = {}",
                    k.to_f64()
                )));
            }
            k
        }
        KPolicy::Auto => {
            let mut lo = prec.float(10.0);
            let mut hi = prec.float(200.0);
            if growth_margin(&ln_abs, &lo) > 0 {
                prec.float(10.5)
            } else if growth_margin(&ln_abs, &hi) < 0 {
                return Err(MapError::InvalidLambda(
                    "|lambda| too small: no K in [10, 200] with |lambda| e^K > 200 K".into(),
                ));
            } else {
                for _ in 0..prec.bits {
                    let mid = Float::with_val(prec.bits, &lo + &hi) / 2u32;
                    if growth_margin(&ln_abs, &mid) > 0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                let k = hi + 0.5f64;
                if k < 10.5 {
                    prec.float(10.5)
                } else {
                    k
                }
            }
        }
    };
    let arg = lambda.arg();
    let strips = StripSystem::new(&arg, prec);
    Ok(ExpMap { lambda, k, strips, ln_abs_lambda: ln_abs, arg_lambda: arg })
}

impl ExpMap {
    pub fn lambda(&self) -> &HPComplex {
        &self.lambda
    }

    pub fn k(&self) -> &Float {
        &self.k
    }

    pub fn strips(&self) -> &StripSystem {
        &self.strips
    }

    pub fn precision(&self) -> Precision {
        self.lambda.precision()
    }

    pub fn ln_abs_lambda(&self) -> &Float {
        &self.ln_abs_lambda
    }

    pub fn arg_lambda(&self) -> &Float {
        &self.arg_lambda
    }

    /// The same map at another precision. `λ` and `K` keep their values
    /// (zero-extended when widening); strips are recomputed.
    pub fn with_precision(&self, prec: Precision) -> ExpMap {
        let lambda = self.lambda.with_precision(prec);
        let k = Float::with_val(prec.bits, &self.k);
        let ln_abs = Float::with_val(prec.bits, lambda.abs().ln());
        let arg = lambda.arg();
        let strips = StripSystem::new(&arg, prec);
        ExpMap { lambda, k, strips, ln_abs_lambda: ln_abs, arg_lambda: arg }
    }

    /// `|λ| e^K`, the inner radius of the common image `f(S_0) = f(S_1)`.
    pub fn inner_radius(&self) -> Float {
        let b = self.precision().bits;
        Float::with_val(b, &self.ln_abs_lambda + &self.k).exp()
    }

    /// `λ e^z`, at the precision of the map.
    pub fn apply(&self, z: &HPComplex) -> Result<HPComplex, ArithError> {
        let z = if z.precision() == self.precision() { z.clone() } else { z.with_precision(self.precision()) };
        Ok(&self.lambda * &z.exp()?)
    }

    /// `(f(z), Df(z))`; the two coincide for this family.
    pub fn apply_with_derivative(&self, z: &HPComplex) -> Result<(HPComplex, HPComplex), ArithError> {
        let w = self.apply(z)?;
        Ok((w.clone(), w))
    }

    /// Membership in `S_0`, `S_1` with the boundary band of width `2^(-bits/2)`.
    pub fn membership(&self, z: &HPComplex) -> Membership {
        self.strips.membership(z, &self.k, &self.precision().half_tol())
    }

    /// Whether `λ` is a positive real, so that `f` maps positive reals to
    /// positive reals.
    pub fn preserves_positive_reals(&self) -> bool {
        self.lambda.is_real() && *self.lambda.re() > 0
    }
}
