use rug::Float;
use serde::Serialize;

use crate::arith::{dec, Precision};

/// An open horizontal strip `im_low < Im z < im_high` of height π whose
/// image under `f` is the right half-plane.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Strip {
    /// `center = -arg λ + 2 k π`.
    pub k: i64,
    #[serde(with = "dec")]
    center: Float,
    #[serde(with = "dec")]
    im_low: Float,
    #[serde(with = "dec")]
    im_high: Float,
}

impl Strip {
    pub fn center(&self) -> &Float {
        &self.center
    }
    pub fn im_low(&self) -> &Float {
        &self.im_low
    }
    pub fn im_high(&self) -> &Float {
        &self.im_high
    }
}

/// All such strips inside `|Im z| <= 5π/2`, and the chosen two.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StripSystem {
    hat_strips: Vec<Strip>,
    chosen: [Strip; 2],
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Membership {
    In(u8),
    Ambiguous,
    Outside,
}

impl StripSystem {
    pub fn new(arg_lambda: &Float, prec: Precision) -> Self {
        let b = prec.bits;
        let pi = prec.pi();
        let half = Float::with_val(b, &pi / 2u32);
        let limit = Float::with_val(b, &pi * 5u32) / 2u32;
        let tol = prec.half_tol();
        let mut hat = Vec::new();
        for k in -3i64..=3 {
            let center = Float::with_val(b, &pi * (2 * k)) - arg_lambda;
            let im_low = Float::with_val(b, &center - &half);
            let im_high = Float::with_val(b, &center + &half);
            let inside = Float::with_val(b, &im_low + &limit) >= -tol.clone()
                && Float::with_val(b, &limit - &im_high) >= -tol.clone();
            if inside {
                hat.push(Strip { k, center, im_low, im_high });
            }
        }
        let mut order: Vec<&Strip> = hat.iter().collect();
        order.sort_by(|a, b| {
            let (ca, cb) = (a.center.clone().abs(), b.center.clone().abs());
            // distinct |centers| differ by at least π - |2 arg λ| ... or tie exactly
            let d = Float::with_val(ca.prec(), &ca - &cb);
            if d.clone().abs() > tol {
                d.partial_cmp(&Float::new(2)).unwrap()
            } else {
                b.center.partial_cmp(&a.center).unwrap()
            }
        });
        let chosen = [order[0].clone(), order[1].clone()];
        StripSystem { hat_strips: hat, chosen }
    }

    pub fn hat_strips(&self) -> &[Strip] {
        &self.hat_strips
    }

    /// `[Ŝ_0, Ŝ_1]`.
    pub fn chosen(&self) -> &[Strip; 2] {
        &self.chosen
    }

    pub fn center(&self, s: u8) -> &Float {
        &self.chosen[s as usize].center
    }

    pub fn membership(&self, z: &crate::arith::HPComplex, k: &Float, tol: &Float) -> Membership {
        let b = z.precision().bits;
        let dre = Float::with_val(b, z.re() - k);
        if dre < -tol.clone() {
            return Membership::Outside;
        }
        let near_left = dre <= *tol;
        for (s, st) in self.chosen.iter().enumerate() {
            let lo = Float::with_val(b, z.im() - &st.im_low);
            let hi = Float::with_val(b, &st.im_high - z.im());
            if lo > *tol && hi > *tol {
                return if near_left { Membership::Ambiguous } else { Membership::In(s as u8) };
            }
            if lo >= -tol.clone() && hi >= -tol.clone() {
                return Membership::Ambiguous;
            }
        }
        Membership::Outside
    }
}
