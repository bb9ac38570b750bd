use std::cmp::Ordering;

use rug::Float;
use serde::{Deserialize, Serialize};

use super::{dec, Precision};

/// Extra mantissa bits. Rebuilding a real from level `l` amplifies relative
/// mantissa error by roughly the product of the intermediate values' logs.
const GUARD: u32 = 64;

/// Level-index magnitude: `exp` applied `level` times to `mantissa`.
///
/// For `level >= 1` the mantissa lies in `[1, e)`. At level 0 any real
/// below `e` is allowed, including negatives. With that normalization the
/// order on denoted reals is the lexicographic order on `(level, mantissa)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TowerMagnitude {
    level: u32,
    #[serde(with = "dec")]
    mantissa: Float,
}

impl TowerMagnitude {
    /// Normalized representation of the finite real `x`.
    ///
    /// Mantissas within a few ulps below `e` are snapped up a level, so that
    /// values like `e^e` computed in floating point land on `(2, 1)` rather
    /// than `(1, e - ulp)`.
    pub fn from_real(x: &Float) -> Self {
        Self::normalize(x, x.prec().max(super::MIN_PRECISION_BITS) + GUARD)
    }

    fn normalize(x: &Float, bits: u32) -> Self {
        assert!(x.is_finite(), "tower of a non-finite value");
        let mut m = Float::with_val(bits, x);
        let mut level = 0;
        while at_or_above_e(&m) {
            m.ln_mut();
            level += 1;
            if m < 1 {
                m = Float::with_val(bits, 1);
            }
        }
        TowerMagnitude { level, mantissa: m }
    }

    pub fn zero(bits: u32) -> Self {
        TowerMagnitude { level: 0, mantissa: Float::new(bits) }
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn mantissa(&self) -> &Float {
        &self.mantissa
    }

    /// The tower denoting `e^self`.
    pub fn exp(&self) -> Self {
        if self.level >= 1 {
            return TowerMagnitude { level: self.level + 1, mantissa: self.mantissa.clone() };
        }
        if self.mantissa >= 1 {
            return TowerMagnitude { level: 1, mantissa: self.mantissa.clone() };
        }
        let bits = self.mantissa.prec();
        Self::normalize(&Float::with_val(bits, self.mantissa.exp_ref()), bits)
    }

    /// The denoted real, if it fits the exponent budget of `prec`.
    pub fn to_real(&self, prec: Precision) -> Option<Float> {
        self.to_real_guarded(prec).map(|x| Float::with_val(prec.bits, x))
    }

    fn to_real_guarded(&self, prec: Precision) -> Option<Float> {
        let mut x = Float::with_val(self.mantissa.prec().max(prec.bits + GUARD), &self.mantissa);
        for _ in 0..self.level {
            prec.check_exp(&x).ok()?;
            x.exp_mut();
        }
        Some(x)
    }

    /// Denotes `self + c` for a modest `c`. Exact when the value fits the
    /// budget; beyond it the shift is far below the working precision and the
    /// value is returned unchanged.
    pub fn add_small(&self, c: &Float, prec: Precision) -> Self {
        match self.to_real_guarded(prec) {
            Some(x) => {
                let bits = x.prec();
                Self::normalize(&Float::with_val(bits, x + c), bits)
            }
            None => self.clone(),
        }
    }

    pub fn compare(&self, other: &Self) -> Ordering {
        self.level.cmp(&other.level).then_with(|| {
            self.mantissa.partial_cmp(&other.mantissa).expect("mantissa is never NaN")
        })
    }

    /// Approximate `log2` of the denoted value, saturating to infinity.
    pub fn log2_approx(&self) -> f64 {
        let m = self.mantissa.to_f64();
        match self.level {
            0 => m.abs().log2(),
            1 => m * std::f64::consts::LOG2_E,
            2 => m.exp() * std::f64::consts::LOG2_E,
            3 => m.exp().exp() * std::f64::consts::LOG2_E,
            _ => f64::INFINITY,
        }
    }
}

fn at_or_above_e(m: &Float) -> bool {
    let bits = m.prec();
    let e = Float::with_val(bits + 16, 1).exp();
    let snap = Float::with_val(bits + 16, &e * (1.0 - f64::powi(2.0, 8 - bits.min(1000) as i32)));
    *m >= snap
}

impl PartialEq for TowerMagnitude {
    fn eq(&self, o: &Self) -> bool {
        self.compare(o) == Ordering::Equal
    }
}

impl Eq for TowerMagnitude {}

impl PartialOrd for TowerMagnitude {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.compare(o))
    }
}

impl Ord for TowerMagnitude {
    fn cmp(&self, o: &Self) -> Ordering {
        self.compare(o)
    }
}
