use rug::Float;
use serde::Serialize;

use super::{ExpMap, MapError, Membership};
use crate::arith::{dec, HPComplex, TowerMagnitude};

/// One orbit point: exact, or only its magnitude once it has outgrown the
/// exponent budget.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum OrbitValue {
    Exact(HPComplex),
    /// `positive_real` means the point is known to lie on the positive real
    /// axis, so the next magnitude is still computable. Otherwise the angle
    /// is lost for good.
    Tower { magnitude: TowerMagnitude, positive_real: bool },
}

impl OrbitValue {
    pub fn magnitude(&self) -> TowerMagnitude {
        match self {
            OrbitValue::Exact(z) => TowerMagnitude::from_real(&z.abs()),
            OrbitValue::Tower { magnitude, .. } => magnitude.clone(),
        }
    }

    pub fn exact(&self) -> Option<&HPComplex> {
        match self {
            OrbitValue::Exact(z) => Some(z),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitSample {
    pub n: u32,
    pub value: OrbitValue,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum OrbitStatus {
    /// Every requested step was in `S`.
    InSPrefix(u32),
    /// `f^n(z)` is outside `S`.
    LeftS(u32),
    /// `f^n(z)` is within the boundary band of `S`.
    Ambiguous(u32),
    /// `f^n(z)` no longer fits the exponent budget.
    ExponentBudgetStop(u32),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitRecord {
    pub samples: Vec<OrbitSample>,
    pub status: OrbitStatus,
}

/// One step beyond the budget: the magnitude of `λ e^z` from `Re z` alone.
fn tower_step(map: &ExpMap, z: &HPComplex) -> OrbitValue {
    let bits = map.precision().bits;
    let x = Float::with_val(bits, z.re() + map.ln_abs_lambda());
    let positive_real = map.preserves_positive_reals() && z.is_real();
    OrbitValue::Tower { magnitude: TowerMagnitude::from_real(&x).exp(), positive_real }
}

/// Orbit `z_0 .. z_steps` without any strip bookkeeping. Exact points are
/// followed by tower magnitudes as long as the angle stays known (positive
/// real orbits of positive real `λ`), and the list stops where it is not.
pub fn forward_orbit(map: &ExpMap, z: &HPComplex, steps: u32) -> Vec<OrbitValue> {
    let prec = map.precision();
    let mut out = vec![OrbitValue::Exact(z.with_precision(prec))];
    for _ in 0..steps {
        let next = match out.last().unwrap() {
            OrbitValue::Exact(w) => match map.apply(w) {
                Ok(v) => OrbitValue::Exact(v),
                Err(_) => tower_step(map, w),
            },
            OrbitValue::Tower { magnitude, positive_real: true } => OrbitValue::Tower {
                magnitude: magnitude.add_small(map.ln_abs_lambda(), prec).exp(),
                positive_real: true,
            },
            OrbitValue::Tower { positive_real: false, .. } => break,
        };
        out.push(next);
    }
    out
}

/// Longest prefix `a_0 .. a_{m-1}` (`m <= depth`) with `f^n(z) ∈ S_{a_n}`.
pub fn itinerary_of(map: &ExpMap, z: &HPComplex, depth: u32) -> (Vec<u8>, OrbitRecord) {
    let mut word = Vec::new();
    let mut samples = Vec::new();
    let mut cur = z.with_precision(map.precision());
    for n in 0..depth {
        samples.push(OrbitSample { n, value: OrbitValue::Exact(cur.clone()) });
        match map.membership(&cur) {
            Membership::In(s) => word.push(s),
            Membership::Outside => return (word, OrbitRecord { samples, status: OrbitStatus::LeftS(n) }),
            Membership::Ambiguous => return (word, OrbitRecord { samples, status: OrbitStatus::Ambiguous(n) }),
        }
        if n + 1 == depth {
            break;
        }
        match map.apply(&cur) {
            Ok(next) => cur = next,
            Err(_) => {
                samples.push(OrbitSample { n: n + 1, value: tower_step(map, &cur) });
                return (word, OrbitRecord { samples, status: OrbitStatus::ExponentBudgetStop(n + 1) });
            }
        }
    }
    let status = OrbitStatus::InSPrefix(word.len() as u32);
    (word, OrbitRecord { samples, status })
}

/// The three orbit inequalities at one step `j`.
#[derive(Debug, Clone, Serialize)]
pub struct LemEltStep {
    pub j: u32,
    #[serde(with = "dec")]
    pub re: Float,
    #[serde(with = "dec")]
    pub re_lower_bound: Float,
    #[serde(with = "dec")]
    pub arg: Float,
    #[serde(with = "dec")]
    pub arg_bound: Float,
    /// Unwrapped argument of `Df^j(z)`, the sum of the step arguments.
    #[serde(with = "dec")]
    pub derivative_arg: Float,
    /// `Σ |arg f^i(z)|` for `i <= j`.
    #[serde(with = "dec")]
    pub abs_arg_sum: Float,
    pub re_ok: bool,
    pub arg_ok: bool,
    pub derivative_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LemEltReport {
    pub z: HPComplex,
    pub n: u32,
    pub steps: Vec<LemEltStep>,
    /// `(10 / Re z) / 99`.
    #[serde(with = "dec")]
    pub derivative_bound: Float,
    pub passed: bool,
}

/// Check, for `j = 1..=n`, that `Re f^j z > 100^j Re z`,
/// `|arg f^j z| < 10 / (100^j Re z)` and
/// `|arg Df^j z| <= Σ|arg f^i z| < (10 / Re z)/99 < 1/50`.
/// Requires `z, f(z), .., f^n(z)` all in `S`.
pub fn verify_lemelt(map: &ExpMap, z: &HPComplex, n: u32) -> Result<LemEltReport, MapError> {
    let (_, rec) = itinerary_of(map, z, n + 1);
    match rec.status {
        OrbitStatus::InSPrefix(m) if m == n + 1 => {}
        OrbitStatus::LeftS(s) | OrbitStatus::InSPrefix(s) => return Err(MapError::OrbitLeftS { step: s }),
        OrbitStatus::Ambiguous(s) => return Err(MapError::AmbiguousMembership { step: s }),
        OrbitStatus::ExponentBudgetStop(s) => return Err(MapError::ExponentBudgetExceeded { step: s }),
    }
    let bits = map.precision().bits;
    let z0 = rec.samples[0].value.exact().unwrap();
    let re0 = z0.re().clone();
    let derivative_bound = Float::with_val(bits, 10u32) / &re0 / 99u32;
    let mut passed = derivative_bound < Float::with_val(bits, 1u32) / 50u32;
    let mut steps = Vec::new();
    let mut arg_sum = Float::new(bits);
    let mut abs_sum = Float::new(bits);
    let mut hundred_pow = Float::with_val(bits, 1u32);
    for j in 1..=n {
        let w = rec.samples[j as usize].value.exact().unwrap();
        hundred_pow *= 100u32;
        let scale = Float::with_val(bits, &hundred_pow * &re0);
        let arg = w.arg();
        arg_sum += &arg;
        abs_sum += arg.clone().abs();
        let arg_bound = Float::with_val(bits, 10u32) / &scale;
        let re_ok = *w.re() > scale;
        let arg_ok = arg.clone().abs() < arg_bound;
        let derivative_ok = arg_sum.clone().abs() <= abs_sum && abs_sum < derivative_bound;
        passed &= re_ok && arg_ok && derivative_ok;
        steps.push(LemEltStep {
            j,
            re: w.re().clone(),
            re_lower_bound: scale,
            arg,
            arg_bound,
            derivative_arg: arg_sum.clone(),
            abs_arg_sum: abs_sum.clone(),
            re_ok,
            arg_ok,
            derivative_ok,
        });
    }
    Ok(LemEltReport { z: z0.clone(), n, steps, derivative_bound, passed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Classification {
    /// `|f^(n+K)(z)| > g^n(0)` for every reachable `n`, with `K` the offset.
    FastEscapingCandidate(u32),
    EscapingCandidate,
    BoundedSoFar,
    Undecided,
}

/// Minimum number of tower comparisons behind a fast-escaping verdict.
const MIN_COMPARISONS: usize = 3;

/// Finite-budget escape classification of the orbit of `z`.
///
/// Offsets `K = 0, 1, ..` are tried in order and the first one for which
/// `|f^(n+K)(z)| > g^n(0)` holds for every `n` with `n + K` reachable (at
/// least three comparisons) is reported. Otherwise an orbit that stays in
/// `|w| <= 200 K` for the whole budget is `BoundedSoFar`, one whose last
/// magnitudes grow past that radius is `EscapingCandidate`.
pub fn classify(map: &ExpMap, z: &HPComplex, budget: u32) -> Classification {
    let budget = budget.max(1);
    let orbit = forward_orbit(map, z, budget);
    let mags: Vec<TowerMagnitude> = orbit.iter().map(|v| v.magnitude()).collect();
    let bits = map.precision().bits;
    let mut g = vec![TowerMagnitude::zero(bits)];
    while g.len() < mags.len() {
        let next = g.last().unwrap().exp();
        g.push(next);
    }
    for k in 0..mags.len() {
        let count = mags.len() - k;
        if count < MIN_COMPARISONS {
            break;
        }
        if (0..count).all(|n| mags[n + k] > g[n]) {
            return Classification::FastEscapingCandidate(k as u32);
        }
    }
    let radius = TowerMagnitude::from_real(&Float::with_val(bits, map.k() * 200u32));
    let complete = orbit.len() == budget as usize + 1;
    if complete && mags.iter().all(|m| *m <= radius) {
        return Classification::BoundedSoFar;
    }
    let l = mags.len();
    if l >= 3 && mags[l - 1] > radius && mags[l - 1] > mags[l - 2] && mags[l - 2] > mags[l - 3] {
        return Classification::EscapingCandidate;
    }
    Classification::Undecided
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Precision;
    use crate::dynmap::{make_map, KPolicy};

    fn p() -> Precision {
        Precision::default()
    }

    fn unit_map() -> ExpMap {
        make_map(HPComplex::one(p()), KPolicy::Auto).unwrap()
    }

    fn c(re: f64, im: f64) -> HPComplex {
        HPComplex::from_f64(re, im, p())
    }

    #[test]
    fn real_orbit_stays_in_strip_zero() {
        let (w, rec) = itinerary_of(&unit_map(), &c(11.0, 0.0), 10);
        assert_eq!(w, vec![0, 0, 0]);
        assert_eq!(rec.status, OrbitStatus::ExponentBudgetStop(3));
        assert!(matches!(rec.samples[3].value, OrbitValue::Tower { positive_real: true, .. }));
    }

    #[test]
    fn shifted_real_orbit() {
        // f(11 + 2πi) = e^11 lands in S_0; the rounded 2π then tips f^2 out
        let z = HPComplex::new(p().float(11.0), p().two_pi(), p()).unwrap();
        let (w, rec) = itinerary_of(&unit_map(), &z, 10);
        assert_eq!(w, vec![1, 0]);
        assert_eq!(rec.status, OrbitStatus::LeftS(2));
    }

    #[test]
    fn origin_is_outside() {
        let (w, rec) = itinerary_of(&unit_map(), &c(0.0, 0.0), 5);
        assert!(w.is_empty());
        assert_eq!(rec.status, OrbitStatus::LeftS(0));
    }

    #[test]
    fn itineraries_are_prefix_closed() {
        let m = unit_map();
        for z in [c(11.0, 0.2), c(12.0, 6.0), c(10.6, -1.0), c(30.0, 0.0)] {
            let mut prev = itinerary_of(&m, &z, 0).0;
            for d in 1..5 {
                let cur = itinerary_of(&m, &z, d).0;
                assert!(cur.starts_with(&prev));
                prev = cur;
            }
        }
    }

    #[test]
    fn lemelt_first_step() {
        let r = verify_lemelt(&unit_map(), &c(11.0, 0.0), 1).unwrap();
        assert!(r.passed);
        let want = 11f64.exp();
        assert!((r.steps[0].re.to_f64() - want).abs() < 1e-9 * want);
        assert!(r.steps[0].re > 1100);
    }

    #[test]
    fn lemelt_vacuous() {
        let r = verify_lemelt(&unit_map(), &c(12.0, 0.3), 0).unwrap();
        assert!(r.passed && r.steps.is_empty());
    }

    #[test]
    fn lemelt_needs_orbit_in_s() {
        // Im f(11 + 0.001i) = e^11 sin(0.001) ≈ 59.9, far above the strip
        let e = verify_lemelt(&unit_map(), &c(11.0, 0.001), 2).unwrap_err();
        assert_eq!(e, MapError::OrbitLeftS { step: 1 });
        assert!(verify_lemelt(&unit_map(), &c(11.0, 0.001), 0).unwrap().passed);
    }

    #[test]
    fn lemelt_two_steps_on_real_axis() {
        let r = verify_lemelt(&unit_map(), &c(11.0, 0.0), 2).unwrap();
        assert!(r.passed);
        assert_eq!(r.steps.len(), 2);
    }

    #[test]
    fn classify_examples() {
        let m = unit_map();
        assert_eq!(classify(&m, &c(11.0, 0.0), 8), Classification::FastEscapingCandidate(0));
        // the orbit of 0 is g^n(0) itself; strict inequality needs offset 1
        assert_eq!(classify(&m, &c(0.0, 0.0), 8), Classification::FastEscapingCandidate(1));
        let fp = HPComplex::parse(
            "0.3181315052047641353126542515876645172035176138713998669223786062294138715576269792324863848986361638",
            "1.337235701430689408901162143193710612539502138460512418876312781914350531361204988841889105044765",
            p(),
        )
        .unwrap();
        assert_eq!(classify(&m, &fp, 20), Classification::BoundedSoFar);
        // Re f^2(11 + i) is hugely negative: f^3 falls below the budget with
        // its angle lost, and three points are too few for any verdict
        let z = c(11.0, 1.0);
        let orb = forward_orbit(&m, &z, 6);
        assert_eq!(orb.len(), 4);
        assert!(*orb[2].exact().unwrap().re() < 0);
        assert_eq!(classify(&m, &z, 6), Classification::Undecided);
    }

    #[test]
    fn tower_orbit_tracks_g() {
        let m = unit_map();
        let orb = forward_orbit(&m, &c(0.0, 0.0), 7);
        assert_eq!(orb.len(), 8);
        let mut g = TowerMagnitude::zero(256);
        for v in &orb {
            let d = v.magnitude();
            assert_eq!(d.level(), g.level());
            let diff = Float::with_val(256, d.mantissa() - g.mantissa()).abs();
            assert!(diff < p().rel_tol(16));
            g = g.exp();
        }
    }
}
