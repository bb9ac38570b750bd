use rug::Float;
use serde::Serialize;

use super::ConstructionError;
use crate::arith::HPComplex;
use crate::curves::{iterate_curve_with, winding_number, CurveError, Parametrization, RefineOptions, SampledCurve};
use crate::dynmap::ExpMap;
use crate::hairs::PeriodicPoint;

/// The vertical segment from `K+1 - 3πi` to `K+1 + 3πi`.
pub fn kappa_segment(map: &ExpMap) -> SampledCurve {
    let prec = map.precision();
    let x = Float::with_val(prec.bits, map.k() + 1u32);
    let h = Float::with_val(prec.bits, prec.pi() * 3u32);
    let a = HPComplex::new(x.clone(), Float::with_val(prec.bits, -&h), prec).expect("finite");
    let b = HPComplex::new(x, h, prec).expect("finite");
    SampledCurve::from_source(map, Parametrization::segment(a, b), 65, false).expect("segments evaluate")
}

/// Whether the segment spans the full height of each chosen strip.
pub fn kappa_crosses_strips(map: &ExpMap) -> [bool; 2] {
    let prec = map.precision();
    let h = Float::with_val(prec.bits, prec.pi() * 3u32);
    let lo = Float::with_val(prec.bits, -&h);
    let c = map.strips().chosen();
    [0, 1].map(|i| *c[i].im_low() >= lo && *c[i].im_high() <= h)
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringStep {
    pub n: u32,
    /// Every sample point of the segment has nonzero winding number.
    pub covered: bool,
    pub points_checked: usize,
    pub points_surrounded: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoveringReport {
    pub radius: f64,
    pub steps: Vec<CoveringStep>,
    pub stopped: Option<String>,
    pub note: &'static str,
}

const NOTE: &str = "shallow check: no covering up to the last step proves nothing about later steps";

/// For `N = 1..=n_max`, whether `f^N` of the disk `B(p, radius)` covers the
/// segment `𝒦`, judged by the winding number of `f^N(∂B)` around sample
/// points of `𝒦`. Every step is computed on its own.
pub fn covering_check(
    map: &ExpMap,
    p: &PeriodicPoint,
    radius: f64,
    n_max: u32,
) -> Result<CoveringReport, ConstructionError> {
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(ConstructionError::InvalidRadius(radius));
    }
    if p.multiplier_abs <= 1u32 {
        return Err(ConstructionError::Invalid("periodic point is not repelling".into()));
    }
    let prec = map.precision();
    let kappa = kappa_segment(map);
    let x = Float::with_val(prec.bits, map.k() + 1u32);
    let h = 3.0 * std::f64::consts::PI + 1.0;
    let region = [
        Float::with_val(prec.bits, &x - 1u32),
        Float::with_val(prec.bits, &x + 1u32),
        prec.float(-h),
        prec.float(h),
    ];
    let probes: Vec<HPComplex> = kappa.points().into_iter().step_by(2).collect();
    let circle = SampledCurve::from_source(map, Parametrization::circle(p.z.clone(), prec.float(radius)), 64, true)?;
    let opts = RefineOptions { region: Some(region), ..RefineOptions::absolute(0.25) };
    let mut report = CoveringReport { radius, steps: Vec::new(), stopped: None, note: NOTE };
    for n in 1..=n_max {
        let image = match iterate_curve_with(map, &circle, n, &opts) {
            Ok(c) => c,
            Err(CurveError::ExponentBudgetExceeded { step, .. }) => {
                report.stopped = Some(format!("exponent budget exceeded at iterate {step}"));
                break;
            }
            Err(e) => {
                report.stopped = Some(e.to_string());
                break;
            }
        };
        let surrounded = probes.iter().filter(|q| matches!(winding_number(&image, q), Ok(w) if w != 0)).count();
        report.steps.push(CoveringStep {
            n,
            covered: surrounded == probes.len(),
            points_checked: probes.len(),
            points_surrounded: surrounded,
            samples: image.len(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Precision;
    use crate::dynmap::{make_map, KPolicy};
    use crate::hairs::{periodic_point, SeedPolicy};

    fn p() -> Precision {
        Precision::default()
    }

    #[test]
    fn kappa_for_unit_lambda() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let k = kappa_segment(&m);
        let first = &k.samples[0].z;
        let last = &k.samples.last().unwrap().z;
        assert_eq!(first.re().to_f64(), 11.5);
        assert!((first.im().to_f64() + 3.0 * std::f64::consts::PI).abs() < 1e-15);
        assert!((last.im().to_f64() - 3.0 * std::f64::consts::PI).abs() < 1e-15);
        assert_eq!(kappa_crosses_strips(&m), [true, true]);
    }

    #[test]
    fn fixed_point_small_disk() {
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let fp = periodic_point(&m, &[0], SeedPolicy::StripDefault).unwrap();
        let r = covering_check(&m, &fp, 1e-3, 3).unwrap();
        assert_eq!(r.steps.len(), 3);
        // a disk of radius 1e-3 grows by |f'| ≈ 1.37 per step: nowhere near 𝒦
        assert!(r.steps.iter().all(|s| !s.covered && s.points_surrounded == 0));
        assert!(matches!(covering_check(&m, &fp, 0.0, 3), Err(ConstructionError::InvalidRadius(_))));
    }

    #[test]
    fn large_disk_covers_at_once() {
        // B(p, 5) contains full vertical periods for every real part in
        // [Re p - 4.7, Re p + 4.7], so f(B) is an annulus reaching past 𝒦
        let m = make_map(HPComplex::one(p()), KPolicy::Auto).unwrap();
        let fp = periodic_point(&m, &[0], SeedPolicy::StripDefault).unwrap();
        let r = covering_check(&m, &fp, 5.0, 1).unwrap();
        assert!(r.steps[0].covered, "{r:?}");
    }
}
