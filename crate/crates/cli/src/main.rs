//! `expdyn`: command-line access to the expdyn-core toolkit.
//!
//! Every subcommand writes JSON (or a PPM image for `render`) to `--out` or
//! stdout. Exit status is 0 on success, 1 when a verification fails or no
//! certificate could be produced, and 2 on usage errors.

mod render;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use expdyn_core::constructions::{
    covering_check, kappa_crosses_strips, kappa_segment, nice_check, refine_dense_orbit, replay,
    surround_from_curve, ConstructionError, NiceOptions, NiceVerdict, Region, SurroundBudget, SurroundCertificate,
};
use expdyn_core::curves::{angle_set, iterate_curve_with, AngleSetOptions, Parametrization, RefineOptions, SampledCurve};
use expdyn_core::dynmap::{classify, verify_lemelt};
use expdyn_core::hairs::{periodic_point, trace_boundary, trace_hair, BoundarySide, HairSample, Itinerary, SeedPolicy};
use expdyn_core::{make_map, ExpMap, HPComplex, KPolicy, Precision};
use rug::Float;
use serde_json::{json, Value};

use render::{Palette, RenderSpec};

#[derive(Parser, Debug)]
#[command(name = "expdyn", version, about = "High-precision experiments with f(z) = λ e^z")]
struct Cli {
    /// λ as `re,im`.
    #[arg(long, global = true, default_value = "1,0", allow_hyphen_values = true)]
    lambda: String,
    /// Strip cutoff K; chosen automatically when absent.
    #[arg(long = "k", global = true, allow_hyphen_values = true)]
    cutoff: Option<String>,
    /// Working precision in bits.
    #[arg(long, global = true, env = "EXPDYN_PRECISION", default_value_t = 256)]
    precision: u32,
    /// Largest binary exponent a value may reach before evaluation stops.
    #[arg(long, global = true, default_value_t = 1 << 20)]
    exponent_budget: u64,
    /// Output file; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct CurveInput {
    /// Curve JSON as written by `iterate-curve`.
    #[arg(long)]
    curve: Option<PathBuf>,
    /// Segment `a_re,a_im;b_re,b_im`.
    #[arg(long, allow_hyphen_values = true)]
    segment: Option<String>,
    /// Circle `c_re,c_im;radius`.
    #[arg(long, allow_hyphen_values = true)]
    circle: Option<String>,
    /// Initial samples for segment and circle inputs.
    #[arg(long, default_value_t = 65)]
    samples: usize,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// The strip cutoff and the two chosen strips.
    Strips,
    /// Finite-budget escape classification of one orbit.
    Classify {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, default_value_t = 12)]
        budget: u32,
    },
    /// Check the real-part, argument and derivative bounds along an orbit.
    VerifyLemelt {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long)]
        n: u32,
    },
    /// Points of the hair with the given itinerary (`0110*`, `01(10)`, `0110`).
    TraceHair {
        #[arg(long)]
        itinerary: String,
        #[arg(long, default_value_t = 10)]
        depth: u32,
        /// Comma-separated real parts.
        #[arg(long)]
        anchors: String,
    },
    /// Points of a strip-edge curve pulled back from level `--level`.
    TraceBoundary {
        #[arg(long)]
        itinerary: String,
        #[arg(long)]
        level: u32,
        #[arg(long, value_parser = ["upper", "lower"])]
        side: String,
        #[arg(long)]
        anchors: String,
    },
    /// A repelling periodic point with the given strip cycle.
    Periodic {
        #[arg(long)]
        cycle: String,
        #[arg(long, allow_hyphen_values = true)]
        seed: Option<String>,
    },
    /// `f^n` of a curve, adaptively refined.
    IterateCurve {
        #[command(flatten)]
        input: CurveInput,
        #[arg(long, default_value_t = 1)]
        n: u32,
        #[arg(long, default_value_t = 0.05)]
        tol: f64,
        #[arg(long)]
        rel_tol: Option<f64>,
    },
    /// Angles at which `f^n` of a curve crosses traced hairs.
    AngleSet {
        #[command(flatten)]
        input: CurveInput,
        /// Hair JSON from `trace-hair`; repeatable.
        #[arg(long, required = true)]
        hair: Vec<PathBuf>,
        #[arg(long, default_value_t = 0)]
        n: u32,
    },
    /// A certified Jordan curve around a target built from arcs of a curve.
    Surround {
        #[command(flatten)]
        input: CurveInput,
        #[arg(long)]
        hair: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        target: String,
        #[arg(long)]
        eps: f64,
        #[arg(long, default_value_t = 131072)]
        max_precision: u32,
    },
    /// Re-verify a surround certificate against its curve.
    Replay {
        #[command(flatten)]
        input: CurveInput,
        #[arg(long)]
        certificate: PathBuf,
    },
    /// Nested surround stages for a list of targets.
    Refine {
        #[command(flatten)]
        input: CurveInput,
        #[arg(long)]
        hair: PathBuf,
        /// `re,im:eps` entries separated by `;`.
        #[arg(long, allow_hyphen_values = true)]
        targets: String,
        #[arg(long, default_value_t = 131072)]
        max_precision: u32,
    },
    /// The vertical segment at `Re = K + 1` and whether it spans both strips.
    Kappa,
    /// Whether `f^N` of a disk around a periodic point covers the kappa segment.
    Covering {
        #[arg(long)]
        cycle: String,
        #[arg(long)]
        radius: f64,
        #[arg(long, default_value_t = 3)]
        n_max: u32,
    },
    /// Whether forward images of a boundary avoid an open region.
    NiceCheck {
        /// Boundary curve JSON.
        #[arg(long)]
        boundary: Option<PathBuf>,
        #[command(flatten)]
        input: CurveInput,
        /// `halfplane:upper`, `halfplane:lower`, `disk:re,im,r` or `polygon:x,y;x,y;...`.
        #[arg(long, allow_hyphen_values = true)]
        region: String,
        #[arg(long)]
        depth: u32,
    },
    /// Escape-time image as binary PPM.
    Render {
        /// `re_min,re_max,im_min,im_max`.
        #[arg(long, allow_hyphen_values = true, default_value = "-4,16,-8,8")]
        window: String,
        /// `WIDTHxHEIGHT`.
        #[arg(long, default_value = "400x320")]
        size: String,
        #[arg(long, default_value_t = 20)]
        max_iter: u32,
        #[arg(long, default_value = "gray")]
        palette: Palette,
        /// Curve or hair JSON drawn as a polyline; repeatable.
        #[arg(long)]
        overlay: Vec<PathBuf>,
        /// Draw the edges of the two chosen strips.
        #[arg(long)]
        strips: bool,
    },
}

enum Failure {
    Usage(String),
    /// Computation ran but did not verify; optional JSON report.
    Verification(String, Option<Value>),
}

type Outcome = Result<Output, Failure>;

enum Output {
    Json(Value),
    Bytes(Vec<u8>),
    /// A report whose verdict is negative.
    Negative(Value),
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn construction(e: ConstructionError) -> Failure {
    match e {
        ConstructionError::ZeroTarget
        | ConstructionError::InvalidEpsilon(_)
        | ConstructionError::InvalidRadius(_)
        | ConstructionError::Invalid(_) => Failure::Usage(e.to_string()),
        e => {
            let report = match &e {
                ConstructionError::PrecisionHorizon { step, reason } => {
                    json!({ "status": "precision_horizon", "step": step, "reason": reason })
                }
                other => json!({ "status": "failed", "reason": other.to_string() }),
            };
            Failure::Verification(e.to_string(), Some(report))
        }
    }
}

fn to_json<T: serde::Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("reports serialize")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn complex(flag: &str, s: &str, prec: Precision) -> Result<HPComplex, Failure> {
    HPComplex::parse_pair(s.trim(), prec).map_err(|e| usage(format!("--{flag}: {e}")))
}

fn floats(flag: &str, s: &str, prec: Precision) -> Result<Vec<Float>, Failure> {
    s.split(',').map(|x| prec.parse(x.trim()).map_err(|e| usage(format!("--{flag}: {e}")))).collect()
}

fn itinerary(s: &str) -> Result<Itinerary, Failure> {
    s.parse().map_err(|e| usage(format!("--itinerary: {e}")))
}

fn cycle(s: &str) -> Result<Vec<u8>, Failure> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            _ => Err(usage(format!("--cycle: unexpected character {c:?}"))),
        })
        .collect()
}

fn build_map(cli: &Cli) -> Result<ExpMap, Failure> {
    let prec = Precision::new(cli.precision, cli.exponent_budget).map_err(|e| usage(format!("--precision: {e}")))?;
    let lambda = complex("lambda", &cli.lambda, prec)?;
    let policy = match &cli.cutoff {
        Some(k) => KPolicy::Explicit(prec.parse(k).map_err(|e| usage(format!("--k: {e}")))?),
        None => KPolicy::Auto,
    };
    make_map(lambda, policy).map_err(|e| usage(format!("--lambda: {e}")))
}

fn load_curve(map: &ExpMap, input: &CurveInput) -> Result<SampledCurve, Failure> {
    let prec = map.precision();
    let given = [input.curve.is_some(), input.segment.is_some(), input.circle.is_some()];
    if given.iter().filter(|g| **g).count() != 1 {
        return Err(usage("exactly one of --curve, --segment, --circle is required"));
    }
    if let Some(path) = &input.curve {
        let c: SampledCurve = read_json(path)?;
        c.validate().map_err(|e| usage(format!("--curve: {e}")))?;
        return Ok(c);
    }
    let (src, closed) = if let Some(s) = &input.segment {
        let (a, b) = s.split_once(';').ok_or_else(|| usage("--segment: expected a_re,a_im;b_re,b_im"))?;
        (Parametrization::segment(complex("segment", a, prec)?, complex("segment", b, prec)?), false)
    } else {
        let s = input.circle.as_deref().unwrap_or_default();
        let (c, r) = s.split_once(';').ok_or_else(|| usage("--circle: expected c_re,c_im;radius"))?;
        let r = prec.parse(r.trim()).map_err(|e| usage(format!("--circle: {e}")))?;
        if r <= 0u32 {
            return Err(usage("--circle: radius must be positive"));
        }
        (Parametrization::circle(complex("circle", c, prec)?, r), true)
    };
    SampledCurve::from_source(map, src, input.samples, closed).map_err(|e| usage(e))
}

fn budget(max_precision: u32) -> SurroundBudget {
    SurroundBudget { max_precision_bits: max_precision, ..SurroundBudget::default() }
}

fn targets(s: &str, prec: Precision) -> Result<Vec<(HPComplex, f64)>, Failure> {
    s.split(';')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            let (z, e) = t.split_once(':').ok_or_else(|| usage("--targets: expected re,im:eps"))?;
            let eps: f64 = e.trim().parse().map_err(|_| usage(format!("--targets: bad epsilon {e:?}")))?;
            Ok((complex("targets", z, prec)?, eps))
        })
        .collect()
}

fn overlay_points(path: &Path) -> Result<Vec<(f64, f64)>, Failure> {
    let v: Value = read_json(path)?;
    if let Ok(c) = serde_json::from_value::<SampledCurve>(v.clone()) {
        let mut pts: Vec<_> = c.points().iter().map(|z| z.to_f64()).collect();
        if c.closed {
            pts.push(pts[0]);
        }
        return Ok(pts);
    }
    if let Ok(h) = serde_json::from_value::<HairSample>(v) {
        return Ok(h.polyline().iter().map(|z| z.to_f64()).collect());
    }
    Err(usage(format!("--overlay: {} is neither a curve nor a hair", path.display())))
}

fn dispatch(cli: &Cli) -> Outcome {
    let map = build_map(cli)?;
    let prec = map.precision();
    match &cli.cmd {
        Cmd::Strips => Ok(Output::Json(json!({
            "k": to_json(&expdyn_core::arith::dec::to_string(map.k())),
            "strips": to_json(map.strips()),
        }))),
        Cmd::Classify { z, budget } => {
            let z = complex("z", z, prec)?;
            Ok(Output::Json(json!({ "z": to_json(&z), "classification": to_json(&classify(&map, &z, *budget)) })))
        }
        Cmd::VerifyLemelt { z, n } => {
            let z = complex("z", z, prec)?;
            match verify_lemelt(&map, &z, *n) {
                Ok(r) if r.passed => Ok(Output::Json(to_json(&r))),
                Ok(r) => Ok(Output::Negative(to_json(&r))),
                Err(e) => Err(Failure::Verification(e.to_string(), Some(json!({ "passed": false, "reason": e.to_string() })))),
            }
        }
        Cmd::TraceHair { itinerary: a, depth, anchors } => {
            let h = trace_hair(&map, &itinerary(a)?, *depth, &floats("anchors", anchors, prec)?).map_err(usage)?;
            Ok(Output::Json(to_json(&h)))
        }
        Cmd::TraceBoundary { itinerary: a, level, side, anchors } => {
            let side = if side == "upper" { BoundarySide::Upper } else { BoundarySide::Lower };
            let h = trace_boundary(&map, &itinerary(a)?, *level, side, &floats("anchors", anchors, prec)?)
                .map_err(usage)?;
            Ok(Output::Json(to_json(&h)))
        }
        Cmd::Periodic { cycle: c, seed } => {
            let seed = match seed {
                Some(s) => SeedPolicy::Explicit(complex("seed", s, prec)?),
                None => SeedPolicy::StripDefault,
            };
            match periodic_point(&map, &cycle(c)?, seed) {
                Ok(p) => Ok(Output::Json(to_json(&p))),
                Err(e) => Err(Failure::Verification(e.to_string(), None)),
            }
        }
        Cmd::IterateCurve { input, n, tol, rel_tol } => {
            let c = load_curve(&map, input)?;
            let opts = match rel_tol {
                Some(r) => RefineOptions::relative(*tol, *r),
                None => RefineOptions::absolute(*tol),
            };
            match iterate_curve_with(&map, &c, *n, &opts) {
                Ok(img) => Ok(Output::Json(to_json(&img))),
                Err(e) => Err(Failure::Verification(
                    e.to_string(),
                    Some(json!({ "status": "failed", "budget_step": e.budget_step(), "reason": e.to_string() })),
                )),
            }
        }
        Cmd::AngleSet { input, hair, n } => {
            let c = load_curve(&map, input)?;
            let hairs = hair.iter().map(|p| read_json::<HairSample>(p)).collect::<Result<Vec<_>, _>>()?;
            let set = angle_set(&map, &c, *n, &hairs, &AngleSetOptions::default())
                .map_err(|e| Failure::Verification(e.to_string(), None))?;
            Ok(Output::Json(to_json(&set)))
        }
        Cmd::Surround { input, hair, target, eps, max_precision } => {
            let c = load_curve(&map, input)?;
            let h: HairSample = read_json(hair)?;
            let z = complex("target", target, prec)?;
            let cert = surround_from_curve(&map, &c, &h, &z, *eps, &budget(*max_precision)).map_err(construction)?;
            Ok(Output::Json(to_json(&cert)))
        }
        Cmd::Replay { input, certificate } => {
            let c = load_curve(&map, input)?;
            let cert: SurroundCertificate = read_json(certificate)?;
            let r = replay(&map, &c, &cert).map_err(construction)?;
            Ok(if r.ok { Output::Json(to_json(&r)) } else { Output::Negative(to_json(&r)) })
        }
        Cmd::Refine { input, hair, targets: t, max_precision } => {
            let c = load_curve(&map, input)?;
            let h: HairSample = read_json(hair)?;
            let t = targets(t, prec)?;
            if t.is_empty() {
                return Err(usage("--targets: no targets given"));
            }
            let chain = refine_dense_orbit(&map, &c, &h, &t, &budget(*max_precision));
            let complete = chain.stages.len() == t.len();
            Ok(if complete { Output::Json(to_json(&chain)) } else { Output::Negative(to_json(&chain)) })
        }
        Cmd::Kappa => Ok(Output::Json(json!({
            "segment": to_json(&kappa_segment(&map)),
            "crosses_strips": kappa_crosses_strips(&map),
        }))),
        Cmd::Covering { cycle: c, radius, n_max } => {
            let p = periodic_point(&map, &cycle(c)?, SeedPolicy::StripDefault)
                .map_err(|e| Failure::Verification(e.to_string(), None))?;
            let r = covering_check(&map, &p, *radius, *n_max).map_err(construction)?;
            Ok(Output::Json(json!({ "periodic_point": to_json(&p), "report": to_json(&r) })))
        }
        Cmd::NiceCheck { boundary, input, region, depth } => {
            let c = match boundary {
                Some(path) => {
                    let c: SampledCurve = read_json(path)?;
                    c.validate().map_err(|e| usage(format!("--boundary: {e}")))?;
                    c
                }
                None => load_curve(&map, input)?,
            };
            let region = Region::parse(region, prec).map_err(|e| usage(format!("--region: {e}")))?;
            let v = nice_check(&map, &c, &region, *depth, &NiceOptions::default()).map_err(construction)?;
            Ok(match v {
                NiceVerdict::NiceUpTo { .. } => Output::Json(to_json(&v)),
                NiceVerdict::Violation { .. } => Output::Negative(to_json(&v)),
            })
        }
        Cmd::Render { window, size, max_iter, palette, overlay, strips } => {
            let w: Vec<f64> = window
                .split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|_| usage(format!("--window: bad number {x:?}"))))
                .collect::<Result<_, _>>()?;
            let [a, b, c, d] = w[..] else { return Err(usage("--window: expected four numbers")) };
            let (wd, ht) = size.split_once('x').ok_or_else(|| usage("--size: expected WIDTHxHEIGHT"))?;
            let dim = |s: &str| s.trim().parse::<usize>().map_err(|_| usage(format!("--size: bad dimension {s:?}")));
            let mut overlays = overlay.iter().map(|p| overlay_points(p)).collect::<Result<Vec<_>, _>>()?;
            if *strips {
                let k = map.k().to_f64();
                for s in map.strips().chosen() {
                    for y in [s.im_low().to_f64(), s.im_high().to_f64()] {
                        overlays.push(vec![(k, y), (b.max(k), y)]);
                    }
                }
            }
            let spec =
                RenderSpec { window: (a, b, c, d), width: dim(wd)?, height: dim(ht)?, max_iter: *max_iter, palette: *palette, overlays };
            spec.validate().map_err(usage)?;
            let img = render::render(map.lambda().to_f64(), &spec);
            Ok(Output::Bytes(img.to_ppm()))
        }
    }
}

fn write(out: &Option<PathBuf>, bytes: &[u8]) -> Result<(), String> {
    use std::io::Write;
    match out {
        Some(p) => std::fs::write(p, bytes).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout().write_all(bytes).map_err(|e| e.to_string()),
    }
}

fn pretty(v: &Value) -> Vec<u8> {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s.into_bytes()
}

/// Parse `args` and run the subcommand; returns the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let (bytes, code) = match dispatch(&cli) {
        Ok(Output::Json(v)) => (Some(pretty(&v)), 0),
        Ok(Output::Negative(v)) => (Some(pretty(&v)), 1),
        Ok(Output::Bytes(b)) => (Some(b), 0),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            (None, 2)
        }
        Err(Failure::Verification(msg, report)) => {
            eprintln!("verification failed: {msg}");
            (report.as_ref().map(pretty), 1)
        }
    };
    if let Some(b) = bytes {
        if let Err(e) = write(&cli.out, &b) {
            eprintln!("error: {e}");
            return 2;
        }
    }
    code
}

fn main() -> ExitCode {
    ExitCode::from(run(std::env::args_os()))
}
