use std::path::PathBuf;
use std::process::{Command, Output};

use serde_json::Value;

fn expdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_expdyn")).args(args).env_remove("EXPDYN_PRECISION").output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("expdyn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn strips_for_unit_lambda() {
    let out = expdyn(&["strips", "--lambda", "1,0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["k"].as_str().unwrap().starts_with("10.5"));
    let chosen = v["strips"]["chosen"].as_array().unwrap();
    assert_eq!(chosen.len(), 2);
    let lo: f64 = chosen[0]["im_low"].as_str().unwrap().parse().unwrap();
    assert!((lo + std::f64::consts::FRAC_PI_2).abs() < 1e-15);
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    assert_eq!(expdyn(&["bogus"]).status.code(), Some(2));
}

#[test]
fn bad_flag_value_names_the_flag() {
    let out = expdyn(&["classify", "--z", "abc"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--z"));
}

#[test]
fn nice_check_on_unit_circle_reports_violation() {
    let circle = scratch("circle.json");
    let out = expdyn(&["iterate-curve", "--circle", "0,0;1", "--n", "0", "--out", circle.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let out = expdyn(&["nice-check", "--boundary", circle.to_str().unwrap(), "--region", "disk:0,0,1", "--depth", "1"]);
    assert_eq!(out.status.code(), Some(1));
    let v = json(&out);
    assert_eq!(v["verdict"], "Violation");
    assert_eq!(v["n"], 1);
    let re: f64 = v["z"]["re"].as_str().unwrap().parse().unwrap();
    assert!((re - (-1.0f64).exp()).abs() < 1e-15);
}

#[test]
fn nice_check_real_segment() {
    let out = expdyn(&["nice-check", "--segment", "-5,0;5,0", "--region", "halfplane:upper", "--depth", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["verdict"], "NiceUpTo");
}

#[test]
fn classify_and_lemelt() {
    let out = expdyn(&["classify", "--z", "11,0", "--budget", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(json(&out)["classification"].get("FastEscapingCandidate").is_some());
    let out = expdyn(&["verify-lemelt", "--z", "11,0", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["passed"], true);
    // the origin is not in the strips
    assert_eq!(expdyn(&["verify-lemelt", "--z", "0,0", "--n", "1"]).status.code(), Some(1));
}

#[test]
fn periodic_fixed_point() {
    let out = expdyn(&["periodic", "--cycle", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let re: f64 = v["z"]["re"].as_str().unwrap().parse().unwrap();
    let im: f64 = v["z"]["im"].as_str().unwrap().parse().unwrap();
    assert!((re - 0.3181315052047641).abs() < 1e-12 && (im - 1.3372357014306895).abs() < 1e-12);
}

#[test]
fn hair_files_feed_angle_set() {
    let hair = scratch("hair.json");
    let out = expdyn(&[
        "trace-hair", "--itinerary", "0*", "--depth", "10", "--anchors", "10.6,11,11.4", "--out", hair.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let out = expdyn(&["angle-set", "--segment", "11,-1;11,1", "--hair", hair.to_str().unwrap(), "--n", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let angles = v["angles"].as_array().unwrap();
    assert_eq!(angles.len(), 1);
    assert!((angles[0]["angle"].as_f64().unwrap() - std::f64::consts::FRAC_PI_2).abs() < 1e-3);
}

#[test]
fn surround_on_real_hair_crossing_reports_horizon() {
    let hair = scratch("hair2.json");
    expdyn(&["trace-hair", "--itinerary", "0*", "--anchors", "10.6,11,11.4", "--out", hair.to_str().unwrap()]);
    let out = expdyn(&[
        "surround", "--segment", "11,-0.5;11,0.5", "--hair", hair.to_str().unwrap(), "--target", "2,0", "--eps", "0.5",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(json(&out)["status"], "precision_horizon");
}

#[test]
fn kappa_and_covering() {
    let out = expdyn(&["kappa"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["crosses_strips"], serde_json::json!([true, true]));
    let out = expdyn(&["covering", "--cycle", "0", "--radius", "0.001", "--n-max", "2"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["report"]["steps"].as_array().unwrap().len(), 2);
    assert_eq!(expdyn(&["covering", "--cycle", "0", "--radius", "-1"]).status.code(), Some(2));
}

#[test]
fn render_is_deterministic_ppm() {
    let a = expdyn(&["render", "--window", "-2,14,-6,6", "--size", "32x24", "--max-iter", "8", "--strips"]);
    let b = expdyn(&["render", "--window", "-2,14,-6,6", "--size", "32x24", "--max-iter", "8", "--strips"]);
    assert_eq!(a.status.code(), Some(0));
    assert!(a.stdout.starts_with(b"P6\n32 24\n255\n"));
    assert_eq!(a.stdout.len(), 13 + 32 * 24 * 3);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn render_single_pixel_at_eleven() {
    let out = expdyn(&["render", "--window", "10.5,11.5,-0.5,0.5", "--size", "1x1", "--max-iter", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let px = &out.stdout[out.stdout.len() - 3..];
    // escape at step 1 of 3 in the gray palette
    assert_eq!(px, &[191, 191, 191]);
}

#[test]
fn precision_env_override() {
    let out = Command::new(env!("CARGO_BIN_EXE_expdyn"))
        .args(["classify", "--z", "1,0", "--budget", "2"])
        .env("EXPDYN_PRECISION", "128")
        .output()
        .unwrap();
    assert_eq!(json(&out)["z"]["prec"], 128);
    assert_eq!(expdyn(&["classify", "--z", "1,0", "--precision", "32"]).status.code(), Some(2));
}

#[test]
fn output_is_byte_identical() {
    let a = expdyn(&["trace-hair", "--itinerary", "01*", "--anchors", "11,13"]);
    let b = expdyn(&["trace-hair", "--itinerary", "01*", "--anchors", "11,13"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}
