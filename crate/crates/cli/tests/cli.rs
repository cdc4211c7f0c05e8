use std::process::{Command, Output};

use serde_json::Value;

fn kslab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kslab")).args(args).output().expect("binary runs")
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn energy_sweep_sine_limit() {
    let out = kslab(&[
        "--space", "circle:2000", "energy-sweep", "--field", "sine", "--p", "2",
        "--radii", "0.2,0.1,0.05,0.025,0.0125", "--no-timing",
    ]);
    assert!(out.status.success());
    let v = report(&out);
    assert_eq!(v["schema"], "kslab/1");
    assert_eq!(v["command"], "energy-sweep");
    assert!(v.get("wall_time_s").is_none());
    // continuum limit (1/3) ∫ |f′|² = 2π²/3
    let oracle = 2.0 * std::f64::consts::PI.powi(2) / 3.0;
    let limit = v["result"]["limit"].as_f64().unwrap();
    assert!((limit - oracle).abs() / oracle < 0.02, "{limit} vs {oracle}");
}

#[test]
fn space_info_circle() {
    let v = report(&kslab(&["--space", "circle:100", "space-info"]));
    let r = &v["result"];
    assert_eq!(r["n"], 100);
    assert!((r["total_mass"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!((r["resolution"].as_f64().unwrap() - 0.01).abs() < 1e-12);
    let q = r["doubling"]["q_hat"].as_f64().unwrap();
    assert!((0.9..1.3).contains(&q), "{q}");
    assert!(v["wall_time_s"].as_f64().is_some());
}

#[test]
fn radius_below_resolution_is_a_config_error() {
    let out = kslab(&["--space", "circle:100", "energy-sweep", "--radii", "1e-6"]);
    assert_eq!(out.status.code(), Some(2));
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("resolution rule") && msg.contains("3h"), "{msg}");
    assert!(out.stdout.is_empty());
}

#[test]
fn unknown_field_is_a_config_error() {
    let out = kslab(&["--space", "circle:100", "energy-sweep", "--field", "wave", "--radii", "0.05"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_without_timing() {
    let args = ["--space", "random:1000:7:square", "compare-bv", "--fields", "random:1,constant", "--radii", "0.3,0.2", "--eps", "0.2", "--no-timing"];
    let a = kslab(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let mut with_threads = vec!["--threads", "1"];
    with_threads.extend_from_slice(&args);
    let b = kslab(&with_threads);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn non_convergence_exits_one_with_partial_report() {
    let dir = tempfile::tempdir().unwrap();
    let boundary = dir.path().join("b.csv");
    let mut text = String::from("id,value\n");
    for i in 0..10 {
        text.push_str(&format!("{i},0\n{},1\n", 50 + i));
    }
    std::fs::write(&boundary, text).unwrap();
    let b = boundary.to_str().unwrap();
    let out = kslab(&["--space", "circle:100", "solve", "--boundary", b, "--p", "3", "--r", "0.05", "--max-iters", "2"]);
    assert_eq!(out.status.code(), Some(1));
    let v = report(&out);
    assert_eq!(v["result"]["report"]["converged"], false);
    assert_eq!(v["result"]["report"]["stop_reason"], "max-iterations");

    let minimizer = dir.path().join("u.csv");
    let out = kslab(&[
        "--space", "circle:100", "solve", "--boundary", b, "--p", "2", "--r", "0.05",
        "--minimizer-out", minimizer.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(std::fs::read_to_string(&minimizer).unwrap().starts_with("id,value\n"));
}

#[test]
fn csv_projection_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("r.json");
    let csv_path = dir.path().join("r.csv");
    let out = kslab(&[
        "--space", "circle:1000", "perimeter", "--arc", "0.2:0.5", "--radii", "0.05,0.025",
        "--out", json_path.to_str().unwrap(), "--csv", csv_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&json_path).unwrap()).unwrap();
    assert_eq!(v["result"]["jumps"], 2);
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.lines().next(), Some("r,value"));
    assert_eq!(csv.lines().count(), 3);

    let out = kslab(&["--space", "circle:100", "space-info", "--csv", csv_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn pair_check_identities() {
    let v = report(&kslab(&["--space", "circle:500", "pair-check", "--r", "0.05", "--p", "3"]));
    let r = &v["result"];
    let pairing = r["pairing"].as_f64().unwrap().abs();
    assert!(r["weak_form"]["gap"].as_f64().unwrap() <= 1e-12 * pairing.max(1.0));
    assert!(r["derivative"]["error"].as_f64().unwrap() <= 1e-3 * pairing.max(1.0));
}
