use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use harmosc::io::parse_signal_csv;
use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_harmosc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn repo_file(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").join(rel)
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).expect("stderr carries an error document")
}

fn coefficients(report: &Value) -> Vec<f64> {
    report["coefficients"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect()
}

const PINNED_COEFFS: &str = "1,0.5,4.25,0.125,1";
const IMPULSE: &str = r#"{"type": "impulses", "events": [{"t": 0, "area": 1}]}"#;

#[test]
fn design_pinned_spec() {
    let out = run(&["design", "--spec", repo_file("configs/specs/pinned.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert_eq!(coefficients(&report), [1.0, 0.5, 4.25, 0.125, 1.0]);
    assert_eq!(report["verdict"], Value::Bool(true));
    let classes: Vec<&str> = report["roots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["class"].as_str().unwrap())
        .collect();
    assert_eq!(classes.iter().filter(|c| **c == "HarmonicBoundary").count(), 2);
    assert_eq!(classes.iter().filter(|c| **c == "AsymptoticallyStable").count(), 2);
}

#[test]
fn design_decay_spec() {
    let out = run(&["design", "--spec", repo_file("configs/specs/clean.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let c = coefficients(&stdout_json(&out));
    for (a, b) in c.iter().zip([1.0, 0.3020, 1.0204, 0.3020, 0.0204]) {
        assert!((a - b).abs() < 5e-4, "{c:?}");
    }
}

#[test]
fn design_repeated_decay_is_a_validation_error() {
    let out = run(&["design", "--spec", repo_file("configs/specs/repeated_decay.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["kind"], "SingularSystem");
    assert_eq!(err["error"]["category"], "validation");
}

#[test]
fn design_with_unstable_remaining_roots_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    // a negative α₁ pushes the second pair into the right half plane
    std::fs::write(&spec, r#"{"order": 4, "omega_k": 2, "pinned": {"0": 1, "1": -0.5, "4": 1}}"#).unwrap();
    let out = run(&["design", "--spec", spec.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stdout_json(&out)["verdict"], Value::Bool(false));
}

#[test]
fn design_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "design",
        "--spec",
        repo_file("configs/specs/decay_design.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let coeffs = std::fs::read_to_string(dir.path().join("coefficients.json")).unwrap();
    let parsed = harmosc::io::parse_coefficients(&coeffs).unwrap();
    for (a, b) in parsed.iter().zip([1.0, 0.3, 0.27, 0.075, 0.005]) {
        assert!((a - b).abs() < 1e-9);
    }
    assert!(dir.path().join("design_report.json").is_file());
}

fn simulate_csv(coeffs: &str, input: &str, t_end: &str, dt: &str) -> harmosc::Signal {
    let out = run(&["simulate", "--coeffs", coeffs, "--input", input, "--t-end", t_end, "--dt", dt]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    parse_signal_csv(std::str::from_utf8(&out.stdout).unwrap()).unwrap()
}

fn max_abs_after(s: &harmosc::Signal, t: f64) -> f64 {
    s.tail_from(t).samples.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

#[test]
fn simulate_impulse_amplitude_and_scaling() {
    let y1 = simulate_csv(PINNED_COEFFS, IMPULSE, "200", "0.01");
    let peak = max_abs_after(&y1, 100.0);
    assert!((0.130..=0.136).contains(&peak), "{peak}");
    let y5 = simulate_csv(
        PINNED_COEFFS,
        r#"{"type": "impulses", "events": [{"t": 0, "area": 5}]}"#,
        "200",
        "0.01",
    );
    let scale = max_abs_after(&y5, 0.0);
    for (a, b) in y1.samples.iter().zip(&y5.samples) {
        assert!((5.0 * a - b).abs() <= 1e-12 * scale);
    }
}

#[test]
fn simulate_zero_input_is_all_zero() {
    let y = simulate_csv(PINNED_COEFFS, r#"{"type": "zero"}"#, "10", "0.01");
    assert_eq!(y.len(), 1001);
    assert!(y.samples.iter().all(|v| *v == 0.0));
}

#[test]
fn simulate_reads_files_and_rejects_coarse_steps() {
    let dir = tempfile::tempdir().unwrap();
    let coeffs = dir.path().join("c.json");
    std::fs::write(&coeffs, "[1, 0.5, 4.25, 0.125, 1]").unwrap();
    let out = run(&["simulate", "--coeffs", coeffs.to_str().unwrap(), "--input", IMPULSE, "--t-end", "5", "--dt", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "ResolutionViolation");

    let out = run(&["simulate", "--coeffs", "1,2,x", "--input", IMPULSE, "--t-end", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "Format");
}

fn write_signal(dir: &Path, name: &str, signal: &harmosc::Signal) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, harmosc::io::write_signal_csv(signal)).unwrap();
    path
}

#[test]
fn analyze_transient_response() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulate_csv(PINNED_COEFFS, IMPULSE, "300", "0.01");
    let csv = write_signal(dir.path(), "y.csv", &y);
    let out = run(&[
        "analyze",
        "--input",
        csv.to_str().unwrap(),
        "--discard",
        "100",
        "--out-dir",
        dir.path().join("a").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = stdout_json(&out);
    assert!((report["f_hz"].as_f64().unwrap() - std::f64::consts::FRAC_1_PI).abs() < 0.003);
    assert!((report["tau_s"].as_f64().unwrap() - 16.0).abs() < 1.5);
    assert!((report["transient_f_hz"].as_f64().unwrap() - 0.079).abs() < 0.02);
    assert_eq!(report["flags"], serde_json::json!([]));

    let spec = std::fs::read_to_string(dir.path().join("a/spectrogram.csv")).unwrap();
    let header: Vec<&str> = spec.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 4096 / 2 + 2);
    let analytic = std::fs::read_to_string(dir.path().join("a/analytic.csv")).unwrap();
    assert!(analytic.starts_with("t,real,imag,envelope,phase\n"));
    assert_eq!(analytic.lines().count(), y.len() + 1);
}

#[test]
fn analyze_clean_response_flags_no_transient() {
    let dir = tempfile::tempdir().unwrap();
    let y = simulate_csv("1,0.30204081632653,1.0204081632653,0.30204081632653,0.020408163265306", IMPULSE, "200", "0.01");
    let csv = write_signal(dir.path(), "y.csv", &y);
    let out = run(&["analyze", "--input", csv.to_str().unwrap(), "--discard", "20"]);
    assert_eq!(out.status.code(), Some(0));
    let report = stdout_json(&out);
    assert!((report["f_hz"].as_f64().unwrap() - 0.1592).abs() < 0.002);
    assert_eq!(report["flags"], serde_json::json!(["NoTransient"]));
    assert!(report["tau_s"].is_null());
}

#[test]
fn analyze_pure_sine() {
    let dir = tempfile::tempdir().unwrap();
    let y = harmosc::Signal::from_fn(0.0, 0.01, 20_001, |t| 0.75 * (2.0 * std::f64::consts::PI * 0.5 * t).sin()).unwrap();
    let csv = write_signal(dir.path(), "sine.csv", &y);
    let out = run(&["analyze", "--input", csv.to_str().unwrap(), "--discard", "0", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let field = |k: &str| -> String {
        text.lines()
            .find_map(|l| l.strip_prefix(&format!("{k},")))
            .unwrap()
            .to_string()
    };
    assert!((field("f_hz").parse::<f64>().unwrap() - 0.5).abs() < 1e-5);
    assert!((field("amplitude").parse::<f64>().unwrap() - 0.75).abs() < 1e-3);
    assert!(field("bias").parse::<f64>().unwrap().abs() < 1e-6);
    assert_eq!(field("flags"), "NoTransient");
}

#[test]
fn analyze_rejects_oversized_window() {
    let dir = tempfile::tempdir().unwrap();
    let y = harmosc::Signal::from_fn(0.0, 0.1, 100, |t| t.sin()).unwrap();
    let csv = write_signal(dir.path(), "short.csv", &y);
    let out = run(&["analyze", "--input", csv.to_str().unwrap(), "--window", "4096"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "WindowTooLong");
}

#[test]
fn pipeline_shipped_configs_pass() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "pipeline",
        repo_file("configs/pinned_impulse.json").to_str().unwrap(),
        repo_file("configs/clean_step.json").to_str().unwrap(),
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let summary = stdout_json(&out);
    let runs = summary.as_array().unwrap();
    assert_eq!(runs[0]["name"], "pinned_impulse");
    assert_eq!(runs[0]["status"], "PASS");
    assert!((runs[0]["report"]["tau_s"].as_f64().unwrap() - 16.0).abs() < 1.5);
    assert_eq!(runs[1]["status"], "PASS");
    assert_eq!(runs[1]["bias_check"], Value::Bool(true));
    assert!((runs[1]["bias"].as_f64().unwrap() - 1.0).abs() < 0.01);
    for f in ["signal.csv", "report.json", "spectrogram.csv", "analytic.csv", "summary.json"] {
        assert!(dir.path().join("clean_step").join(f).is_file(), "{f}");
    }
    assert_eq!(
        std::fs::read_to_string(dir.path().join("summary.json")).unwrap().as_bytes(),
        out.stdout.as_slice()
    );
}

#[test]
fn pipeline_rejects_zero_frequency() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.json");
    std::fs::write(
        &config,
        r#"{"design": {"order": 4, "omega_k": 0, "pinned": {"0": 1, "1": 0.5, "4": 1}},
            "input": {"type": "zero"}, "t_end": 10}"#,
    )
    .unwrap();
    let out = run(&["pipeline", config.to_str().unwrap(), "--out-dir", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let runs = stdout_json(&out);
    assert_eq!(runs[0]["status"], "ERROR");
    assert_eq!(runs[0]["error"]["kind"], "InvalidSpec");
    assert_eq!(runs[0]["error"]["stage"], "config");
}

fn read_tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            out.extend(read_tree(&path).into_iter().map(|(n, b)| {
                (format!("{}/{n}", path.file_name().unwrap().to_string_lossy()), b)
            }));
        } else {
            out.push((path.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&path).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn pipeline_outputs_are_byte_identical_across_runs() {
    let configs = [
        repo_file("configs/pinned_impulse.json"),
        repo_file("configs/clean_impulse_train.json"),
        repo_file("configs/clean_variable_step.json"),
    ];
    let mut trees = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().unwrap();
        let mut args = vec!["pipeline".to_string()];
        args.extend(configs.iter().map(|p| p.to_string_lossy().into_owned()));
        args.extend(["--out-dir".to_string(), dir.path().to_string_lossy().into_owned()]);
        let out = bin().args(&args).output().unwrap();
        assert_eq!(out.status.code(), Some(0));
        trees.push(read_tree(dir.path()));
    }
    assert!(trees[0].len() >= 3 * 7);
    assert_eq!(trees[0], trees[1]);
}

#[test]
fn design_output_round_trips_through_simulate_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.json");
    std::fs::write(&spec, r#"{"order": 5, "omega_k": 1.5, "decays": [0.8, 2.5, 4.0], "pinned": {"0": 2}}"#).unwrap();
    let design_dir = dir.path().join("design");
    let out = run(&["design", "--spec", spec.to_str().unwrap(), "--out-dir", design_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));

    let coeffs = design_dir.join("coefficients.json");
    let sim_dir = dir.path().join("sim");
    let out = run(&[
        "simulate",
        "--coeffs",
        coeffs.to_str().unwrap(),
        "--input",
        IMPULSE,
        "--t-end",
        "150",
        "--out-dir",
        sim_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));

    let out = run(&["analyze", "--input", sim_dir.join("signal.csv").to_str().unwrap(), "--discard", "40"]);
    assert_eq!(out.status.code(), Some(0));
    let omega = stdout_json(&out)["omega_rad_s"].as_f64().unwrap();
    assert!((omega - 1.5).abs() / 1.5 < 0.01, "{omega}");
}

#[test]
fn missing_files_are_reported() {
    let out = run(&["design", "--spec", "/nonexistent/spec.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["error"]["kind"], "Io");
}
