//! Replays the checked-in fuzz corpus through the parsers with the same
//! checks the fuzz targets make, so the seeds stay exercised on stable.

use std::path::{Path, PathBuf};

use harmosc::design::design;
use harmosc::io::{parse_coefficients, parse_design_spec, parse_input_spec, parse_signal_csv, write_signal_csv};
use harmosc::sim::make_input;
use harmosc::Polynomial;
use harmosc_cli::PipelineConfig;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|entry| {
            let path = entry.unwrap().path();
            let text = std::fs::read_to_string(&path).unwrap();
            (path, text)
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn signal_csv_seeds() {
    let mut accepted = 0;
    for (path, text) in seeds("parse_signal_csv") {
        if let Ok(signal) = parse_signal_csv(&text) {
            let again = parse_signal_csv(&write_signal_csv(&signal)).unwrap();
            assert_eq!(again.samples, signal.samples, "{}", path.display());
            accepted += 1;
        }
    }
    assert!(accepted >= 3);
}

#[test]
fn coefficient_seeds() {
    for (_, text) in seeds("parse_coefficients") {
        if let Ok(coeffs) = parse_coefficients(&text) {
            assert!(coeffs.iter().all(|c| c.is_finite()));
            if let Ok(poly) = Polynomial::new(coeffs) {
                let _ = poly.roots();
            }
        }
    }
}

#[test]
fn design_spec_seeds() {
    let mut designed = 0;
    for (_, text) in seeds("parse_design_spec") {
        if let Ok(spec) = parse_design_spec(&text) {
            designed += design(&spec).is_ok() as usize;
        }
    }
    assert!(designed >= 3);
}

#[test]
fn input_spec_seeds() {
    for (path, text) in seeds("parse_input_spec") {
        if let Ok(input) = parse_input_spec(&text) {
            let _ = make_input(&input, 10.0, 0.1);
        } else {
            assert!(path.ends_with("negative_start.json"), "{} rejected", path.display());
        }
    }
}

#[test]
fn pipeline_config_seeds() {
    for (path, text) in seeds("parse_pipeline_config") {
        let ok = PipelineConfig::parse(&text).is_ok();
        assert_eq!(ok, !path.ends_with("no_source.json"), "{}", path.display());
    }
}
