//! File formats: signal CSV, coefficient lists and JSON specs.

use std::fmt::Write as _;

use serde::Deserialize;
use thiserror::Error;

use crate::design::DesignSpec;
use crate::sim::{InputSpec, Signal};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid coefficient list: {0}")]
    Coefficients(String),
    #[error("{0}")]
    Invalid(String),
}

/// Formats a value with 17 significant digits, enough to round-trip any f64.
pub fn format_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_signal_csv(signal: &Signal) -> String {
    let mut out = String::with_capacity(48 * (signal.len() + 1));
    out.push_str("t,y\n");
    for (t, y) in signal.times().zip(&signal.samples) {
        let _ = writeln!(out, "{},{}", format_f64(t), format_f64(*y));
    }
    out
}

/// Relative tolerance on successive time steps when checking uniform sampling.
const GRID_TOLERANCE: f64 = 1e-6;

/// Parses a `t,y` CSV. The time column must be uniformly spaced.
pub fn parse_signal_csv(text: &str) -> Result<Signal, FormatError> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or(FormatError::Csv {
        line: 1,
        message: "empty file".into(),
    })?;
    let columns: Vec<&str> = header.split(',').map(str::trim).collect();
    if columns != ["t", "y"] {
        return Err(FormatError::Csv {
            line: 1,
            message: format!("expected header \"t,y\", found {header:?}"),
        });
    }

    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let err = |message: String| FormatError::Csv { line: idx + 1, message };
        let mut fields = line.split(',');
        let (Some(t), Some(y), None) = (fields.next(), fields.next(), fields.next()) else {
            return Err(err(format!("expected two fields, found {line:?}")));
        };
        let parse = |s: &str| -> Result<f64, FormatError> {
            let v: f64 = s.trim().parse().map_err(|_| err(format!("not a number: {s:?}")))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(err(format!("non-finite value {s:?}")))
            }
        };
        times.push(parse(t)?);
        samples.push(parse(y)?);
    }

    if times.len() < 2 {
        return Err(FormatError::Invalid(format!(
            "signal needs at least two samples, found {}",
            times.len()
        )));
    }
    let t0 = times[0];
    let dt = (times[times.len() - 1] - t0) / (times.len() - 1) as f64;
    if !(dt > 0.0) {
        return Err(FormatError::Invalid("time column must be increasing".into()));
    }
    for (k, &t) in times.iter().enumerate() {
        let expected = t0 + k as f64 * dt;
        if (t - expected).abs() > GRID_TOLERANCE * dt + 1e-12 * expected.abs() {
            return Err(FormatError::Csv {
                line: k + 2,
                message: format!("sample time {t} is off the uniform grid (expected {expected})"),
            });
        }
    }
    Signal::new(t0, dt, samples).map_err(|e| FormatError::Invalid(e.to_string()))
}

#[derive(Deserialize)]
#[serde(untagged)]
enum CoefficientDocument {
    List(Vec<f64>),
    Object { coefficients: Vec<f64> },
}

/// Parses ascending-order coefficients from a JSON array, a JSON object with
/// a `coefficients` array, or a plain comma/whitespace-separated list.
pub fn parse_coefficients(text: &str) -> Result<Vec<f64>, FormatError> {
    let trimmed = text.trim();
    let coeffs = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        match serde_json::from_str::<CoefficientDocument>(trimmed)? {
            CoefficientDocument::List(v) => v,
            CoefficientDocument::Object { coefficients } => coefficients,
        }
    } else {
        trimmed
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| FormatError::Coefficients(format!("not a number: {s:?}")))
            })
            .collect::<Result<_, _>>()?
    };
    if coeffs.is_empty() {
        return Err(FormatError::Coefficients("no coefficients given".into()));
    }
    if let Some(i) = coeffs.iter().position(|c| !c.is_finite()) {
        return Err(FormatError::Coefficients(format!("coefficient {i} is not finite")));
    }
    Ok(coeffs)
}

pub fn parse_design_spec(text: &str) -> Result<DesignSpec, FormatError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_input_spec(text: &str) -> Result<InputSpec, FormatError> {
    Ok(serde_json::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let s = Signal::from_fn(0.0, 0.1, 50, |t| (1.7 * t).sin() / 3.0).unwrap();
        let text = write_signal_csv(&s);
        assert!(text.starts_with("t,y\n"));
        let back = parse_signal_csv(&text).unwrap();
        assert_eq!(back.samples, s.samples);
        assert_eq!(back.t0, 0.0);
        assert!((back.dt - 0.1).abs() < 1e-15);
        assert_eq!(write_signal_csv(&back), text);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(parse_signal_csv("").is_err());
        assert!(parse_signal_csv("time,value\n0,1\n1,2\n").is_err());
        assert!(parse_signal_csv("t,y\n0,1\n").is_err());
        assert!(parse_signal_csv("t,y\n0,1\n1,x\n").is_err());
        assert!(parse_signal_csv("t,y\n0,1\n1,NaN\n").is_err());
        assert!(parse_signal_csv("t,y\n0,1\n1,2,3\n").is_err());
        assert!(parse_signal_csv("t,y\n0,1\n1,2\n3,3\n").is_err());
        assert!(parse_signal_csv("t,y\n1,1\n0,2\n").is_err());
    }

    #[test]
    fn format_has_seventeen_significant_digits() {
        assert_eq!(format_f64(0.1), "1.0000000000000001e-1");
        assert_eq!(format_f64(-2.0), "-2.0000000000000000e0");
        for x in [std::f64::consts::PI, 1e-300, 123456.789, -0.0] {
            assert_eq!(format_f64(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
    }

    #[test]
    fn coefficient_formats() {
        let expected = vec![1.0, 0.5, 4.25, 0.125, 1.0];
        assert_eq!(parse_coefficients("[1, 0.5, 4.25, 0.125, 1]").unwrap(), expected);
        assert_eq!(
            parse_coefficients(r#"{"coefficients": [1, 0.5, 4.25, 0.125, 1], "extra": 3}"#).unwrap(),
            expected
        );
        assert_eq!(parse_coefficients("1,0.5, 4.25 0.125\n1\n").unwrap(), expected);
        assert!(parse_coefficients("").is_err());
        assert!(parse_coefficients("1, two").is_err());
        assert!(parse_coefficients("[]").is_err());
        assert!(parse_coefficients("1, inf").is_err());
    }

    #[test]
    fn spec_parsers() {
        let spec = parse_design_spec(r#"{"order": 4, "omega_k": 2, "pinned": {"0": 1, "1": 0.5, "4": 1}}"#).unwrap();
        assert_eq!(spec.order, 4);
        assert_eq!(spec.pinned.len(), 3);
        assert!(parse_design_spec(r#"{"order": 4}"#).is_err());
        let input = parse_input_spec(r#"{"type": "impulses", "events": [{"t": 0, "area": 1}]}"#).unwrap();
        assert_eq!(input, InputSpec::impulse(1.0));
        assert!(parse_input_spec(r#"{"type": "ramp"}"#).is_err());
    }
}
