//! The design, simulate and analyze stages, producing in-memory artifacts.

use std::fmt::Write as _;

use harmosc::analysis::{analytic, oscillation_report, spectrogram};
use harmosc::design::{design, verify_design, DEFAULT_VERIFY_TOLERANCE};
use harmosc::io::format_f64;
use harmosc::sim::{canonical_state_space, make_input, simulate};
use harmosc::{
    AnalyticSignal, DesignReport, DesignSpec, InputSpec, OscillationReport, Polynomial, Signal, Spectrogram,
};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Spectrogram window used when none is given, if the signal is long enough.
pub const DEFAULT_WINDOW: usize = 4096;
/// Simulation step used when none is given, if the model allows it.
pub const DEFAULT_DT: f64 = 0.01;
/// Fraction of the record discarded as transient when no discard is given.
pub const DEFAULT_DISCARD_FRACTION: f64 = 0.25;

pub struct DesignOutput {
    pub polynomial: Polynomial,
    pub report: DesignReport,
}

/// Designs and verifies. A false verdict is not an error here; callers decide.
pub fn run_design(spec: &DesignSpec) -> Result<DesignOutput, CliError> {
    let polynomial = design(spec)?;
    let report = verify_design(&polynomial, spec, DEFAULT_VERIFY_TOLERANCE)?;
    Ok(DesignOutput { polynomial, report })
}

pub fn coefficients_json(poly: &Polynomial) -> String {
    let mut out = serde_json::json!({ "coefficients": poly.coeffs() }).to_string();
    out.push('\n');
    out
}

pub fn coefficients_csv(poly: &Polynomial) -> String {
    let mut out = String::from("index,coefficient\n");
    for (i, c) in poly.coeffs().iter().enumerate() {
        let _ = writeln!(out, "{i},{}", format_f64(*c));
    }
    out
}

pub fn to_pretty_json<T: Serialize>(value: &T) -> String {
    let mut out = serde_json::to_string_pretty(value).expect("serializable value");
    out.push('\n');
    out
}

/// Step actually used: `dt` if given, else [`DEFAULT_DT`] capped at the
/// model's resolution limit.
pub fn run_simulate(coeffs: &[f64], input: &InputSpec, t_end: f64, dt: Option<f64>) -> Result<Signal, CliError> {
    let poly = Polynomial::new(coeffs.to_vec())?;
    let model = canonical_state_space(&poly)?;
    let dt = match dt {
        Some(dt) => dt,
        None => DEFAULT_DT.min(model.max_step()?),
    };
    let u = make_input(input, t_end, dt)?;
    Ok(simulate(&model, &u, t_end, dt, None)?)
}

pub fn signal_json(signal: &Signal) -> String {
    let mut out = serde_json::to_string(signal).expect("serializable signal");
    out.push('\n');
    out
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisParams {
    /// Spectrogram window in samples.
    pub window: Option<usize>,
    /// Spectrogram hop in samples.
    pub hop: Option<usize>,
    /// Seconds dropped from the start before steady-state estimation.
    pub discard: Option<f64>,
}

impl AnalysisParams {
    /// `window`, or [`DEFAULT_WINDOW`] reduced to the largest power of two
    /// that fits the signal.
    pub fn window_for(&self, len: usize) -> usize {
        self.window.unwrap_or_else(|| {
            if len >= DEFAULT_WINDOW {
                DEFAULT_WINDOW
            } else if len < 2 {
                2
            } else {
                1 << (usize::BITS - 1 - len.leading_zeros())
            }
        })
    }

    pub fn hop_for(&self, window: usize) -> usize {
        self.hop.unwrap_or((window / 8).max(1))
    }

    pub fn discard_for(&self, signal: &Signal) -> f64 {
        self.discard.unwrap_or(DEFAULT_DISCARD_FRACTION * signal.duration())
    }
}

pub struct AnalysisOutput {
    pub report: OscillationReport,
    pub spectrogram: Spectrogram,
    pub analytic: AnalyticSignal,
}

pub fn run_analyze(signal: &Signal, params: &AnalysisParams) -> Result<AnalysisOutput, CliError> {
    let window = params.window_for(signal.len());
    let spectrogram = spectrogram(signal, window, params.hop_for(window))?;
    let analytic = analytic(signal)?;
    let report = oscillation_report(signal, params.discard_for(signal))?;
    Ok(AnalysisOutput {
        report,
        spectrogram,
        analytic,
    })
}

/// Grid CSV: first row holds the bin frequencies (Hz), first column the
/// frame centre times (s).
pub fn spectrogram_csv(spec: &Spectrogram) -> String {
    let mut out = String::new();
    out.push_str("t\\f");
    for f in &spec.freqs {
        out.push(',');
        out.push_str(&format_f64(*f));
    }
    out.push('\n');
    for (t, row) in spec.times.iter().zip(&spec.magnitudes) {
        out.push_str(&format_f64(*t));
        for m in row {
            out.push(',');
            out.push_str(&format_f64(*m));
        }
        out.push('\n');
    }
    out
}

/// Columns `t,real,imag,envelope,phase` (phase unwrapped, radians).
pub fn analytic_csv(a: &AnalyticSignal) -> String {
    let phase = a.unwrapped_phase();
    let mut out = String::from("t,real,imag,envelope,phase\n");
    for (k, z) in a.samples.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            format_f64(a.time(k)),
            format_f64(z.re),
            format_f64(z.im),
            format_f64(z.norm()),
            format_f64(phase[k])
        );
    }
    out
}

/// `key,value` rows; absent values are empty.
pub fn report_csv(r: &OscillationReport) -> String {
    let opt = |v: Option<f64>| v.map(format_f64).unwrap_or_default();
    let mut out = String::from("key,value\n");
    let _ = writeln!(out, "f_hz,{}", format_f64(r.f_hz));
    let _ = writeln!(out, "omega_rad_s,{}", format_f64(r.omega_rad_s));
    let _ = writeln!(out, "amplitude,{}", format_f64(r.amplitude));
    let _ = writeln!(out, "bias,{}", format_f64(r.bias));
    let _ = writeln!(out, "tau_s,{}", opt(r.tau_s));
    let _ = writeln!(out, "transient_f_hz,{}", opt(r.transient_f_hz));
    let _ = writeln!(out, "flags,{}", r.flags.join(";"));
    out
}
