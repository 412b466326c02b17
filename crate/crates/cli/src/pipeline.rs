//! End-to-end runs described by a JSON config: design (or given
//! coefficients) → simulation → analysis, with a pass/fail summary.

use std::path::{Path, PathBuf};

use harmosc::poly::DEFAULT_BOUNDARY_TOLERANCE;
use harmosc::{classify, DesignReport, DesignSpec, InputSpec, OscillationReport, Polynomial, RegionClass};
use serde::{Deserialize, Serialize};

use crate::commands::{
    analytic_csv, coefficients_json, run_analyze, run_design, run_simulate, spectrogram_csv, to_pretty_json,
    AnalysisParams,
};
use crate::error::CliError;

/// Relative ω̂ error above which a run fails.
pub const OMEGA_TOLERANCE: f64 = 0.01;
/// Default bias tolerance, relative to max(|expected bias|, Â).
pub const BIAS_TOLERANCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Expectations {
    pub bias: Option<f64>,
    pub bias_tolerance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    /// Output subdirectory name; defaults to the config file stem.
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub design: Option<DesignSpec>,
    /// Ascending-order coefficients, used instead of `design`.
    #[serde(default)]
    pub coefficients: Option<Vec<f64>>,
    pub input: InputSpec,
    pub t_end: f64,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub analysis: AnalysisParams,
    #[serde(default)]
    pub expect: Expectations,
    /// Output directory; the command line `--out-dir` takes precedence.
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

impl PipelineConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let config: Self = serde_json::from_str(text).map_err(|e| CliError::validation("Config", e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let invalid = |m: &str| Err(CliError::validation("Config", m));
        match (&self.design, &self.coefficients) {
            (Some(_), Some(_)) => return invalid("give either `design` or `coefficients`, not both"),
            (None, None) => return invalid("one of `design` or `coefficients` is required"),
            (Some(spec), None) => spec.validate().map_err(CliError::from)?,
            (None, Some(_)) => {}
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return invalid("`t_end` must be finite and > 0");
        }
        if let Some(dt) = self.dt {
            if !(dt.is_finite() && dt > 0.0) {
                return invalid("`dt` must be finite and > 0");
            }
        }
        if let Some(name) = &self.name {
            if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
                return invalid("`name` must be a plain directory name");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Status {
    Pass,
    Fail,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineSummary {
    pub name: String,
    pub status: Status,
    /// Design verdict; absent when coefficients were given directly.
    pub verdict: Option<bool>,
    /// Reference frequency: the spec's ω_k, or the harmonic-boundary root of
    /// the given coefficients.
    pub omega_k: Option<f64>,
    pub omega_hat: f64,
    pub omega_rel_error: Option<f64>,
    pub omega_check: Option<bool>,
    pub bias: f64,
    pub expected_bias: Option<f64>,
    pub bias_check: Option<bool>,
    pub report: OscillationReport,
    pub artifacts: Vec<String>,
}

/// Files produced by one run, in write order.
pub struct PipelineOutput {
    pub summary: PipelineSummary,
    pub files: Vec<(String, String)>,
}

/// Largest positive ω among roots on the harmonic boundary.
fn boundary_frequency(poly: &Polynomial) -> Result<Option<f64>, CliError> {
    let roots = poly.roots()?;
    Ok(roots
        .iter()
        .filter(|r| classify(**r, DEFAULT_BOUNDARY_TOLERANCE * r.magnitude().max(1.0)) == RegionClass::HarmonicBoundary)
        .map(|r| r.omega)
        .filter(|w| *w > 0.0)
        .reduce(f64::max))
}

pub fn run_pipeline(config: &PipelineConfig, name: &str) -> Result<PipelineOutput, CliError> {
    config.validate().map_err(|e| e.in_stage("config"))?;
    let mut files = Vec::new();

    let (coeffs, verdict, omega_k) = match (&config.design, &config.coefficients) {
        (Some(spec), _) => {
            let out = run_design(spec).map_err(|e| e.in_stage("design"))?;
            files.push(("coefficients.json".to_string(), coefficients_json(&out.polynomial)));
            files.push(("design_report.json".to_string(), to_pretty_json::<DesignReport>(&out.report)));
            (out.polynomial.coeffs().to_vec(), Some(out.report.verdict), Some(spec.omega_k))
        }
        (None, Some(c)) => {
            let poly = Polynomial::new(c.clone()).map_err(|e| CliError::from(e).in_stage("design"))?;
            let omega = boundary_frequency(&poly).map_err(|e| e.in_stage("design"))?;
            files.push(("coefficients.json".to_string(), coefficients_json(&poly)));
            (c.clone(), None, omega)
        }
        (None, None) => unreachable!("validated"),
    };

    let signal = run_simulate(&coeffs, &config.input, config.t_end, config.dt).map_err(|e| e.in_stage("simulate"))?;
    files.push(("signal.csv".to_string(), harmosc::io::write_signal_csv(&signal)));

    let analysis = run_analyze(&signal, &config.analysis).map_err(|e| e.in_stage("analyze"))?;
    files.push(("report.json".to_string(), to_pretty_json(&analysis.report)));
    files.push(("spectrogram.csv".to_string(), spectrogram_csv(&analysis.spectrogram)));
    files.push(("analytic.csv".to_string(), analytic_csv(&analysis.analytic)));

    let report = analysis.report;
    let omega_rel_error = omega_k.map(|w| (report.omega_rad_s - w).abs() / w);
    let omega_check = omega_rel_error.map(|e| e <= OMEGA_TOLERANCE);
    let bias_check = config.expect.bias.map(|b| {
        let tol = config.expect.bias_tolerance.unwrap_or(BIAS_TOLERANCE);
        (report.bias - b).abs() <= tol * b.abs().max(report.amplitude)
    });
    let pass = verdict != Some(false) && omega_check != Some(false) && bias_check != Some(false);

    let mut artifacts: Vec<String> = files.iter().map(|(f, _)| f.clone()).collect();
    artifacts.push("summary.json".to_string());
    let summary = PipelineSummary {
        name: name.to_string(),
        status: if pass { Status::Pass } else { Status::Fail },
        verdict,
        omega_k,
        omega_hat: report.omega_rad_s,
        omega_rel_error,
        omega_check,
        bias: report.bias,
        expected_bias: config.expect.bias,
        bias_check,
        report,
        artifacts,
    };
    files.push(("summary.json".to_string(), to_pretty_json(&summary)));
    Ok(PipelineOutput { summary, files })
}

/// Run name: the config's `name`, else the file stem.
pub fn run_name(config: &PipelineConfig, path: &Path) -> String {
    config.name.clone().unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".to_string())
    })
}

pub fn write_outputs(dir: &Path, files: &[(String, String)]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e).in_stage("write"))?;
    for (name, contents) in files {
        let path = dir.join(name);
        std::fs::write(&path, contents).map_err(|e| CliError::io(&path, e).in_stage("write"))?;
    }
    Ok(())
}
