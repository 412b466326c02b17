//! Command-line front end: `design`, `simulate`, `analyze` and `pipeline`.
//!
//! Every command writes its primary result to stdout and, with `--out-dir`,
//! its full set of artifacts to files. Failures are reported as a JSON
//! document `{"error": {...}}` and exit code 1 (invalid input) or 2
//! (numerical failure, including a design whose verification fails).

pub mod commands;
pub mod error;
pub mod pipeline;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use harmosc::io::{parse_coefficients, parse_design_spec, parse_input_spec, parse_signal_csv, write_signal_csv};

pub use commands::AnalysisParams;
pub use error::{Category, CliError, EXIT_NUMERICAL, EXIT_OK, EXIT_VALIDATION};
pub use pipeline::{PipelineConfig, PipelineSummary, Status};

#[derive(Debug, Parser)]
#[command(name = "harmosc", version, about = "Design, simulate and analyze LTI harmonic oscillators")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for coefficients from a JSON design spec and verify the roots.
    Design {
        /// Design spec file: {"order", "omega_k", "decays", "pinned"}.
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// stdout format: the full report (json) or the coefficient table (csv).
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Simulate the response of 1/Δ(s) to an input.
    Simulate {
        /// Coefficients (ascending order): a file, or an inline list such as "1,0.5,4.25,0.125,1".
        #[arg(long)]
        coeffs: String,
        /// Input spec: a JSON file, or inline JSON.
        #[arg(long)]
        input: String,
        #[arg(long)]
        t_end: f64,
        /// Step size; defaults to 0.01 s or the model's resolution limit, whichever is smaller.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "csv")]
        format: Format,
    },
    /// Estimate frequency, amplitude, bias and transient decay of a signal CSV.
    Analyze {
        /// Signal CSV with header "t,y".
        #[arg(long)]
        input: PathBuf,
        /// Spectrogram window in samples (default 4096, or less for short signals).
        #[arg(long)]
        window: Option<usize>,
        /// Spectrogram hop in samples (default window/8).
        #[arg(long)]
        hop: Option<usize>,
        /// Seconds discarded before steady-state estimation (default: a quarter of the record).
        #[arg(long)]
        discard: Option<f64>,
        #[arg(long)]
        out_dir: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "json")]
        format: Format,
    },
    /// Run design → simulate → analyze for one or more config files, in parallel.
    Pipeline {
        #[arg(required = true)]
        configs: Vec<PathBuf>,
        /// Root output directory; each run writes to <out-dir>/<name>/.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
}

/// Default root directory for pipeline outputs.
pub const DEFAULT_PIPELINE_DIR: &str = "pipeline_out";

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// The contents of `arg` if it names a file, otherwise `arg` itself.
fn file_or_inline(arg: &str) -> Result<String, CliError> {
    let path = Path::new(arg);
    if path.is_file() {
        read_file(path)
    } else {
        Ok(arg.to_string())
    }
}

fn emit(out: &mut dyn Write, text: &str) -> Result<(), CliError> {
    out.write_all(text.as_bytes())
        .map_err(|e| CliError::validation("Io", format!("stdout: {e}")))
}

/// Runs one command, writing its primary output to `out`. Returns the exit
/// code for outcomes that are not errors (e.g. a false design verdict).
pub fn execute(cli: Cli, out: &mut dyn Write) -> Result<i32, CliError> {
    match cli.command {
        Command::Design { spec, out_dir, format } => {
            let spec = parse_design_spec(&read_file(&spec)?)?;
            let result = commands::run_design(&spec)?;
            if let Some(dir) = out_dir {
                pipeline::write_outputs(
                    &dir,
                    &[
                        ("coefficients.json".into(), commands::coefficients_json(&result.polynomial)),
                        ("design_report.json".into(), commands::to_pretty_json(&result.report)),
                    ],
                )?;
            }
            match format {
                Format::Json => emit(out, &commands::to_pretty_json(&result.report))?,
                Format::Csv => emit(out, &commands::coefficients_csv(&result.polynomial))?,
            }
            Ok(if result.report.verdict { EXIT_OK } else { EXIT_NUMERICAL })
        }
        Command::Simulate {
            coeffs,
            input,
            t_end,
            dt,
            out_dir,
            format,
        } => {
            let coeffs = parse_coefficients(&file_or_inline(&coeffs)?)?;
            let input = parse_input_spec(&file_or_inline(&input)?)?;
            let signal = commands::run_simulate(&coeffs, &input, t_end, dt)?;
            let (name, text) = match format {
                Format::Csv => ("signal.csv", write_signal_csv(&signal)),
                Format::Json => ("signal.json", commands::signal_json(&signal)),
            };
            if let Some(dir) = out_dir {
                pipeline::write_outputs(&dir, &[(name.into(), text.clone())])?;
            }
            emit(out, &text)?;
            Ok(EXIT_OK)
        }
        Command::Analyze {
            input,
            window,
            hop,
            discard,
            out_dir,
            format,
        } => {
            let signal = parse_signal_csv(&read_file(&input)?)?;
            let params = AnalysisParams { window, hop, discard };
            let result = commands::run_analyze(&signal, &params)?;
            if let Some(dir) = out_dir {
                pipeline::write_outputs(
                    &dir,
                    &[
                        ("report.json".into(), commands::to_pretty_json(&result.report)),
                        ("spectrogram.csv".into(), commands::spectrogram_csv(&result.spectrogram)),
                        ("analytic.csv".into(), commands::analytic_csv(&result.analytic)),
                    ],
                )?;
            }
            match format {
                Format::Json => emit(out, &commands::to_pretty_json(&result.report))?,
                Format::Csv => emit(out, &commands::report_csv(&result.report))?,
            }
            Ok(EXIT_OK)
        }
        Command::Pipeline { configs, out_dir } => run_pipelines(&configs, out_dir.as_deref(), out),
    }
}

#[derive(Serialize)]
#[serde(untagged)]
enum RunEntry {
    Done(Box<PipelineSummary>),
    Error { name: String, status: &'static str, error: CliError },
}

fn run_one(path: &Path, cli_dir: Option<&Path>) -> (String, Result<PipelineSummary, CliError>) {
    let stem_name = || {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into())
    };
    let config = match read_file(path).and_then(|t| PipelineConfig::parse(&t)) {
        Ok(c) => c,
        Err(e) => return (stem_name(), Err(e.in_stage("config"))),
    };
    let name = pipeline::run_name(&config, path);
    let root = cli_dir
        .map(Path::to_path_buf)
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from(DEFAULT_PIPELINE_DIR));
    let result = pipeline::run_pipeline(&config, &name).and_then(|output| {
        pipeline::write_outputs(&root.join(&name), &output.files)?;
        Ok(output.summary)
    });
    (name, result)
}

fn run_pipelines(configs: &[PathBuf], cli_dir: Option<&Path>, out: &mut dyn Write) -> Result<i32, CliError> {
    let results: Vec<(String, Result<PipelineSummary, CliError>)> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs.iter().map(|p| scope.spawn(move || run_one(p, cli_dir))).collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("pipeline worker panicked"))
            .collect()
    });

    let mut code = EXIT_OK;
    let mut entries = Vec::with_capacity(results.len());
    for (name, result) in results {
        match result {
            Ok(summary) => {
                if summary.status == Status::Fail && code == EXIT_OK {
                    code = EXIT_NUMERICAL;
                }
                entries.push(RunEntry::Done(Box::new(summary)));
            }
            Err(error) => {
                code = match (code, error.category) {
                    (_, Category::Validation) => EXIT_VALIDATION,
                    (EXIT_VALIDATION, _) => EXIT_VALIDATION,
                    _ => EXIT_NUMERICAL,
                };
                entries.push(RunEntry::Error {
                    name,
                    status: "ERROR",
                    error,
                });
            }
        }
    }
    let text = commands::to_pretty_json(&entries);
    if let Some(dir) = cli_dir {
        pipeline::write_outputs(dir, &[("summary.json".into(), text.clone())])?;
    }
    emit(out, &text)?;
    Ok(code)
}
