//! `genmrp` — batch pipeline for multi-route planning experiments.
//!
//! Exit codes: 0 success, 1 usage error, 2 input/validation failure,
//! 3 internal check failure.

mod commands;
mod runctx;

use clap::Parser;
use std::ffi::OsString;
use std::process::ExitCode;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Internal(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 3,
        }
    }
}

pub fn validation<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Validation(e.to_string())
}

#[derive(Parser, Debug)]
#[command(
    name = "genmrp",
    about = "Generative multi-route planning: data generation, training, planning and evaluation",
    version,
    args_override_self = true
)]
enum Cli {
    /// Generate a synthetic dataset with planted user preferences.
    GenData(commands::gen_data::GenDataArgs),
    /// Extract a request-level sub-network from a road graph.
    Stc(commands::stc::StcArgs),
    /// Train the link cost model on a dataset.
    Train(commands::train::TrainArgs),
    /// Plan routes for one dataset sample with a trained model.
    Plan(commands::plan::PlanArgs),
    /// Evaluate the trained model and all baselines over the test split.
    Eval(commands::eval::EvalArgs),
    /// Measure per-request response times per method.
    Bench(commands::bench::BenchArgs),
    /// Run the built-in oracle and gradient checks.
    Selfcheck(commands::selfcheck::SelfcheckArgs),
}

/// `--config FILE` loads a JSON object whose keys are long flag names;
/// entries are appended after the command line, so the file overrides
/// flags.
fn expand_config_args() -> Result<Vec<OsString>, CliError> {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    let mut config_path: Option<String> = None;
    let mut cleaned: Vec<OsString> = Vec::with_capacity(args.len());
    let mut it = args.drain(..);
    while let Some(a) = it.next() {
        if a == "--config" {
            let Some(path) = it.next() else {
                return Err(CliError::Usage("--config requires a path".into()));
            };
            config_path = Some(path.to_string_lossy().into_owned());
        } else {
            cleaned.push(a);
        }
    }
    let Some(path) = config_path else {
        return Ok(cleaned);
    };
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("config {path}: {e}")))?;
    let value: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("config {path}: {e}")))?;
    let obj = value
        .as_object()
        .ok_or_else(|| CliError::Validation(format!("config {path}: expected a JSON object")))?;
    for (key, v) in obj {
        let flag = format!("--{}", key.replace('_', "-"));
        match v {
            serde_json::Value::Bool(true) => cleaned.push(flag.into()),
            serde_json::Value::Bool(false) => {}
            serde_json::Value::String(s) => {
                cleaned.push(flag.into());
                cleaned.push(s.into());
            }
            other => {
                cleaned.push(flag.into());
                cleaned.push(other.to_string().into());
            }
        }
    }
    Ok(cleaned)
}

fn main() -> ExitCode {
    let args = match expand_config_args() {
        Ok(a) => a,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.code());
        }
    };
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // keep clap's rendered help/error text but our exit codes
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => {
                    ExitCode::SUCCESS
                }
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli {
        Cli::GenData(a) => commands::gen_data::run(a),
        Cli::Stc(a) => commands::stc::run(a),
        Cli::Train(a) => commands::train::run(a),
        Cli::Plan(a) => commands::plan::run(a),
        Cli::Eval(a) => commands::eval::run(a),
        Cli::Bench(a) => commands::bench::run(a),
        Cli::Selfcheck(a) => commands::selfcheck::run(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
