//! Batch driver: evaluations, sweeps and transition searches configured by a
//! TOML file, emitted as CSV or JSON.

pub mod config;
pub mod output;

use std::fmt;
use std::io::Write;
use std::path::Path;

use casimir_lateral::regimes::{
    evaluate, find_transition, scan_for_bracket, sweep, RegimeReport, SweepRow,
    DEFAULT_DELTA_TOL,
};
use casimir_lateral::{Error as NumericalError, Evaluator, Transition};
use serde::{Deserialize, Serialize};

pub use config::{parse_config, ConfigError, RunConfig};

/// Points in the scan that brackets a transition when none is configured.
pub const AUTO_BRACKET_POINTS: usize = 32;
/// Scan range used by `transition` when the config has no sweep section.
pub const AUTO_BRACKET_RANGE: (f64, f64) = (0.2, 10.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Eval,
    Sweep,
    Transition,
    DeltaSweep,
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Command::Eval => "eval",
            Command::Sweep => "sweep",
            Command::Transition => "transition",
            Command::DeltaSweep => "delta-sweep",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("invalid configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("numerical failure: {0}")]
    Numerical(#[from] NumericalError),
    #[error("{failed} of {total} rows failed")]
    RowsFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) | CliError::Io { .. } => 1,
            CliError::Numerical(_) | CliError::RowsFailed { .. } => 2,
        }
    }
}

/// What a subcommand produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Rows(Vec<SweepRow>),
    Transition {
        transition: Transition,
        bracket: (f64, f64),
        report: RegimeReport,
    },
}

impl Outcome {
    pub fn rows(&self) -> Vec<SweepRow> {
        match self {
            Outcome::Rows(rows) => rows.clone(),
            Outcome::Transition {
                transition, report, ..
            } => vec![SweepRow {
                lambda_over_z0: transition.root,
                outcome: Ok(*report),
            }],
        }
    }

    pub fn failed_rows(&self) -> usize {
        match self {
            Outcome::Rows(rows) => rows.iter().filter(|r| r.outcome.is_err()).count(),
            Outcome::Transition { .. } => 0,
        }
    }
}

/// Warnings worth surfacing before a run.
pub fn warnings(command: Command, config: &RunConfig) -> Vec<String> {
    let mut out = Vec::new();
    if command == Command::DeltaSweep {
        let p = &config.scenario.particle;
        let t = p.normalized_tensor_for(casimir_lateral::Permittivity::Infinite);
        if t.map(|t| t.xz.abs() <= 1e-12 * t.trace().abs()).unwrap_or(false) {
            out.push(
                "alpha_xz vanishes for this orientation; delta is restricted to 0 or pi".to_string(),
            );
        }
    }
    out
}

/// Run `command`. Evaluator failures of individual sweep rows are kept in
/// the rows; anything else aborts.
pub fn run(command: Command, config: &RunConfig) -> Result<Outcome, CliError> {
    let ev = Evaluator::new(config.quadrature(command));
    let mode = config.mode();
    let scenario = &config.scenario;
    match command {
        Command::Eval => {
            let x = config.period_ratio().ok_or_else(|| {
                ConfigError {
                    key: "geometry.lambda_c_over_z0".into(),
                    message: "required for eval".into(),
                }
            })?;
            let report = evaluate(&ev, scenario, mode, x, DEFAULT_DELTA_TOL)?;
            Ok(Outcome::Rows(vec![SweepRow {
                lambda_over_z0: x,
                outcome: Ok(report),
            }]))
        }
        Command::Sweep | Command::DeltaSweep => {
            let (lo, hi, n) = config.sweep().ok_or_else(|| ConfigError {
                key: "sweep".into(),
                message: format!("required for {command}"),
            })?;
            Ok(Outcome::Rows(sweep(&ev, scenario, mode, (lo, hi), n, DEFAULT_DELTA_TOL)?))
        }
        Command::Transition => {
            let bracket = match config.bracket() {
                Some(b) => b,
                None => {
                    let range = config
                        .sweep()
                        .map(|(lo, hi, _)| (lo, hi))
                        .unwrap_or(AUTO_BRACKET_RANGE);
                    // The scan only needs signs; the search re-certifies them.
                    let scan = Evaluator::new(config.quadrature(Command::Sweep));
                    scan_for_bracket(&scan, scenario, mode, range, AUTO_BRACKET_POINTS)?
                }
            };
            let transition = find_transition(&ev, scenario, mode, bracket)?;
            let report = evaluate(&ev, scenario, mode, transition.root, DEFAULT_DELTA_TOL)?;
            Ok(Outcome::Transition {
                transition,
                bracket,
                report,
            })
        }
    }
}

/// Write `body` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, body: &str) -> Result<(), CliError> {
    let io = |context: String| move |source| CliError::Io { context, source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(io(format!("creating a temporary file in {}", dir.display())))?;
    tmp.write_all(body.as_bytes())
        .map_err(io(format!("writing {}", path.display())))?;
    tmp.persist(path)
        .map_err(|e| CliError::Io {
            context: format!("replacing {}", path.display()),
            source: e.error,
        })?;
    Ok(())
}
