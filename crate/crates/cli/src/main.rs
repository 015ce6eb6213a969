use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use casimir_lateral_cli::output::render;
use casimir_lateral_cli::{parse_config, run, warnings, write_atomic, CliError, Command, Format};

#[derive(Parser)]
#[command(name = "casimir-lateral", version, about = "Lateral Casimir-Polder energy of a spheroid above a corrugated surface")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Evaluate one corrugation period (geometry.lambda_c_over_z0)
    Eval(Io),
    /// Sweep lambda_c / z0 over the [sweep] range
    Sweep(Io),
    /// Locate the sign change of v_sum (peak/valley transition)
    Transition(Io),
    /// Sweep the phase of a tilted particle
    DeltaSweep(Io),
}

#[derive(clap::Args)]
struct Io {
    /// TOML configuration (or a JSON fingerprint copied from an output header)
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("CASIMIR_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Usage(format!("CASIMIR_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("thread pool: {e}")))
}

fn execute(cli: Cli) -> Result<(), CliError> {
    let (command, io) = match cli.command {
        Sub::Eval(io) => (Command::Eval, io),
        Sub::Sweep(io) => (Command::Sweep, io),
        Sub::Transition(io) => (Command::Transition, io),
        Sub::DeltaSweep(io) => (Command::DeltaSweep, io),
    };
    configure_threads()?;
    let text = std::fs::read_to_string(&io.config).map_err(|source| CliError::Io {
        context: format!("reading {}", io.config.display()),
        source,
    })?;
    let mut config = parse_config(&text)?;
    if let Some(f) = io.format {
        config.document.output.format = Some(f);
    }
    if let Some(p) = &io.out {
        config.document.output.path = Some(p.clone());
    }
    for w in warnings(command, &config) {
        eprintln!("warning: {w}");
    }
    let outcome = run(command, &config)?;
    let body = render(command, &config, &outcome, config.format());
    match &config.document.output.path {
        Some(path) => write_atomic(path, &body)?,
        None => print!("{body}"),
    }
    let failed = outcome.failed_rows();
    if failed > 0 {
        return Err(CliError::RowsFailed {
            failed,
            total: outcome.rows().len(),
        });
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
