mod commands;
mod config;
mod report;

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use serde_json::Value;

use commands::{AnalyzeArgs, ConstantsArgs, DegreeArgs, ScanArgs, VerifyArgs};
use config::FileConfig;
use report::{Failure, Outcome, ReportEnvelope, EXIT_OK, EXIT_USAGE};

/// Numerical checks for the Dirac–Einstein bubble reduction.
#[derive(Debug, Parser)]
#[command(name = "dirac-reduction", version)]
struct Cli {
    /// TOML file with default flag values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Finite-difference residuals of the bubble system at two resolutions.
    Verify(VerifyArgs),
    /// Kernel integrals and expansion constants against closed forms.
    Constants(ConstantsArgs),
    /// Γ and its gradient over a (λ, ξ) grid.
    GammaScan(ScanArgs),
    /// Critical points of h and the theorem hypotheses.
    Analyze(AnalyzeArgs),
    /// Kronecker degree of ∇Γ over B_s against the Morse count.
    Degree(DegreeArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Verify(_) => "verify",
            Command::Constants(_) => "constants",
            Command::GammaScan(_) => "gamma-scan",
            Command::Analyze(_) => "analyze",
            Command::Degree(_) => "degree",
        }
    }
}

const COMMANDS: [&str; 5] = ["verify", "constants", "gamma-scan", "analyze", "degree"];

fn emit(command: &str, started: Instant, result: Result<Outcome, Failure>) -> i32 {
    let (envelope, code) = match result {
        Ok(o) => (
            ReportEnvelope {
                command: command.into(),
                input: o.input,
                version: env!("CARGO_PKG_VERSION"),
                wall_time: started.elapsed().as_secs_f64(),
                results: o.results,
                warnings: o.warnings,
                error: None,
            },
            o.exit,
        ),
        Err(f) => {
            eprintln!("error: {}", f.error.message);
            (
                ReportEnvelope {
                    command: command.into(),
                    input: f.input,
                    version: env!("CARGO_PKG_VERSION"),
                    wall_time: started.elapsed().as_secs_f64(),
                    results: Value::Null,
                    warnings: Vec::new(),
                    error: Some(f.error),
                },
                f.code,
            )
        }
    };
    let text = serde_json::to_string_pretty(&envelope).expect("report serializes");
    // a closed pipe must not turn a verdict into a panic
    let _ = writeln!(std::io::stdout(), "{text}");
    code
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(text) = std::env::var("REDUCTION_THREADS") else {
        return Ok(());
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::usage(format!("REDUCTION_THREADS must be a positive integer, got {text:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::new(report::EXIT_NUMERIC, "ThreadPool", e.to_string()))
}

fn run(args: Vec<OsString>) -> i32 {
    let started = Instant::now();
    let guessed = args
        .iter()
        .skip(1)
        .filter_map(|a| a.to_str())
        .find(|a| COMMANDS.contains(a))
        .unwrap_or("unknown")
        .to_string();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            print!("{e}");
            return EXIT_OK;
        }
        Err(e) => {
            let message = e.render().to_string();
            return emit(&guessed, started, Err(Failure::usage(message.trim())));
        }
    };
    let command = cli.command.name();
    if let Err(f) = configure_threads() {
        return emit(command, started, Err(f));
    }
    let cfg = match &cli.config {
        Some(path) => match FileConfig::load(path) {
            Ok(c) => c,
            Err(m) => return emit(command, started, Err(Failure::new(EXIT_USAGE, "ConfigError", m))),
        },
        None => FileConfig::default(),
    };
    let result = match &cli.command {
        Command::Verify(a) => commands::verify(a, &cfg),
        Command::Constants(a) => commands::constants(a, &cfg),
        Command::GammaScan(a) => commands::gamma_scan(a, &cfg),
        Command::Analyze(a) => commands::analyze(a, &cfg),
        Command::Degree(a) => commands::degree(a, &cfg),
    };
    emit(command, started, result)
}

fn main() {
    std::process::exit(run(std::env::args_os().collect()));
}
