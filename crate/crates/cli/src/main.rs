//! `chanspec`: spectral checks for `H = -Δ + ω²y² - λy²V(xy)` from a config file.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use chanspec::Error;

/// Exit status: the checks ran and every certified inequality held.
const EXIT_OK: u8 = 0;
/// A certified inequality failed.
const EXIT_FAILED: u8 = 1;
/// Bad usage or config.
const EXIT_USAGE: u8 = 2;
/// Numerical failure or I/O error.
const EXIT_NUMERICAL: u8 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    Classify,
    Spectrum1d,
    CriticalLambda,
    Kappa,
    Spectrum2d,
    Quasimode,
    TrialForm,
    Certify,
    MomentBound,
    Report,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Classify => "classify",
            Command::Spectrum1d => "spectrum1d",
            Command::CriticalLambda => "critical-lambda",
            Command::Kappa => "kappa",
            Command::Spectrum2d => "spectrum2d",
            Command::Quasimode => "quasimode",
            Command::TrialForm => "trial-form",
            Command::Certify => "certify",
            Command::MomentBound => "moment-bound",
            Command::Report => "report",
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "chanspec", version, about = "Spectral certificates for a Schroedinger operator with a narrowing channel")]
pub struct Cli {
    #[arg(value_enum)]
    pub command: Command,

    /// Run configuration (`report` falls back to the bundled fixtures).
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Output directory for CSV, JSON and plot files.
    #[arg(long, value_name = "DIR", default_value = "chanspec-out")]
    pub out: PathBuf,

    /// Seed of the Lanczos start vector.
    #[arg(long, default_value_t = 0x5eed)]
    pub seed: u64,

    /// Treat under-resolved grids as errors.
    #[arg(long)]
    pub strict: bool,

    /// Worker threads (0 = all cores).
    #[arg(long, default_value_t = 0)]
    pub threads: usize,

    /// Also write the assembled matrix in coordinate format.
    #[arg(long)]
    pub dump_matrix: bool,
}

pub fn exit_code(e: &Error) -> u8 {
    if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    #[cfg(feature = "parallel")]
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: could not set up {} threads: {e}", cli.threads);
            return ExitCode::from(EXIT_USAGE);
        }
    }
    #[cfg(not(feature = "parallel"))]
    if cli.threads > 1 {
        log::warn!("built without the `parallel` feature; --threads {} ignored", cli.threads);
    }
    match commands::run(&cli) {
        Ok(true) => ExitCode::from(EXIT_OK),
        Ok(false) => ExitCode::from(EXIT_FAILED),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
