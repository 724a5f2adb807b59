//! Command-line front end: chain files in, JSON or CSV reports out.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success |
//! | 2 | invalid input (file, matrix, initial law, target) |
//! | 3 | mathematical precondition not met |
//! | 4 | structural hypothesis failed (non-stochastic link, monotonicity, separation minimizer) |
//! | 5 | a verification gate failed |

pub mod commands;
pub mod report;
pub mod spec_file;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ssd_core::error::Error;

/// Errors surfaced by the CLI, each mapped to one exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Core(Error),
    /// Unreadable or malformed input, or flags that do not fit the file.
    Input(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Input(s) => f.write_str(s),
        }
    }
}

pub const EXIT_INPUT: i32 = 2;
pub const EXIT_PRECONDITION: i32 = 3;
pub const EXIT_HYPOTHESIS: i32 = 4;
pub const EXIT_GATE: i32 = 5;

pub fn exit_code(e: &CliError) -> i32 {
    let CliError::Core(e) = e else {
        return EXIT_INPUT;
    };
    match e {
        Error::NotSquare { .. }
        | Error::TooFewStates(_)
        | Error::TargetOutOfRange { .. }
        | Error::NonStochastic { .. }
        | Error::InvalidGenerator { .. }
        | Error::InvalidInitial(_)
        | Error::DimensionMismatch { .. }
        | Error::TargetNotAccessible { .. } => EXIT_INPUT,
        Error::TargetNotAbsorbing(_)
        | Error::NotSkipFree { .. }
        | Error::ZeroSuperdiagonal { .. }
        | Error::NotErgodic(_)
        | Error::SingularSystem
        | Error::ThetaTooSmall { .. }
        | Error::EigenFailure(_)
        | Error::ImaginaryResidue { .. }
        | Error::PoleAtU(_)
        | Error::Horizon(_)
        | Error::TimeDomain { .. }
        | Error::InsufficientSamples(_) => EXIT_PRECONDITION,
        Error::NotStochasticLink { .. } | Error::MonotoneHypothesisFails(..) | Error::SeparationArgmin { .. } => {
            EXIT_HYPOTHESIS
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "ssd", version, about = "Exact hitting-time and strong stationary time laws of finite Markov chains")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a chain file and print its classification.
    Validate(ValidateArgs),
    /// Ordered eigenvalues, spectral polynomial checks and classification.
    Spectrum(ReportArgs),
    /// Link, dual kernel, mixture weights and intertwining residuals.
    Dual(ReportArgs),
    /// Exact law of the absorption time at the target.
    Absorption(ReportArgs),
    /// Exact law of the fastest strong stationary time, with separation.
    Sst(ReportArgs),
    /// Simulate coupled chain and dual paths.
    Simulate(MonteCarloArgs),
    /// Simulate and test the coupling against the exact law.
    Verify(MonteCarloArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Skipfree,
    General,
    Continuous,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Chain file, or `-` for standard input.
    pub file: String,
    /// Print the classification as JSON instead of one line of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Chain file, or `-` for standard input.
    pub file: String,
    /// Add an independent oracle column and the maximum deviation from it.
    #[arg(long)]
    pub oracle: bool,
    /// Last time reported (default: the 0.9999 quantile).
    #[arg(long)]
    pub t_max: Option<f64>,
    /// Grid points for continuous-time series.
    #[arg(long, default_value_t = 50)]
    pub points: usize,
    /// Allowed oracle deviation (default 1e-10 discrete, 1e-8 continuous).
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct MonteCarloArgs {
    /// Chain file, or `-` for standard input.
    pub file: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
    #[arg(long, env = "SSD_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Coupling to use (default: continuous for generators, skipfree for
    /// skip-free kernels started at 0, general otherwise).
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Worker threads for trace generation.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Step or event cap per trace.
    #[arg(long, default_value_t = 1_000_000)]
    pub horizon: u64,
    /// Significance level per gate.
    #[arg(long, default_value_t = 0.01)]
    pub alpha: f64,
    /// Include full paths in simulate output.
    #[arg(long)]
    pub paths: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

/// What a command produced: the text to print and whether its gates held.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub gates_pass: bool,
}

/// Runs a parsed command, returning the text for standard output (or the
/// error message) and the exit code.
pub fn run(cli: Cli) -> (Result<String, String>, i32) {
    match commands::dispatch(&cli.command) {
        Ok(out) => {
            let code = if out.gates_pass { 0 } else { EXIT_GATE };
            (Ok(out.text), code)
        }
        Err(e) => (Err(format!("error: {e}")), exit_code(&e)),
    }
}
