//! Command-line front end: configuration ingestion, command dispatch and
//! result serialization.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub mod commands;
pub mod config;
pub mod output;

pub use config::{Format, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {0}")]
    Schema(String),
    #[error("numerical failure: {0}")]
    Numeric(#[from] thermofrac_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Schema(_) => 2,
            CliError::Numeric(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

/// Exit status when a verification step fails.
pub const EXIT_VERIFICATION: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "thermofrac", version, about = "Pressure, Bowen dimension and Lyapunov spectra of random conformal GDMS")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub opts: GlobalOpts,
}

#[derive(Debug, Subcommand, Clone, PartialEq)]
pub enum Command {
    /// Finite primitivity witness of the working alphabet.
    Primitivity,
    /// Pressure estimates per grid point and rung.
    Pressure,
    /// Pressure curve and Bowen's root.
    Dimension,
    /// Legendre-transform Lyapunov spectrum and T(q).
    Spectrum,
    /// Cylinder masses of the conformal measure.
    Measures,
    /// Coded points of the limit set.
    Limitset,
    /// Oracle cross-checks; exits with status 4 on failure.
    Verify,
    /// The non-evenly-varying worked example and its P vs P_RU comparison.
    ExamplePaper {
        /// Materialized edges before the closed-form tail.
        #[arg(long, default_value_t = 1024)]
        cutoff: usize,
    },
}

#[derive(Debug, Args, Clone, Default)]
pub struct GlobalOpts {
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Root seed; every random subsystem derives its own stream from it.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s_min: Option<f64>,
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub s_max: Option<f64>,
    #[arg(long, global = true)]
    pub s_steps: Option<usize>,
    #[arg(long, global = true)]
    pub beta_min: Option<f64>,
    #[arg(long, global = true)]
    pub beta_max: Option<f64>,
    #[arg(long, global = true)]
    pub beta_steps: Option<usize>,
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Comma-separated ladder rung sizes.
    #[arg(long, global = true, value_delimiter = ',')]
    pub rungs: Option<Vec<usize>>,
}

/// Result of a command: the human-readable summary and whether every
/// verification it performed passed.
#[derive(Debug, Clone)]
pub struct Outcome {
    pub summary: String,
    pub passed: bool,
}

/// Runs a parsed command line, on a dedicated pool when `--workers` is given.
pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match cli.opts.workers {
        Some(0) => Err(CliError::Schema("--workers must be positive".into())),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            pool.install(|| commands::dispatch(cli))
        }
        None => commands::dispatch(cli),
    }
}

/// Parses `args`, runs and maps the result to an exit status.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.passed {
                0
            } else {
                EXIT_VERIFICATION
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
