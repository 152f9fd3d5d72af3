//! Command-line front end: reads a JSON manifest and runs curvature listings,
//! verification suites and transport experiments on it.
//!
//! [`run`] does all the work and returns the output instead of printing it,
//! so tests can drive the commands in-process.

pub mod commands;
pub mod manifest;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Process exit codes.
pub mod exit {
    pub const PASS: u8 = 0;
    pub const FAIL: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const DOMAIN: u8 = 3;
    pub const PRECONDITION: u8 = 4;
}

#[derive(Debug, Parser)]
#[command(name = "nullfield", version, about = "Verify parallel null fields and curvature identities of 4D metrics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the nonzero Christoffel, Riemann and Ricci components and the scalar curvature.
    Curvature(CurvatureArgs),
    /// Run a verification check, or every applicable one with `--suite all`.
    Check(CheckArgs),
    /// Parallel-transport a vector along a curve.
    Transport(TransportArgs),
    /// List the built-in metric families and their inputs.
    Catalog(CatalogArgs),
}

/// Overrides for the manifest's sampling settings.
#[derive(Debug, Args, Clone, Default)]
pub struct SamplingArgs {
    /// Sample points per check.
    #[arg(long)]
    pub points: Option<usize>,
    /// Tolerance on the residual.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Master seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct CurvatureArgs {
    pub manifest: PathBuf,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CheckArgs {
    pub manifest: PathBuf,
    /// Check name, or `all` for every check that applies to the manifest.
    #[arg(long, default_value = "all")]
    pub suite: String,
    #[command(flatten)]
    pub sampling: SamplingArgs,
    /// One JSON report per line.
    #[arg(long)]
    pub json: bool,
    /// Worker threads; 0 uses one per core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Args)]
pub struct TransportArgs {
    pub manifest: PathBuf,
    /// Curve as four coordinate expressions in `s`, `s` running over [0, 1].
    #[arg(long, num_args = 4, value_names = ["X0", "X1", "X2", "X3"], allow_hyphen_values = true,
          conflicts_with = "rectangle", required_unless_present = "rectangle")]
    pub curve: Option<Vec<String>>,
    /// The `--curve` is a closed loop.
    #[arg(long, requires = "curve")]
    pub closed: bool,
    /// Coordinate rectangle loop `A,B,DA,DB`: sides `DA` along coordinate A and `DB` along B.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rectangle: Option<Vec<f64>>,
    /// Starting corner of `--rectangle`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "rectangle")]
    pub corner: Option<Vec<f64>>,
    /// Initial vector `v0,v1,v2,v3`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub vector: Vec<f64>,
    /// RK4 steps per curve segment.
    #[arg(long, default_value_t = 1024)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[arg(long)]
    pub json: bool,
}

/// What a command printed and how the process should exit.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Outcome {
    pub stdout: String,
    pub stderr: String,
    pub code: u8,
}

impl Outcome {
    pub fn ok(stdout: String, code: u8) -> Self {
        Outcome {
            stdout,
            stderr: String::new(),
            code,
        }
    }

    pub fn error(code: u8, msg: impl std::fmt::Display) -> Self {
        Outcome {
            stdout: String::new(),
            stderr: format!("error: {msg}\n"),
            code,
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli.command),
        Err(e) => {
            let text = e.render().to_string();
            if e.use_stderr() {
                Outcome {
                    stdout: String::new(),
                    stderr: text,
                    code: exit::USAGE,
                }
            } else {
                Outcome::ok(text, exit::PASS)
            }
        }
    }
}

pub fn execute(command: &Command) -> Outcome {
    match command {
        Command::Curvature(args) => commands::curvature(args),
        Command::Check(args) => commands::check(args),
        Command::Transport(args) => commands::transport(args),
        Command::Catalog(args) => commands::catalog(args),
    }
}
