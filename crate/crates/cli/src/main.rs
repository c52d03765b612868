//! `lipheat` command-line driver.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or invalid configuration.
    Usage(String),
    Io(String),
    Core(lipheat::Error),
    /// A checked property failed; the artifacts were still written.
    Assertion(String),
}

impl From<lipheat::Error> for CliError {
    fn from(e: lipheat::Error) -> Self {
        match e {
            lipheat::Error::Config(_) | lipheat::Error::Expression(_) => CliError::Usage(e.to_string()),
            e => CliError::Core(e),
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(s) => write!(f, "usage error: {s}"),
            CliError::Io(s) => write!(f, "i/o error: {s}"),
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Assertion(s) => write!(f, "check failed: {s}"),
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "lipheat", version, about = "Heat kernel and Kato-class experiments on Lipschitz manifolds")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    /// Manifold configuration (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; 0 lets the pool decide.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Replace a named tolerance, e.g. `mc_sigma=4`.
    #[arg(long = "tol-override", global = true, value_name = "KEY=VAL")]
    pub tol_override: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Export the mesh as plain text.
    Mesh,
    /// First Dirichlet eigenvalue with the far-field cutoff.
    Eig,
    /// Faber–Krahn sweep over random domains in a ball.
    Fk(FkArgs),
    /// Euclidean radius and truncated radius field.
    Radius(RadiusArgs),
    /// Heat kernel columns on a geometric time grid.
    Heatkernel(HeatArgs),
    /// Checks on stored heat kernels.
    Verify(VerifyArgs),
    /// Kato integral of a measure.
    Kato(KatoArgs),
    /// Feynman–Kac Monte Carlo against the form semigroup.
    Fkmc(FkmcArgs),
    /// Markdown summary of CSV outputs.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct FkArgs {
    /// Ball center, comma separated chart coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub x: Vec<f64>,
    #[arg(long)]
    pub r: f64,
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
}

#[derive(Debug, Clone, Copy, Args)]
pub struct RadiusArgs {
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
    #[arg(long, default_value_t = 1.0)]
    pub eps1: f64,
    #[arg(long, default_value_t = 2.0)]
    pub eps2: f64,
}

#[derive(Debug, Args)]
pub struct HeatArgs {
    #[arg(long, default_value_t = 8)]
    pub sources: usize,
    #[arg(long, default_value_t = 1e-3)]
    pub tmin: f64,
    #[arg(long, default_value_t = 1.0)]
    pub tmax: f64,
    #[arg(long = "K", default_value_t = 11)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum VerifyKind {
    Decoupled,
    Controlpair,
    Gaussian,
    Meanvalue,
    Mass,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub kind: VerifyKind,
    /// Heat kernel CSV written by `heatkernel`.
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Radius CSV written by `radius`.
    #[arg(long)]
    pub radius: Option<PathBuf>,
    #[command(flatten)]
    pub field: RadiusArgs,
    /// ε of the Gaussian exponent `d²/((4+ε)t)`.
    #[arg(long, default_value_t = 1.0)]
    pub eps: f64,
}

#[derive(Debug, Args)]
pub struct KatoArgs {
    /// Measure file with a `[measure]` table.
    #[arg(long)]
    pub measure: PathBuf,
    /// Times at which to evaluate the Kato integral.
    #[arg(long, value_delimiter = ',', required = true)]
    pub t: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub sources: usize,
    /// Smallest grid time; defaults to min(t)/16.
    #[arg(long)]
    pub tmin: Option<f64>,
    #[arg(long = "K", default_value_t = 9)]
    pub k: usize,
    #[command(flatten)]
    pub field: RadiusArgs,
}

#[derive(Debug, Args)]
pub struct FkmcArgs {
    /// Potential; zero if omitted.
    #[arg(long)]
    pub measure: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 0.1)]
    pub t: f64,
    #[arg(long, default_value_t = 3)]
    pub starts: usize,
    /// Time steps of the form-based reference solve.
    #[arg(long, default_value_t = 512)]
    pub steps: usize,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long = "in", num_args = 1.., required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long, default_value_t = 20)]
    pub max_rows: usize,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("lipheat: {e}");
            ExitCode::from(match e {
                CliError::Assertion(_) => 2,
                _ => 1,
            })
        }
    }
}
