mod commands;
mod config;

use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mfs_core::MfsError;

use crate::config::{CommonArgs, ProblemKind};

#[derive(Debug, Parser)]
#[command(name = "mfs", version, about = "Fractional Musielak-Sobolev verification suites and solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run property-verification suites.
    Verify(VerifyArgs),
    /// Mountain-pass solve of a built-in problem.
    Solve(SolveArgs),
    /// Minimize J(u) - <source, u> from several random starts.
    ConvexSolve(ConvexArgs),
    /// Audit the growth conditions on the reaction term.
    Audit(AuditArgs),
    /// Tabulate the numerical Young conjugate.
    ConjugateTable(TableArgs),
    /// Write plot-ready mesh data.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Suite id or `all`.
    #[arg(long)]
    pub suite: String,
    /// Pointwise samples per check.
    #[arg(long)]
    pub samples: Option<usize>,
    /// Random grid functions per field check.
    #[arg(long)]
    pub fields: Option<usize>,
    /// Bisection depth of the numerical conjugate.
    #[arg(long)]
    pub depth: Option<u32>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub problem: ProblemKind,
    #[arg(long)]
    pub max_iterations: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ConvexArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// CSV with header `x[,y],value` on the interior nodes.
    #[arg(long)]
    pub source: std::path::PathBuf,
    #[arg(long)]
    pub restarts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Threshold R; chosen from the samples when absent.
    #[arg(long)]
    pub radius: Option<f64>,
    /// Exponent of the witness Gamma(t) = |t|^gamma.
    #[arg(long)]
    pub gamma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, default_value_t = 1e-6)]
    pub t_min: f64,
    #[arg(long, default_value_t = 1e6)]
    pub t_max: f64,
    #[arg(long, default_value_t = 8)]
    pub per_decade: usize,
    #[arg(long)]
    pub depth: Option<u32>,
    /// First point of the pair, `x0,x1`; the centroid when absent.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub x: Option<Vec<f64>>,
    /// Second point of the pair; equal to `x` when absent.
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub y: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct ExportArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Grid function to re-export with its modulars and norms.
    #[arg(long)]
    pub input: Option<std::path::PathBuf>,
}

fn exit_code(err: &MfsError) -> u8 {
    match err {
        MfsError::Config(_) | MfsError::Usage(_) | MfsError::Domain(_) | MfsError::Io(_) => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Verify(a) => commands::verify(a),
        Command::Solve(a) => commands::solve(a),
        Command::ConvexSolve(a) => commands::convex(a),
        Command::Audit(a) => commands::audit(a),
        Command::ConjugateTable(a) => commands::conjugate_table(a),
        Command::Export(a) => commands::export(a),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
