mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use spt_core::solvers::Method;

/// Minimum SNR of finite-blocklength short packets, and resource allocation
/// built on it.
#[derive(Debug, Parser)]
#[command(name = "spt", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve for the minimum SNR at one point.
    Solve(SolveArgs),
    /// Trace several methods to a common reference root.
    Compare(CompareArgs),
    /// Convexity certificate and convergence factor for a blocklength.
    Analyze(AnalyzeArgs),
    /// Run a resource-allocation scenario.
    App(AppArgs),
    /// Solve a grid of points in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    /// Write here instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// Packet size in bits.
    #[arg(long, allow_negative_numbers = true)]
    pub n: f64,
    /// Blocklength in channel uses.
    #[arg(long, allow_negative_numbers = true)]
    pub m: f64,
    /// Block error rate.
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    #[arg(long, default_value = "ear")]
    pub method: Method,
    /// Relative stopping tolerance.
    #[arg(long, allow_negative_numbers = true, env = "SPT_TOL", default_value_t = 1e-10)]
    pub tol: f64,
    /// Iteration cap for `ear` and `fixed_point`.
    #[arg(long)]
    pub max_iter: Option<usize>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long, allow_negative_numbers = true, default_value_t = 320.0)]
    pub n: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1000.0)]
    pub m: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-5)]
    pub eps: f64,
    #[arg(long, value_delimiter = ',', default_value = "ear,bisection,fixed_point")]
    pub methods: Vec<Method>,
    #[arg(long, allow_negative_numbers = true, env = "SPT_TOL", default_value_t = 1e-15)]
    pub tol: f64,
    /// Absolute error at which iterations and flops are summarized.
    #[arg(long, allow_negative_numbers = true, default_value_t = 1e-10)]
    pub target: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub m: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub eps: f64,
    /// Packet size at whose minimum SNR `g1` is evaluated.
    #[arg(long, allow_negative_numbers = true)]
    pub n: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AppArgs {
    /// Scenario JSON file, or `-` for standard input.
    #[arg(long)]
    pub scenario: String,
    /// Also run the exhaustive grid oracle and report the gap.
    #[arg(long)]
    pub oracle: bool,
    #[arg(long, default_value_t = 400, requires = "oracle")]
    pub grid_steps: usize,
    /// Round packet sizes to whole bits after solving.
    #[arg(long)]
    pub integer: bool,
    /// Relative stopping tolerance of the MM loop.
    #[arg(long, allow_negative_numbers = true)]
    pub mm_tol: Option<f64>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Comma-separated packet sizes.
    #[arg(long, allow_negative_numbers = true, value_delimiter = ',', required = true)]
    pub n: Vec<f64>,
    #[arg(long, allow_negative_numbers = true, value_delimiter = ',', required = true)]
    pub m: Vec<f64>,
    #[arg(long, allow_negative_numbers = true, value_delimiter = ',', required = true)]
    pub eps: Vec<f64>,
    #[arg(long, default_value = "ear")]
    pub method: Method,
    #[arg(long, allow_negative_numbers = true, env = "SPT_TOL", default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub out: OutputArgs,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { commands::EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let run = match cli.command {
        Command::Solve(a) => commands::solve(&a),
        Command::Compare(a) => commands::compare(&a),
        Command::Analyze(a) => commands::analyze(&a),
        Command::App(a) => commands::app(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match run {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
