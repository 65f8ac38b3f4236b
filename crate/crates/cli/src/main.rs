use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use warpres_cli::file::{RelaxSpec, ScheduleSpec};
use warpres_cli::{generate, read_problem, report, run, to_toml, Artifacts, CliError, Exit, Overrides};

/// Solve monotone inclusions described in a problem file.
///
/// Exit codes: 0 converged, 1 invalid input, 2 iteration limit, 3 infeasible
/// Haugazeau step, 4 numerical failure, 5 stalled, 6 I/O error,
/// 7 converged away from the declared solution.
#[derive(Debug, Parser)]
#[command(name = "warpres", version, args_conflicts_with_subcommands = true)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Problem file (TOML).
    #[arg(long)]
    problem: Option<PathBuf>,
    /// Solver: weak, strong, fbf, tseng or coupled.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    tol_residual: Option<f64>,
    #[arg(long)]
    tol_step: Option<f64>,
    /// Constant relaxation, or `tseng` for the implied one.
    #[arg(long)]
    relax: Option<String>,
    /// CSV trace output.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// JSON summary output.
    #[arg(long)]
    summary: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a random box-constrained problem with a known solution.
    Generate {
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 4)]
        dim: usize,
        /// Output file; stdout when absent.
        #[arg(long)]
        output: Option<PathBuf>,
    },
}

fn relax(text: &str) -> Result<RelaxSpec, CliError> {
    if text == "tseng" {
        return Ok(RelaxSpec::Named(text.to_string()));
    }
    text.parse::<f64>()
        .map(|x| RelaxSpec::Schedule(ScheduleSpec::Constant(x)))
        .map_err(|_| CliError::Invalid(format!("--relax expects a number or `tseng`, got `{text}`")))
}

fn solve(args: RunArgs) -> Result<Exit, CliError> {
    let path = args
        .problem
        .ok_or_else(|| CliError::Invalid("--problem is required".to_string()))?;
    let file = read_problem(&path)?;
    let overrides = Overrides {
        algo: args.algo,
        max_iter: args.max_iter,
        tol_residual: args.tol_residual,
        tol_step: args.tol_step,
        relax: args.relax.as_deref().map(relax).transpose()?,
    };
    let artifacts = Artifacts {
        trace: args.trace,
        summary: args.summary,
    };
    let outcome = run(&file, &overrides, &artifacts)?;
    println!("{}", report::describe(&outcome));
    Ok(outcome.exit)
}

fn emit(seed: u64, dim: usize, output: Option<PathBuf>) -> Result<Exit, CliError> {
    if dim == 0 {
        return Err(CliError::Invalid("--dim must be positive".to_string()));
    }
    let text = to_toml(&generate::box_vi(seed, dim))?;
    match output {
        Some(path) => std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?,
        None => print!("{text}"),
    }
    Ok(Exit::Converged)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { Exit::Invalid.code() } else { 0 });
        }
    };
    let result = match cli.command {
        Some(Command::Generate { seed, dim, output }) => emit(seed, dim, output),
        None => solve(cli.run),
    };
    match result {
        Ok(exit) => ExitCode::from(exit.code()),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit().code())
        }
    }
}
