//! Batch front end for the warpres solvers: read a problem file, resolve it
//! against the operator, kernel and solver catalogs, run, and write a CSV
//! trace and a JSON summary.
//!
//! The file format is described in `PROBLEM_FORMAT.md` next to this crate.

pub mod assemble;
pub mod error;
pub mod file;
pub mod generate;
pub mod report;

use std::path::{Path, PathBuf};

pub use assemble::{assemble, Assembled, Overrides};
pub use error::{CliError, Exit};
pub use file::{from_toml, read_problem, to_toml, ProblemFile};
pub use report::{execute, Outcome};

/// Read a problem file and run every check that does not need an iteration.
pub fn parse_problem(path: &Path) -> Result<ProblemFile, CliError> {
    let file = read_problem(path)?;
    assemble(&file)?;
    Ok(file)
}

/// Where to put the run's artifacts.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
}

/// Apply the overrides, validate, solve and write the artifacts.
pub fn run(file: &ProblemFile, overrides: &Overrides, artifacts: &Artifacts) -> Result<Outcome, CliError> {
    let mut file = file.clone();
    overrides.apply(&mut file);
    let assembled = assemble(&file)?;
    let outcome = execute(&assembled)?;
    if let Some(path) = &artifacts.trace {
        report::write_trace(path, &outcome, assembled.cfg.watch.len())?;
    }
    if let Some(path) = &artifacts.summary {
        report::write_summary(path, &assembled, &outcome)?;
    }
    Ok(outcome)
}
