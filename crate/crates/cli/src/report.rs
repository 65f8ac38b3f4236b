//! Running an assembled problem and writing its trace and summary.

use std::path::Path;

use serde::Serialize;
use warpres::algorithms::{Problem, SolveReport, SolverRegistry, StopReason};
use warpres::Vector;

use crate::assemble::Assembled;
use crate::error::{CliError, Exit};

/// Leading trace columns; one `fejer_gap_<k>` column follows per watched zero.
pub const TRACE_COLUMNS: [&str; 6] = ["n", "residual", "step_norm", "theta", "sigma", "rho"];

#[derive(Debug, Clone)]
pub struct Outcome {
    /// `None` when the solver refused to start.
    pub report: Option<SolveReport>,
    /// Failure before or during the iteration.
    pub error: Option<warpres::Error>,
    pub solution_error: Option<f64>,
    pub exit: Exit,
}

pub fn execute(a: &Assembled) -> Result<Outcome, CliError> {
    let registry = SolverRegistry::standard();
    let solver = registry.get(&a.algo)?;
    let report = match solver.solve(&a.problem, &a.cfg) {
        Ok(r) => r,
        Err(e) => {
            return Ok(Outcome {
                report: None,
                exit: Exit::from_class(e.class()),
                error: Some(e),
                solution_error: None,
            })
        }
    };
    let solution_error = a.solution.as_ref().map(|(z, _)| (&report.point - z).norm());
    let (exit, error) = match &report.stop {
        StopReason::Converged => match (&a.solution, solution_error) {
            (Some((_, tol)), Some(err)) if !(err <= *tol) => (Exit::SolutionMismatch, None),
            _ => (Exit::Converged, None),
        },
        StopReason::MaxIterations => (Exit::MaxIterations, None),
        StopReason::Stalled => (Exit::Stalled, None),
        StopReason::Failed(e) => (Exit::from_class(e.class()), Some(e.clone())),
    };
    Ok(Outcome {
        report: Some(report),
        error,
        solution_error,
        exit,
    })
}

/// Floats are written in shortest round-trip exponent form, so reruns are
/// byte-identical and values parse back exactly.
fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn write_trace(path: &Path, outcome: &Outcome, watched: usize) -> Result<(), CliError> {
    let io = |e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(e) => CliError::io(path, e),
        other => CliError::Invalid(format!("{}: {other:?}", path.display())),
    };
    let mut w = csv::Writer::from_path(path).map_err(io)?;
    let header: Vec<String> = TRACE_COLUMNS
        .iter()
        .map(|c| c.to_string())
        .chain((0..watched).map(|k| format!("fejer_gap_{k}")))
        .collect();
    w.write_record(&header).map_err(io)?;
    for rec in outcome.report.iter().flat_map(|r| &r.trace) {
        let mut row = vec![
            rec.n.to_string(),
            num(rec.residual),
            num(rec.step_norm),
            num(rec.theta),
            num(rec.sigma),
            num(rec.rho),
        ];
        row.extend(rec.fejer_gaps.iter().map(|g| num(*g)));
        w.write_record(&row).map_err(io)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Serialize)]
struct CoupledParts {
    x: Vec<f64>,
    y: Vec<f64>,
    v_star: Vec<f64>,
}

#[derive(Debug, Serialize)]
struct Summary {
    algo: String,
    stop: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    exit_code: u8,
    iterations: usize,
    point: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    coupled: Option<CoupledParts>,
    #[serde(skip_serializing_if = "Option::is_none")]
    residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_norm: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    solution_error: Option<f64>,
}

fn stop_name(outcome: &Outcome) -> &'static str {
    match outcome.report.as_ref().map(|r| &r.stop) {
        Some(StopReason::Converged) if outcome.exit == Exit::SolutionMismatch => "solution_mismatch",
        Some(StopReason::Converged) => "converged",
        Some(StopReason::MaxIterations) => "max_iterations",
        Some(StopReason::Stalled) => "stalled",
        Some(StopReason::Failed(_)) => "failed",
        None => "rejected",
    }
}

fn summary(a: &Assembled, outcome: &Outcome) -> Summary {
    let point: Vector = outcome.report.as_ref().map_or_else(|| a.start(), |r| r.point.clone());
    let last = outcome.report.as_ref().and_then(|r| r.trace.last());
    let coupled = match &a.problem {
        Problem::Coupled(s) => s.problem.split(&point).ok().map(|kt| CoupledParts {
            x: kt.x.flatten().to_vec(),
            y: kt.y.flatten().to_vec(),
            v_star: kt.v_star.flatten().to_vec(),
        }),
        Problem::Inclusion(_) => None,
    };
    Summary {
        algo: a.algo.clone(),
        stop: stop_name(outcome),
        error: outcome.error.as_ref().map(|e| e.to_string()),
        exit_code: outcome.exit.code(),
        iterations: outcome.report.as_ref().map_or(0, |r| r.iterations()),
        point: point.to_vec(),
        coupled,
        residual: last.map(|r| r.residual),
        step_norm: last.map(|r| r.step_norm),
        solution_error: outcome.solution_error,
    }
}

pub fn write_summary(path: &Path, a: &Assembled, outcome: &Outcome) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(&summary(a, outcome))
        .map_err(|e| CliError::Invalid(format!("cannot encode summary: {e}")))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

/// One line for the terminal.
pub fn describe(outcome: &Outcome) -> String {
    let iterations = outcome.report.as_ref().map_or(0, |r| r.iterations());
    let mut line = format!("{} after {iterations} iterations", stop_name(outcome));
    if let Some(r) = outcome.report.as_ref().and_then(|r| r.trace.last()) {
        line.push_str(&format!(", residual {:e}", r.residual));
    }
    if let Some(e) = outcome.solution_error {
        line.push_str(&format!(", distance to solution {e:e}"));
    }
    if let Some(e) = &outcome.error {
        line.push_str(&format!(": {e}"));
    }
    line
}
