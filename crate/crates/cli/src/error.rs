use std::path::Path;

use thiserror::Error;
use warpres::ErrorClass;

/// Process exit codes. Every way a run can end maps to exactly one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exit {
    /// Tolerances met, and the known solution matched if one was given.
    Converged = 0,
    /// Bad flags, malformed file, unknown names, dimension or regime errors.
    Invalid = 1,
    MaxIterations = 2,
    /// Empty Haugazeau intersection.
    Infeasible = 3,
    /// Inner solve failure, singular system or non-finite iterate.
    Numerical = 4,
    /// Iterates stopped moving while the residual stayed large.
    Stalled = 5,
    /// A file could not be read or written.
    Io = 6,
    /// Tolerances met but the final point is farther than `tolerance` from
    /// the declared solution.
    SolutionMismatch = 7,
}

impl Exit {
    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_class(class: ErrorClass) -> Exit {
        match class {
            ErrorClass::Invalid => Exit::Invalid,
            ErrorClass::Infeasible => Exit::Infeasible,
            ErrorClass::Numerical => Exit::Numerical,
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },

    #[error("{origin}:{line}:{column}: {message}")]
    Parse {
        origin: String,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("{0}")]
    Invalid(String),

    #[error(transparent)]
    Solver(#[from] warpres::Error),
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit(&self) -> Exit {
        match self {
            CliError::Io { .. } => Exit::Io,
            CliError::Parse { .. } | CliError::Invalid(_) => Exit::Invalid,
            CliError::Solver(e) => Exit::from_class(e.class()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_failure_has_a_distinct_code() {
        let all = [
            Exit::Converged,
            Exit::Invalid,
            Exit::MaxIterations,
            Exit::Infeasible,
            Exit::Numerical,
            Exit::Stalled,
            Exit::Io,
            Exit::SolutionMismatch,
        ];
        let mut codes: Vec<u8> = all.iter().map(|e| e.code()).collect();
        codes.dedup();
        assert_eq!(codes, (0..8).collect::<Vec<u8>>());

        let numerical = warpres::Error::InnerSolve {
            iterations: 3,
            residual: 1.0,
        };
        assert_eq!(CliError::from(numerical).exit(), Exit::Numerical);
        let infeasible = warpres::Error::Infeasible { chi: -1.0, rho: 0.0 };
        assert_eq!(CliError::from(infeasible).exit(), Exit::Infeasible);
        assert_eq!(CliError::from(warpres::Error::NonFinite("x".into())).exit(), Exit::Numerical);
        assert_eq!(CliError::Invalid("bad".into()).exit(), Exit::Invalid);
    }
}
