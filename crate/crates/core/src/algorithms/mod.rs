//! Iterative solvers built from warped resolvents and half-space cuts.
//!
//! - [`solve_weak`]: relaxed cut projections, weakly convergent.
//! - [`solve_strong`]: Haugazeau-anchored variant converging to the
//!   projection of the starting point onto the zero set.
//! - [`solve_fbf_memory`] and [`solve_tseng`]: forward-backward-forward
//!   schemes, with memory and additive perturbations for the former.
//! - [`solve_coupled`]: primal-dual solver for coupled inclusion systems.
//!
//! All of them are also available by name through [`SolverRegistry`].

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernels::KernelRef;
use crate::space::Vector;

mod coupled;
mod driver;
mod fbf;
mod policy;
mod registry;

pub use coupled::{
    build_kt_operator, solve_coupled, CoupledMode, CoupledProblem, DualBlock, KtForward,
    KuhnTuckerPoint, Link, PrimalBlock, StageSchedule,
};
pub use driver::{solve_strong, solve_strong_anchored, solve_weak};
pub use fbf::{solve_fbf_memory, solve_tseng, MapSchedule};
pub use policy::{apply_policy, History, PerturbationPolicy};
pub use registry::{CoupledSetup, InclusionProblem, Problem, Solver, SolverRegistry};

/// A real sequence given by a rule rather than an expression.
#[derive(Debug, Clone, PartialEq)]
pub enum Schedule {
    Constant(f64),
    /// `limit + (start − limit) · ratio^n`.
    Geometric { start: f64, ratio: f64, limit: f64 },
    /// Explicit values; the last one repeats.
    List(Vec<f64>),
}

impl Schedule {
    pub fn at(&self, n: usize) -> f64 {
        match self {
            Schedule::Constant(c) => *c,
            Schedule::Geometric { start, ratio, limit } => {
                limit + (start - limit) * ratio.powf(n as f64)
            }
            Schedule::List(v) => v[n.min(v.len() - 1)],
        }
    }

    /// Limit as `n → ∞`.
    pub fn limit(&self) -> f64 {
        match self {
            Schedule::Constant(c) => *c,
            Schedule::Geometric { start, ratio, limit } => {
                if ratio.abs() < 1.0 {
                    *limit
                } else if *ratio == 1.0 {
                    *start
                } else {
                    f64::NAN
                }
            }
            Schedule::List(v) => *v.last().expect("validated nonempty"),
        }
    }

    pub fn validate(&self, what: &str) -> Result<()> {
        match self {
            Schedule::Constant(c) if !c.is_finite() => Err(Error::NonFinite(what.to_string())),
            Schedule::Geometric { start, ratio, limit } => {
                if !(start.is_finite() && ratio.is_finite() && limit.is_finite()) {
                    return Err(Error::NonFinite(what.to_string()));
                }
                if ratio.abs() > 1.0 {
                    return Err(Error::config(format!("{what}: geometric ratio {ratio} is unbounded")));
                }
                Ok(())
            }
            Schedule::List(v) => {
                if v.is_empty() {
                    return Err(Error::config(format!("{what}: empty list")));
                }
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite(what.to_string()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Check `lower ≤ value_n ≤ upper` for `n < count`.
    pub(crate) fn check_range(&self, what: &str, lower: f64, upper: f64, count: usize) -> Result<()> {
        self.validate(what)?;
        let scale = [lower, upper].into_iter().filter(|b| b.is_finite()).fold(1.0, |m, b| b.abs().max(m));
        let slack = 1e-12 * scale;
        let span = match self {
            Schedule::Constant(_) => 1,
            Schedule::List(v) => v.len().min(count.max(1)),
            Schedule::Geometric { .. } => count.max(1),
        };
        for n in 0..span {
            let value = self.at(n);
            if value < lower - slack || value > upper + slack {
                return Err(Error::config(format!(
                    "{what}[{n}] = {value} outside [{lower}, {upper}]"
                )));
            }
        }
        Ok(())
    }
}

/// Source of the relaxation parameters `λ_n`.
#[derive(Debug, Clone, PartialEq)]
pub enum Relaxation {
    Schedule(Schedule),
    /// `λ_n = γ_n‖y_n*‖²/⟨x_n − y_n, y_n*⟩` when the denominator is positive,
    /// `ε` otherwise; turns the cut step with kernel `Id − γB` into Tseng's
    /// update.
    TsengImplied,
}

/// Solver parameters shared by all algorithms.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Floor for relaxations and step sizes.
    pub epsilon: f64,
    pub relaxation: Relaxation,
    /// Step sizes `γ_n`; `None` selects the algorithm's default.
    pub gamma: Option<Schedule>,
    pub max_iter: usize,
    pub tol_residual: f64,
    pub tol_step: f64,
    /// Known zeros whose distances to the iterates are logged.
    pub watch: Vec<Vector>,
    /// Consecutive non-moving iterations with large residual tolerated
    /// before giving up.
    pub stall_limit: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-3,
            relaxation: Relaxation::Schedule(Schedule::Constant(1.0)),
            gamma: None,
            max_iter: 10_000,
            tol_residual: 1e-8,
            tol_step: 1e-8,
            watch: Vec::new(),
            stall_limit: 50,
        }
    }
}

impl SolverConfig {
    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            return Err(Error::config(format!("epsilon must lie in ]0, 1[, got {}", self.epsilon)));
        }
        for (name, tol) in [("tol_residual", self.tol_residual), ("tol_step", self.tol_step)] {
            if !(tol.is_finite() && tol > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {tol}")));
            }
        }
        if let Relaxation::Schedule(s) = &self.relaxation {
            s.check_range("lambda", self.epsilon, 2.0 - self.epsilon, self.max_iter)?;
        }
        for z in &self.watch {
            crate::error::check_dim(dim, z.dim())?;
        }
        Ok(())
    }

    /// The step-size schedule, or `default` when none is configured;
    /// checked against `[lower, upper]`.
    pub(crate) fn gamma_or(&self, default: f64, lower: f64, upper: f64) -> Result<Schedule> {
        let s = self.gamma.clone().unwrap_or(Schedule::Constant(default));
        s.check_range("gamma", lower, upper, self.max_iter)?;
        Ok(s)
    }
}

/// Everything observed in one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub n: usize,
    pub x: Vector,
    pub x_tilde: Vector,
    pub y: Vector,
    pub y_star: Vector,
    pub gamma: f64,
    pub lambda: f64,
    /// `‖x̃_n − y_n‖`
    pub step_norm: f64,
    /// `‖y_n*‖`
    pub residual: f64,
    /// `⟨y_n − x_n, y_n*⟩`
    pub theta: f64,
    /// `‖y_n*‖²`
    pub sigma: f64,
    /// Step length along `y_n*`; zero when the cut is inactive.
    pub rho: f64,
    /// `‖x_n − z‖` for each watched zero `z`.
    pub fejer_gaps: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// The iterate stopped moving while the residual stayed large.
    Stalled,
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveReport {
    pub point: Vector,
    pub stop: StopReason,
    pub trace: Vec<IterationRecord>,
}

impl SolveReport {
    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn converged(&self) -> bool {
        self.stop == StopReason::Converged
    }

    /// Largest `‖x̃_n − x_n‖` over the last `k` iterations.
    pub fn perturbation_tail(&self, k: usize) -> f64 {
        let start = self.trace.len().saturating_sub(k);
        self.trace[start..]
            .iter()
            .map(|r| (&r.x_tilde - &r.x).norm())
            .fold(0.0, f64::max)
    }
}

/// `n ↦ K_n`, possibly depending on the step size `γ_n`.
#[derive(Clone)]
pub enum KernelSchedule {
    Fixed(KernelRef),
    Staged(Arc<dyn Fn(usize, f64) -> Result<KernelRef> + Send + Sync>),
}

impl KernelSchedule {
    pub fn staged<F>(f: F) -> Self
    where
        F: Fn(usize, f64) -> Result<KernelRef> + Send + Sync + 'static,
    {
        KernelSchedule::Staged(Arc::new(f))
    }

    pub fn at(&self, n: usize, gamma: f64) -> Result<KernelRef> {
        match self {
            KernelSchedule::Fixed(k) => Ok(k.clone()),
            KernelSchedule::Staged(f) => f(n, gamma),
        }
    }
}

impl fmt::Debug for KernelSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelSchedule::Fixed(k) => f.debug_tuple("Fixed").field(&k.name()).finish(),
            KernelSchedule::Staged(_) => f.write_str("Staged(..)"),
        }
    }
}
