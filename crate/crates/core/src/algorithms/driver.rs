//! The shared outer loop and the generic weak and strong solvers.

use super::policy::{evaluate, History};
use super::{
    IterationRecord, KernelSchedule, PerturbationPolicy, Relaxation, Schedule, SolveReport,
    SolverConfig, StopReason,
};
use crate::error::{check_dim, Error, Result};
use crate::fejer::{haugazeau_q, relaxed_projection_step, HaugazeauTriple};
use crate::kernels::{graph_point, MDecomposition};
use crate::operators::GraphPoint;
use crate::space::Vector;

/// Produces `(y_n, y_n*)` from `(n, γ_n, x̃_n)`.
pub(crate) type Oracle<'a> = dyn FnMut(usize, f64, &Vector) -> Result<(Vector, Vector)> + 'a;

/// Result of one update `x_n ↦ x_{n+1}`.
pub(crate) struct Step {
    pub next: Vector,
    pub theta: f64,
    pub sigma: f64,
    pub rho: f64,
}

/// How `x_{n+1}` is formed once the graph point is known.
pub(crate) enum Update<'a> {
    /// Relaxed projection onto the cut.
    Relaxed,
    /// Unrelaxed projection followed by the Haugazeau step towards `anchor`.
    Anchored(Vector),
    /// Caller-defined update from `(x_n, γ_n, λ_n, y_n, y_n*)`.
    Custom(&'a mut dyn FnMut(&Vector, f64, f64, &Vector, &Vector) -> Result<Step>),
}

/// Cut quantities `(θ, σ, ρ)` for the relaxed step.
pub(crate) fn cut_scalars(x: &Vector, y: &Vector, y_star: &Vector, lambda: f64) -> (f64, f64, f64) {
    let theta = (y - x).dot(y_star);
    let sigma = y_star.norm_squared();
    let rho = if theta < 0.0 { lambda * theta / sigma } else { 0.0 };
    (theta, sigma, rho)
}

fn implied_lambda(cfg: &SolverConfig, n: usize, gamma: f64, x: &Vector, y: &Vector, y_star: &Vector) -> f64 {
    match &cfg.relaxation {
        Relaxation::Schedule(s) => s.at(n),
        Relaxation::TsengImplied => {
            // lies in [ε, 2 − ε] in exact arithmetic when γβ ≤ 1 − ε; the
            // clamp only absorbs rounding once x − y is at noise level
            let d = (x - y).dot(y_star);
            if d > 0.0 {
                (gamma * y_star.norm_squared() / d).clamp(cfg.epsilon, 2.0 - cfg.epsilon)
            } else {
                cfg.epsilon
            }
        }
    }
}

/// The outer iteration shared by every solver.
pub(crate) fn drive(
    cfg: &SolverConfig,
    gamma: &Schedule,
    policy: &PerturbationPolicy,
    x0: Vector,
    oracle: &mut Oracle<'_>,
    mut update: Update<'_>,
) -> SolveReport {
    let mut history = History::new(x0.clone(), policy.depth());
    let mut x = x0;
    let mut trace = Vec::new();
    let mut stalls = 0;
    let fail = |x: Vector, trace, e| SolveReport {
        point: x,
        stop: StopReason::Failed(e),
        trace,
    };

    for n in 0..cfg.max_iter {
        let fejer_gaps = cfg.watch.iter().map(|z| (&x - z).norm()).collect();
        let x_tilde = evaluate(policy, &history, n);
        if !x_tilde.is_finite() {
            return fail(x, trace, Error::NonFinite("evaluation point".into()));
        }
        let g = gamma.at(n);
        let (y, y_star) = match oracle(n, g, &x_tilde) {
            Ok(p) => p,
            Err(e) => return fail(x, trace, e),
        };
        let lambda = implied_lambda(cfg, n, g, &x, &y, &y_star);
        let step = match &mut update {
            Update::Relaxed => relaxed(&x, &y, &y_star, lambda),
            Update::Anchored(anchor) => anchored(anchor, &x, &y, &y_star),
            Update::Custom(f) => f(&x, g, lambda, &y, &y_star),
        };
        let step = match step {
            Ok(s) => s,
            Err(e) => return fail(x, trace, e),
        };
        let residual = y_star.norm();
        let step_norm = (&x_tilde - &y).norm();
        if !(residual.is_finite() && step_norm.is_finite() && step.next.is_finite()) {
            return fail(x, trace, Error::NonFinite(format!("iteration {n}")));
        }
        let moved = step.next != x;
        trace.push(IterationRecord {
            n,
            x: x.clone(),
            x_tilde,
            y,
            y_star,
            gamma: g,
            lambda,
            step_norm,
            residual,
            theta: step.theta,
            sigma: step.sigma,
            rho: step.rho,
            fejer_gaps,
        });
        x = step.next;
        history.push(x.clone());

        if residual <= cfg.tol_residual && step_norm <= cfg.tol_step {
            return SolveReport {
                point: x,
                stop: StopReason::Converged,
                trace,
            };
        }
        stalls = if moved || residual <= cfg.tol_residual { 0 } else { stalls + 1 };
        if stalls >= cfg.stall_limit {
            return SolveReport {
                point: x,
                stop: StopReason::Stalled,
                trace,
            };
        }
    }
    SolveReport {
        point: x,
        stop: StopReason::MaxIterations,
        trace,
    }
}

fn relaxed(x: &Vector, y: &Vector, y_star: &Vector, lambda: f64) -> Result<Step> {
    let (theta, sigma, rho) = cut_scalars(x, y, y_star, lambda);
    let gp = GraphPoint::new(y.clone(), y_star.clone())?;
    let next = relaxed_projection_step(x, &gp, lambda)?;
    Ok(Step {
        next,
        theta,
        sigma,
        rho,
    })
}

fn anchored(anchor: &Vector, x: &Vector, y: &Vector, y_star: &Vector) -> Result<Step> {
    let half = relaxed(x, y, y_star, 1.0)?;
    let triple = HaugazeauTriple::new(anchor.clone(), x.clone(), half.next)?;
    let next = haugazeau_q(&triple)?;
    Ok(Step { next, ..half })
}

/// Checks shared by every entry point taking `M`, a kernel schedule and `x0`.
pub(crate) fn prepare(
    m: &MDecomposition,
    kernels: &KernelSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    x0: &Vector,
) -> Result<Schedule> {
    check_dim(m.dim(), x0.dim())?;
    if !x0.is_finite() {
        return Err(Error::NonFinite("starting point".into()));
    }
    cfg.validate(m.dim())?;
    policy.validate(m.dim())?;
    let gamma = cfg.gamma_or(1.0, cfg.epsilon, f64::INFINITY)?;
    if let KernelSchedule::Fixed(k) = kernels {
        check_dim(m.dim(), k.dim())?;
    }
    Ok(gamma)
}

fn kernel_oracle<'a>(m: &'a MDecomposition, kernels: &'a KernelSchedule) -> impl FnMut(usize, f64, &Vector) -> Result<(Vector, Vector)> + 'a {
    move |n, g, x_tilde| {
        let k = kernels.at(n, g)?;
        check_dim(m.dim(), k.dim())?;
        Ok(graph_point(m, k.as_ref(), g, x_tilde)?.into_parts())
    }
}

/// Relaxed cut projections `x_{n+1} = x_n + λ_n⟨y_n − x_n, y_n*⟩/‖y_n*‖² y_n*`
/// with `(y_n, y_n*)` the graph point of `K_n` at `x̃_n`.
///
/// Configuration errors are returned up front; failures during the run are
/// reported through [`StopReason::Failed`] together with the partial trace.
pub fn solve_weak(
    m: &MDecomposition,
    kernels: &KernelSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    x0: &Vector,
) -> Result<SolveReport> {
    let gamma = prepare(m, kernels, policy, cfg, x0)?;
    let mut oracle = kernel_oracle(m, kernels);
    Ok(drive(cfg, &gamma, policy, x0.clone(), &mut oracle, Update::Relaxed))
}

/// Haugazeau variant anchored at `x0`; approximates the projection of `x0`
/// onto the zero set.
pub fn solve_strong(
    m: &MDecomposition,
    kernels: &KernelSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    x0: &Vector,
) -> Result<SolveReport> {
    solve_strong_anchored(m, kernels, policy, cfg, x0, x0)
}

/// As [`solve_strong`] but with an anchor distinct from the starting point.
///
/// The convergence guarantee needs `anchor == x0`. Other anchors may make
/// the Haugazeau half-spaces disjoint, which ends the run with
/// [`Error::Infeasible`].
pub fn solve_strong_anchored(
    m: &MDecomposition,
    kernels: &KernelSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    x0: &Vector,
    anchor: &Vector,
) -> Result<SolveReport> {
    let gamma = prepare(m, kernels, policy, cfg, x0)?;
    check_dim(m.dim(), anchor.dim())?;
    let mut oracle = kernel_oracle(m, kernels);
    Ok(drive(
        cfg,
        &gamma,
        policy,
        x0.clone(),
        &mut oracle,
        Update::Anchored(anchor.clone()),
    ))
}
