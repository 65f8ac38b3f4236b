//! Forward-backward-forward schemes in their explicit form.

use std::fmt;
use std::sync::Arc;

use super::driver::{cut_scalars, drive, Step, Update};
use super::{PerturbationPolicy, Schedule, SolveReport, SolverConfig};
use crate::error::{check_dim, Error, Result};
use crate::kernels::{solve_base, BaseBlock};
use crate::operators::{resolvent, MapRef, SetRef};
use crate::space::Vector;

/// `n ↦ W_n`, strongly monotone with uniform constants.
#[derive(Clone)]
pub enum MapSchedule {
    /// A single operator; its own declared constants are used.
    Fixed(MapRef),
    /// Operators with declared uniform modulus `alpha` and Lipschitz bound.
    Staged {
        f: Arc<dyn Fn(usize) -> MapRef + Send + Sync>,
        alpha: f64,
        lipschitz: f64,
    },
}

impl MapSchedule {
    pub fn at(&self, n: usize) -> MapRef {
        match self {
            MapSchedule::Fixed(w) => w.clone(),
            MapSchedule::Staged { f, .. } => f(n),
        }
    }

    fn constants(&self) -> (f64, f64) {
        match self {
            MapSchedule::Fixed(w) => (w.strong_monotonicity(), w.lipschitz()),
            MapSchedule::Staged { alpha, lipschitz, .. } => (*alpha, *lipschitz),
        }
    }
}

impl fmt::Debug for MapSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapSchedule::Fixed(w) => f.debug_tuple("Fixed").field(&w.name()).finish(),
            MapSchedule::Staged { alpha, lipschitz, .. } => f
                .debug_struct("Staged")
                .field("alpha", alpha)
                .field("lipschitz", lipschitz)
                .finish(),
        }
    }
}

/// Default step inside `[ε, (α − ε)/β]`.
fn default_gamma(alpha: f64, beta: f64, epsilon: f64) -> f64 {
    if beta > 0.0 {
        (0.9 * (alpha - epsilon) / beta).max(epsilon)
    } else {
        1.0
    }
}

fn check_regime(alpha: f64, beta: f64, epsilon: f64) -> Result<()> {
    if !(alpha > 0.0) {
        return Err(Error::config(format!("W must be strongly monotone, modulus is {alpha}")));
    }
    if epsilon >= alpha / (beta + 1.0) {
        return Err(Error::config(format!(
            "epsilon = {epsilon} must be below alpha/(beta + 1) = {}",
            alpha / (beta + 1.0)
        )));
    }
    Ok(())
}

/// Name the bound a rejected step size violates.
fn cite_bound(e: Error, bound: &str) -> Error {
    match e {
        Error::Config(msg) => Error::Config(format!("{msg}; gamma must not exceed {bound}")),
        other => other,
    }
}

/// Checks run before the first forward-backward-forward iteration; returns
/// the step sizes and the uniform constants of `W`.
pub(crate) fn fbf_setup(
    a: &SetRef,
    b: &MapRef,
    w: &MapSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    x0: &Vector,
) -> Result<(Schedule, f64, f64)> {
    let dim = a.dim();
    check_dim(dim, b.dim())?;
    check_dim(dim, x0.dim())?;
    if !b.is_monotone() {
        return Err(Error::config(format!("forward operator `{}` is not monotone", b.name())));
    }
    cfg.validate(dim)?;
    policy.validate(dim)?;
    let (alpha, w_lip) = w.constants();
    let beta = b.lipschitz();
    let eps = cfg.epsilon;
    check_regime(alpha, beta, eps)?;
    let upper = if beta > 0.0 { (alpha - eps) / beta } else { f64::INFINITY };
    let gamma = cfg
        .gamma_or(default_gamma(alpha, beta, eps), eps, upper)
        .map_err(|e| cite_bound(e, "(alpha - epsilon)/beta"))?;
    Ok((gamma, alpha, w_lip))
}

/// Forward-backward-forward splitting for `0 ∈ Ax + Bx` with memory and
/// additive perturbations:
///
/// ```text
/// x̃ = e_n + Σ_j μ_{n,j} x_j
/// v* = W_n x̃ − γ_n B x̃
/// y  = (W_n + γ_n A)^{-1} v*
/// y* = γ_n^{-1}(v* − W_n y) + B y
/// ```
///
/// followed by the relaxed cut step.
pub fn solve_fbf_memory(
    a: &SetRef,
    b: &MapRef,
    w: &MapSchedule,
    policy: &PerturbationPolicy,
    cfg: &SolverConfig,
    x0: &Vector,
) -> Result<SolveReport> {
    let dim = a.dim();
    let (gamma, alpha, w_lip) = fbf_setup(a, b, w, policy, cfg, x0)?;
    let mut oracle = |n: usize, g: f64, x_tilde: &Vector| -> Result<(Vector, Vector)> {
        let wn = w.at(n);
        check_dim(dim, wn.dim())?;
        if wn.strong_monotonicity() < alpha * (1.0 - 1e-12) || wn.lipschitz() > w_lip * (1.0 + 1e-12) {
            return Err(Error::config(format!("W at iteration {n} violates the declared constants")));
        }
        let v_star = wn.apply(x_tilde).add_scaled(-g, &b.apply(x_tilde));
        let base = [BaseBlock::for_map(wn.clone(), 1.0)];
        let y = solve_base(&base, g, a.as_ref(), &v_star, x_tilde)?;
        let y_star = (&v_star - wn.apply(&y)).scale(1.0 / g) + b.apply(&y);
        Ok((y, y_star))
    };
    Ok(drive(cfg, &gamma, policy, x0.clone(), &mut oracle, Update::Relaxed))
}

/// Checks run before the first Tseng iteration.
pub(crate) fn tseng_setup(a: &SetRef, b: &MapRef, cfg: &SolverConfig, x0: &Vector) -> Result<(SolverConfig, Schedule)> {
    let dim = a.dim();
    check_dim(dim, b.dim())?;
    check_dim(dim, x0.dim())?;
    if !b.is_monotone() {
        return Err(Error::config(format!("forward operator `{}` is not monotone", b.name())));
    }
    let cfg = SolverConfig {
        relaxation: super::Relaxation::TsengImplied,
        ..cfg.clone()
    };
    cfg.validate(dim)?;
    let beta = b.lipschitz();
    let eps = cfg.epsilon;
    check_regime(1.0, beta, eps)?;
    let upper = if beta > 0.0 { (1.0 - eps) / beta } else { f64::INFINITY };
    let gamma = cfg
        .gamma_or(default_gamma(1.0, beta, eps), eps, upper)
        .map_err(|e| cite_bound(e, "(1 - epsilon)/beta"))?;
    Ok((cfg, gamma))
}

/// Tseng's iteration `v* = γ_n B x_n`, `y_n = J_{γ_n A}(x_n − v*)`,
/// `x_{n+1} = y_n − γ_n B y_n + v*`.
///
/// The trace reports `y_n* = γ_n^{-1}(x_n − v* − y_n + γ_n B y_n)` and the
/// relaxation `γ_n‖y_n*‖²/⟨x_n − y_n, y_n*⟩` under which the cut step
/// reproduces the update; the relaxation setting of `cfg` is ignored.
pub fn solve_tseng(a: &SetRef, b: &MapRef, cfg: &SolverConfig, x0: &Vector) -> Result<SolveReport> {
    let (cfg, gamma) = tseng_setup(a, b, cfg, x0)?;
    let mut oracle = |_n: usize, g: f64, x: &Vector| -> Result<(Vector, Vector)> {
        let v_star = b.apply(x).scale(g);
        let y = resolvent(a.as_ref(), g, &(x - &v_star))?;
        let y_star = (x - &v_star - &y).add_scaled(g, &b.apply(&y)).scale(1.0 / g);
        Ok((y, y_star))
    };
    let mut step = |x: &Vector, g: f64, lambda: f64, y: &Vector, y_star: &Vector| -> Result<Step> {
        let (theta, sigma, rho) = cut_scalars(x, y, y_star, lambda);
        let v_star = b.apply(x).scale(g);
        let next = y.add_scaled(-g, &b.apply(y)) + v_star;
        Ok(Step {
            next,
            theta,
            sigma,
            rho,
        })
    };
    Ok(drive(
        &cfg,
        &gamma,
        &PerturbationPolicy::None,
        x0.clone(),
        &mut oracle,
        Update::Custom(&mut step),
    ))
}
