//! Kernel for coupled systems of primal and dual inclusions.

use super::{BaseBlock, Folded, Kernel};
use crate::algorithms::CoupledProblem;
use crate::error::{check_dim, Error, Result};
use crate::operators::{AffineForm, MapRef};
use crate::space::Vector;

/// Stage-dependent data of one iteration: the operators `F_i`, `W_j` and
/// step sizes `γ_i`, `τ_j`.
#[derive(Debug, Clone)]
pub struct CoupledStage {
    pub f: Vec<MapRef>,
    pub w: Vec<MapRef>,
    pub gamma: Vec<f64>,
    pub tau: Vec<f64>,
}

/// `(x, y, v*) ↦ ((γ_i^{-1}F_i x_i − C_i x_i)_i − L*v*,
/// (τ_j^{-1}W_j y_j − D_j y_j)_j + v*, Lx − y + v*)`
/// on `𝒴 × 𝒵 × 𝒵`.
///
/// Its base is the block diagonal `(γ_i^{-1}F_i, τ_j^{-1}W_j, Id)` and its
/// folded forward term is the single-valued part of the Kuhn–Tucker
/// operator, so with unit warped step the warped resolvent splits into
/// independent per-block resolvents.
#[derive(Debug, Clone)]
pub struct CoupledKernel {
    base: Vec<BaseBlock>,
    folded: Folded,
    alpha: f64,
    lipschitz: f64,
    dim: usize,
}

fn in_range(value: f64, lower: f64, upper: f64) -> bool {
    let slack = 1e-12 * upper.abs().max(1.0);
    value.is_finite() && value >= lower - slack && value <= upper + slack
}

pub fn coupled_kernel(problem: &CoupledProblem, stage: &CoupledStage) -> Result<CoupledKernel> {
    let primal = problem.primal();
    let dual = problem.dual();
    check_dim(primal.len(), stage.f.len())?;
    check_dim(primal.len(), stage.gamma.len())?;
    check_dim(dual.len(), stage.w.len())?;
    check_dim(dual.len(), stage.tau.len())?;

    let mut base = Vec::with_capacity(primal.len() + 2 * dual.len());
    let mut alpha = 1.0_f64;
    let mut eta = 1.0_f64;
    for (i, (blk, (f, &g))) in primal.iter().zip(stage.f.iter().zip(&stage.gamma)).enumerate() {
        check_dim(blk.dim(), f.dim())?;
        check_constants("F", i, f, blk.alpha, blk.chi)?;
        let mu = blk.mu();
        let upper = if mu > 0.0 { (blk.alpha - blk.epsilon) / mu } else { f64::INFINITY };
        if !in_range(g, blk.epsilon, upper) {
            return Err(Error::config(format!(
                "gamma[{i}] = {g} outside [epsilon, (alpha - epsilon)/mu] = [{}, {upper}]",
                blk.epsilon
            )));
        }
        alpha = alpha.min(blk.alpha / g - mu);
        eta = eta.max(blk.chi / g + mu);
        base.push(BaseBlock::for_map(f.clone(), 1.0 / g));
    }
    for (j, (blk, (w, &t))) in dual.iter().zip(stage.w.iter().zip(&stage.tau)).enumerate() {
        check_dim(blk.dim(), w.dim())?;
        check_constants("W", j, w, blk.beta, blk.kappa)?;
        let nu = blk.nu();
        let upper = if nu > 0.0 { (blk.beta - blk.delta) / nu } else { f64::INFINITY };
        if !in_range(t, blk.delta, upper) {
            return Err(Error::config(format!(
                "tau[{j}] = {t} outside [delta, (beta - delta)/nu] = [{}, {upper}]",
                blk.delta
            )));
        }
        alpha = alpha.min(blk.beta / t - nu);
        eta = eta.max(blk.kappa / t + nu);
        base.push(BaseBlock::for_map(w.clone(), 1.0 / t));
    }
    for blk in dual {
        base.push(BaseBlock::Scaled { dim: blk.dim(), c: 1.0 });
    }
    if !(alpha > 0.0) {
        return Err(Error::config(format!(
            "coupled kernel is not strongly monotone (modulus {alpha})"
        )));
    }
    Ok(CoupledKernel {
        base,
        folded: Folded {
            op: problem.kt_forward().clone(),
            scale: 1.0,
        },
        alpha,
        lipschitz: eta + problem.skew_norm(),
        dim: problem.layout().total(),
    })
}

fn check_constants(label: &str, idx: usize, op: &MapRef, alpha: f64, lipschitz: f64) -> Result<()> {
    let declared = op.strong_monotonicity();
    if declared < alpha * (1.0 - 1e-12) {
        return Err(Error::config(format!(
            "{label}[{idx}] has strong-monotonicity modulus {declared}, below the uniform constant {alpha}"
        )));
    }
    if op.lipschitz() > lipschitz * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "{label}[{idx}] has Lipschitz constant {}, above the uniform constant {lipschitz}",
            op.lipschitz()
        )));
    }
    Ok(())
}

impl CoupledKernel {
    fn base_apply(&self, x: &Vector) -> Vector {
        let mut at = 0;
        let parts: Vec<Vector> = self
            .base
            .iter()
            .map(|b| {
                let d = b.dim();
                let out = b.apply(&x.segment(at, d));
                at += d;
                out
            })
            .collect();
        Vector::concat(&parts)
    }
}

impl Kernel for CoupledKernel {
    fn name(&self) -> &str {
        "coupled"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), self.dim, "vector dimension mismatch");
        self.base_apply(x) - self.folded.op.apply(x)
    }

    fn strong_monotonicity(&self) -> f64 {
        self.alpha
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn base(&self) -> &[BaseBlock] {
        &self.base
    }

    fn folded(&self) -> Option<&Folded> {
        Some(&self.folded)
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let (fm, fb) = self.folded.op.affine_form()?;
        let (mut m, mut b) = (-fm, -fb);
        let mut at = 0;
        for blk in &self.base {
            let (bm, bb) = blk.affine_form()?;
            let k = bm.nrows();
            let mut view = m.view_mut((at, at), (k, k));
            view += &bm;
            let mut seg = b.rows_mut(at, k);
            seg += &bb;
            at += k;
        }
        Some((m, b))
    }
}
