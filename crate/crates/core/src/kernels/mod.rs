//! Kernels `K` and the warped resolvent `J^K_{γM} = (K + γM)^{-1} ∘ K`.
//!
//! Every kernel designates a base part `K_base`, a list of blocks that are
//! either scalar multiples of the identity or scaled strongly monotone maps,
//! and optionally a folded forward term, so that `K = K_base − s·F`. When
//! `M = A + F` with the same `F` and the warped step equals `s`, the forward
//! terms cancel and `(K + γM)^{-1}` reduces to `(K_base + γA)^{-1}`, which is
//! solved block by block.

use std::fmt;
use std::sync::Arc;

use crate::error::{check_dim, check_gamma, Error, Result};
use crate::operators::{
    resolvent, AffineForm, GraphPoint, MapRef, SetRef, SetValued,
};
use crate::space::{Layout, ProductVector, Vector};

mod catalog;
mod coupled;
mod families;
pub(crate) mod inner;

pub use catalog::{standard_kernels, KernelCatalog, KernelContext};
pub use coupled::{coupled_kernel, CoupledKernel, CoupledStage};
pub use families::{
    fbf_kernel, primal_dual_kernel, primal_dual_operator, CubicShear, FbfKernel, MapKernel, PrimalDualKernel,
    ScaledKernel, SkewCoupling,
};

/// One block of a kernel's base part.
#[derive(Debug, Clone)]
pub enum BaseBlock {
    /// `p ↦ c p` on a block of dimension `dim`.
    Scaled { dim: usize, c: f64 },
    /// `p ↦ factor · op(p)` with `op` strongly monotone.
    Map { op: MapRef, factor: f64 },
}

impl BaseBlock {
    pub fn dim(&self) -> usize {
        match self {
            BaseBlock::Scaled { dim, .. } => *dim,
            BaseBlock::Map { op, .. } => op.dim(),
        }
    }

    fn apply(&self, x: &Vector) -> Vector {
        match self {
            BaseBlock::Scaled { c, .. } => x.scale(*c),
            BaseBlock::Map { op, factor } => op.apply(x).scale(*factor),
        }
    }

    fn alpha(&self) -> f64 {
        match self {
            BaseBlock::Scaled { c, .. } => *c,
            BaseBlock::Map { op, factor } => factor * op.strong_monotonicity(),
        }
    }

    fn lipschitz(&self) -> f64 {
        match self {
            BaseBlock::Scaled { c, .. } => *c,
            BaseBlock::Map { op, factor } => factor * op.lipschitz(),
        }
    }

    fn affine_form(&self) -> Option<AffineForm> {
        match self {
            BaseBlock::Scaled { dim, c } => Some((
                nalgebra::DMatrix::identity(*dim, *dim) * *c,
                nalgebra::DVector::zeros(*dim),
            )),
            BaseBlock::Map { op, factor } => op.affine_form().map(|(m, b)| (m * *factor, b * *factor)),
        }
    }

    /// Base block for `factor · op`, recognizing multiples of the identity.
    pub fn for_map(op: MapRef, factor: f64) -> BaseBlock {
        if let Some((m, b)) = op.affine_form() {
            let n = m.nrows();
            let c = if n > 0 { m[(0, 0)] } else { 0.0 };
            let scalar = b.iter().all(|&e| e == 0.0)
                && (0..n).all(|i| (0..n).all(|j| m[(i, j)] == if i == j { c } else { 0.0 }));
            if scalar && c > 0.0 {
                return BaseBlock::Scaled { dim: n, c: c * factor };
            }
        }
        BaseBlock::Map { op, factor }
    }
}

/// A forward term folded into a kernel: `K = K_base − scale · op`.
#[derive(Debug, Clone)]
pub struct Folded {
    pub op: MapRef,
    pub scale: f64,
}

/// A strongly monotone Lipschitz kernel with a designated base part.
pub trait Kernel: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// `K x`. Panics on dimension mismatch.
    fn apply(&self, x: &Vector) -> Vector;

    /// Declared strong-monotonicity constant `α > 0`.
    fn strong_monotonicity(&self) -> f64;

    /// Declared Lipschitz constant `β`.
    fn lipschitz(&self) -> f64;

    fn base(&self) -> &[BaseBlock];

    fn folded(&self) -> Option<&Folded> {
        None
    }

    fn affine_form(&self) -> Option<AffineForm> {
        None
    }

    /// The unique `p` with `v ∈ K_base(p) + γA(p)`, where `A` is the set part
    /// of `m`.
    fn backward_solve(&self, gamma: f64, m: &MDecomposition, v: &Vector) -> Result<Vector> {
        check_gamma(gamma)?;
        check_dim(self.dim(), v.dim())?;
        solve_base(self.base(), gamma, m.set_part(), v, v)
    }
}

pub type KernelRef = Arc<dyn Kernel>;

/// `M = A + B` with `A` maximally monotone (resolvent oracle) and `B`
/// optional, monotone and Lipschitz.
#[derive(Debug, Clone)]
pub struct MDecomposition {
    set_part: SetRef,
    forward: Option<MapRef>,
}

impl MDecomposition {
    pub fn new(set_part: SetRef, forward: Option<MapRef>) -> Result<Self> {
        if let Some(b) = &forward {
            check_dim(set_part.dim(), b.dim())?;
            if !b.is_monotone() {
                return Err(Error::config(format!(
                    "forward part `{}` is not monotone",
                    b.name()
                )));
            }
        }
        Ok(MDecomposition { set_part, forward })
    }

    pub fn set_only(set_part: SetRef) -> Self {
        MDecomposition {
            set_part,
            forward: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.set_part.dim()
    }

    pub fn set_part(&self) -> &dyn SetValued {
        self.set_part.as_ref()
    }

    pub fn set_ref(&self) -> &SetRef {
        &self.set_part
    }

    pub fn forward(&self) -> Option<&MapRef> {
        self.forward.as_ref()
    }

    /// How far `(y, y*)` is from `gra M`: `‖y − J_A(y + y* − B y)‖`, which
    /// vanishes exactly when `y* − By ∈ Ay`.
    pub fn graph_residual(&self, y: &Vector, y_star: &Vector) -> Result<f64> {
        check_dim(self.dim(), y.dim())?;
        check_dim(self.dim(), y_star.dim())?;
        let mut a_part = y_star.clone();
        if let Some(b) = &self.forward {
            a_part -= &b.apply(y);
        }
        let p = resolvent(self.set_part.as_ref(), 1.0, &(y + &a_part))?;
        Ok((y - p).norm())
    }

    /// `‖x − J_M x‖` computed through the graph residual of `(x, 0)`.
    pub fn zero_residual(&self, x: &Vector) -> Result<f64> {
        self.graph_residual(x, &Vector::zeros(x.dim()))
    }
}

fn same_map(a: &MapRef, b: &MapRef) -> bool {
    std::ptr::addr_eq(Arc::as_ptr(a), Arc::as_ptr(b))
}

/// `y = (K + γM)^{-1}(K x)`.
pub fn warped_resolvent(m: &MDecomposition, k: &dyn Kernel, gamma: f64, x: &Vector) -> Result<Vector> {
    check_gamma(gamma)?;
    check_dim(k.dim(), m.dim())?;
    check_dim(k.dim(), x.dim())?;
    let v = k.apply(x);
    if !v.is_finite() {
        return Err(Error::NonFinite("kernel evaluation".into()));
    }
    let cancels = match (k.folded(), m.forward()) {
        (None, None) => true,
        (Some(f), Some(b)) => same_map(&f.op, b) && f.scale == gamma,
        _ => false,
    };
    let y = if cancels {
        solve_base(k.base(), gamma, m.set_part(), &v, x)?
    } else {
        solve_full(k, gamma, m, &v, x)?
    };
    if !y.is_finite() {
        return Err(Error::NonFinite("warped resolvent".into()));
    }
    Ok(y)
}

/// `(y, y*)` with `y = J^K_{γM} x̃` and `y* = γ^{-1}(K x̃ − K y) ∈ M y`.
pub fn graph_point(m: &MDecomposition, k: &dyn Kernel, gamma: f64, x_tilde: &Vector) -> Result<GraphPoint> {
    let y = warped_resolvent(m, k, gamma, x_tilde)?;
    let y_star = (k.apply(x_tilde) - k.apply(&y)).scale(1.0 / gamma);
    GraphPoint::new(y, y_star)
}

/// `(K + γB + γA)^{-1} v` without cancellation.
fn solve_full(k: &dyn Kernel, gamma: f64, m: &MDecomposition, v: &Vector, guess: &Vector) -> Result<Vector> {
    let forward = m.forward().cloned();
    let eval = |p: &Vector| {
        let mut out = k.apply(p);
        if let Some(b) = &forward {
            out = out.add_scaled(gamma, &b.apply(p));
        }
        out
    };
    let (b_alpha, b_lip, b_affine) = match &forward {
        Some(b) => (b.strong_monotonicity(), b.lipschitz(), b.affine_form()),
        None => (0.0, 0.0, Some(zero_form(k.dim()))),
    };
    let affine = match (k.affine_form(), b_affine) {
        (Some((km, kb)), Some((bm, bb))) => Some((km + bm * gamma, kb + bb * gamma)),
        _ => None,
    };
    let smooth = inner::Smooth {
        eval: &eval,
        alpha: k.strong_monotonicity() + gamma * b_alpha,
        lipschitz: k.lipschitz() + gamma * b_lip,
        affine,
    };
    inner::solve(&smooth, gamma, m.set_part(), v, guess)
}

fn zero_form(n: usize) -> AffineForm {
    (nalgebra::DMatrix::zeros(n, n), nalgebra::DVector::zeros(n))
}

/// Solve `v ∈ K_base(p) + γA(p)`, block by block when `A` is a product
/// with the same layout as the base.
pub(crate) fn solve_base(
    base: &[BaseBlock],
    gamma: f64,
    a: &dyn SetValued,
    v: &Vector,
    guess: &Vector,
) -> Result<Vector> {
    if let [block] = base {
        return solve_block(block, gamma, a, v, guess);
    }
    let layout = Layout::new(base.iter().map(BaseBlock::dim).collect());
    check_dim(layout.total(), v.dim())?;
    if let Some(prod) = a.as_product() {
        if prod.layout() == &layout {
            let vs = ProductVector::split(v, &layout)?;
            let gs = ProductVector::split(guess, &layout)?;
            let parts = base
                .iter()
                .zip(prod.blocks())
                .zip(vs.blocks().iter().zip(gs.blocks()))
                .map(|((blk, ai), (vi, gi))| solve_block(blk, gamma, ai.as_ref(), vi, gi))
                .collect::<Result<Vec<_>>>()?;
            return Ok(Vector::concat(&parts));
        }
    }
    // Uniform scalar base collapses to a single closed form.
    if let Some(BaseBlock::Scaled { c, .. }) = base.first() {
        let c = *c;
        if base.iter().all(|b| matches!(b, BaseBlock::Scaled { c: ci, .. } if *ci == c)) {
            let whole = BaseBlock::Scaled { dim: layout.total(), c };
            return solve_block(&whole, gamma, a, v, guess);
        }
    }
    let eval = |p: &Vector| {
        let ps = ProductVector::split(p, &layout).expect("layout checked");
        let parts: Vec<Vector> = base.iter().zip(ps.blocks()).map(|(b, pi)| b.apply(pi)).collect();
        Vector::concat(&parts)
    };
    let affine = base
        .iter()
        .map(BaseBlock::affine_form)
        .collect::<Option<Vec<_>>>()
        .map(|forms| {
            let n = layout.total();
            let (mut m, mut b) = zero_form(n);
            let mut at = 0;
            for (fm, fb) in forms {
                let k = fm.nrows();
                m.view_mut((at, at), (k, k)).copy_from(&fm);
                b.rows_mut(at, k).copy_from(&fb);
                at += k;
            }
            (m, b)
        });
    let smooth = inner::Smooth {
        eval: &eval,
        alpha: base.iter().map(BaseBlock::alpha).fold(f64::INFINITY, f64::min),
        lipschitz: base.iter().map(BaseBlock::lipschitz).fold(0.0, f64::max),
        affine,
    };
    inner::solve(&smooth, gamma, a, v, guess)
}

fn solve_block(block: &BaseBlock, gamma: f64, a: &dyn SetValued, v: &Vector, guess: &Vector) -> Result<Vector> {
    check_dim(block.dim(), a.dim())?;
    match block {
        BaseBlock::Scaled { c, .. } => a.resolve(gamma / c, &v.scale(1.0 / c)),
        BaseBlock::Map { op, factor } => {
            let f = *factor;
            let eval = |p: &Vector| op.apply(p).scale(f);
            let smooth = inner::Smooth {
                eval: &eval,
                alpha: f * op.strong_monotonicity(),
                lipschitz: f * op.lipschitz(),
                affine: block.affine_form(),
            };
            inner::solve(&smooth, gamma, a, v, guess)
        }
    }
}
