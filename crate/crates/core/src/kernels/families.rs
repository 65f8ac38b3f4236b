//! Shipped kernel families.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use super::{BaseBlock, Folded, Kernel, MDecomposition};
use crate::error::{check_dim, Error, Result};
use crate::operators::{AffineForm, Inverse, MapRef, ProductOperator, SetRef, SingleValued};
use crate::space::{LinearMap, Vector};

/// `K = c Id`; `c = 1` gives the classical resolvent.
#[derive(Debug, Clone)]
pub struct ScaledKernel {
    c: f64,
    base: [BaseBlock; 1],
}

impl ScaledKernel {
    pub fn new(dim: usize, c: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(Error::config(format!("kernel scale must be positive, got {c}")));
        }
        Ok(ScaledKernel {
            c,
            base: [BaseBlock::Scaled { dim, c }],
        })
    }

    pub fn identity(dim: usize) -> Self {
        Self::new(dim, 1.0).expect("unit scale")
    }
}

impl Kernel for ScaledKernel {
    fn name(&self) -> &str {
        if self.c == 1.0 {
            "identity"
        } else {
            "scaled_identity"
        }
    }

    fn dim(&self) -> usize {
        self.base[0].dim()
    }

    fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), self.dim(), "vector dimension mismatch");
        x.scale(self.c)
    }

    fn strong_monotonicity(&self) -> f64 {
        self.c
    }

    fn lipschitz(&self) -> f64 {
        self.c
    }

    fn base(&self) -> &[BaseBlock] {
        &self.base
    }

    fn affine_form(&self) -> Option<AffineForm> {
        self.base[0].affine_form()
    }
}

/// A kernel given by a strongly monotone Lipschitz map, which is also its
/// own base part.
#[derive(Debug, Clone)]
pub struct MapKernel {
    op: MapRef,
    base: [BaseBlock; 1],
}

impl MapKernel {
    pub fn new(op: MapRef) -> Result<Self> {
        let alpha = op.strong_monotonicity();
        if !(alpha > 0.0) {
            return Err(Error::config(format!(
                "kernel `{}` must be strongly monotone (declared modulus {alpha})",
                op.name()
            )));
        }
        let base = [BaseBlock::for_map(op.clone(), 1.0)];
        Ok(MapKernel { op, base })
    }

    pub fn map(&self) -> &MapRef {
        &self.op
    }
}

impl Kernel for MapKernel {
    fn name(&self) -> &str {
        self.op.name()
    }

    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn apply(&self, x: &Vector) -> Vector {
        self.op.apply(x)
    }

    fn strong_monotonicity(&self) -> f64 {
        self.op.strong_monotonicity()
    }

    fn lipschitz(&self) -> f64 {
        self.op.lipschitz()
    }

    fn base(&self) -> &[BaseBlock] {
        &self.base
    }

    fn affine_form(&self) -> Option<AffineForm> {
        self.op.affine_form()
    }
}

/// `(ξ₁, ξ₂) ↦ (ξ₁³/2 + ξ₁/5 − ξ₂, ξ₁ + ξ₂)`: a kernel that is not the
/// gradient of any function. It is 1/5-strongly monotone everywhere but
/// Lipschitz only on bounded sets, so the declared constant refers to the
/// ball of radius `region_radius` about the origin.
#[derive(Debug, Clone)]
pub struct CubicShear {
    region_radius: f64,
}

impl CubicShear {
    pub fn new(region_radius: f64) -> Result<Self> {
        if !(region_radius.is_finite() && region_radius > 0.0) {
            return Err(Error::config(format!(
                "region radius must be positive, got {region_radius}"
            )));
        }
        Ok(CubicShear { region_radius })
    }

    pub fn region_radius(&self) -> f64 {
        self.region_radius
    }
}

impl SingleValued for CubicShear {
    fn name(&self) -> &str {
        "cubic_shear"
    }

    fn dim(&self) -> usize {
        2
    }

    fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), 2, "vector dimension mismatch");
        let (a, b) = (x[0], x[1]);
        Vector::new(vec![a * a * a / 2.0 + a / 5.0 - b, a + b]).expect("finite input")
    }

    fn lipschitz(&self) -> f64 {
        // Jacobian = diag(3ξ₁²/2 + 1/5, 1) + rotation
        let r = self.region_radius;
        (1.5 * r * r + 0.2).max(1.0) + 1.0
    }

    fn strong_monotonicity(&self) -> f64 {
        0.2
    }
}

/// `K = W − γB` built for a forward-backward-forward step: `W` is
/// `α`-strongly monotone, `B` is monotone and `β`-Lipschitz, and
/// `γ ≤ (α − ε)/β` makes `K` `ε`-strongly monotone.
#[derive(Debug, Clone)]
pub struct FbfKernel {
    w: MapRef,
    b: MapRef,
    gamma: f64,
    epsilon: f64,
    base: [BaseBlock; 1],
    folded: Folded,
}

pub fn fbf_kernel(w: MapRef, b: MapRef, gamma: f64, epsilon: f64) -> Result<FbfKernel> {
    check_dim(w.dim(), b.dim())?;
    let alpha = w.strong_monotonicity();
    let beta = b.lipschitz();
    if !(epsilon > 0.0 && epsilon < alpha) {
        return Err(Error::config(format!(
            "epsilon = {epsilon} must lie in ]0, alpha[ with alpha = {alpha}"
        )));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::config(format!("step size must be positive, got {gamma}")));
    }
    if !b.is_monotone() {
        return Err(Error::config(format!("forward operator `{}` is not monotone", b.name())));
    }
    let bound = (alpha - epsilon) / beta;
    if gamma * beta > (alpha - epsilon) * (1.0 + 1e-12) {
        return Err(Error::config(format!(
            "gamma = {gamma} exceeds (alpha - epsilon)/beta = {bound} (alpha = {alpha}, epsilon = {epsilon}, beta = {beta})"
        )));
    }
    Ok(FbfKernel {
        base: [BaseBlock::for_map(w.clone(), 1.0)],
        folded: Folded {
            op: b.clone(),
            scale: gamma,
        },
        w,
        b,
        gamma,
        epsilon,
    })
}

impl FbfKernel {
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn w(&self) -> &MapRef {
        &self.w
    }

    pub fn b(&self) -> &MapRef {
        &self.b
    }
}

impl Kernel for FbfKernel {
    fn name(&self) -> &str {
        "fbf"
    }

    fn dim(&self) -> usize {
        self.w.dim()
    }

    fn apply(&self, x: &Vector) -> Vector {
        self.w.apply(x).add_scaled(-self.gamma, &self.b.apply(x))
    }

    fn strong_monotonicity(&self) -> f64 {
        self.epsilon
    }

    fn lipschitz(&self) -> f64 {
        self.w.lipschitz() + self.gamma * self.b.lipschitz()
    }

    fn base(&self) -> &[BaseBlock] {
        &self.base
    }

    fn folded(&self) -> Option<&Folded> {
        Some(&self.folded)
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let (wm, wb) = self.w.affine_form()?;
        let (bm, bb) = self.b.affine_form()?;
        Some((wm - bm * self.gamma, wb - bb * self.gamma))
    }
}

/// The skew map `(x, v*) ↦ (L* v*, −L x)` on `𝒴 × 𝒵`.
#[derive(Debug, Clone)]
pub struct SkewCoupling {
    l: LinearMap,
    norm: f64,
}

impl SkewCoupling {
    pub fn new(l: LinearMap) -> Self {
        let norm = l.norm();
        SkewCoupling { l, norm }
    }

    pub fn linear_map(&self) -> &LinearMap {
        &self.l
    }

    pub fn primal_dim(&self) -> usize {
        self.l.cols()
    }

    pub fn dual_dim(&self) -> usize {
        self.l.rows()
    }
}

impl SingleValued for SkewCoupling {
    fn name(&self) -> &str {
        "skew_coupling"
    }

    fn dim(&self) -> usize {
        self.l.rows() + self.l.cols()
    }

    fn apply(&self, z: &Vector) -> Vector {
        let n = self.primal_dim();
        let x = z.segment(0, n);
        let v = z.segment(n, self.dual_dim());
        let top = self.l.adjoint_apply(&v).expect("layout");
        let bottom = -self.l.apply(&x).expect("layout");
        Vector::concat(&[top, bottom])
    }

    fn lipschitz(&self) -> f64 {
        self.norm
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let (n, k) = (self.primal_dim(), self.dual_dim());
        let mut m = DMatrix::zeros(n + k, n + k);
        m.view_mut((0, n), (n, k)).copy_from(&self.l.matrix().transpose());
        m.view_mut((n, 0), (k, n)).copy_from(&(-self.l.matrix()));
        Some((m, DVector::zeros(n + k)))
    }
}

/// `(x, v*) ↦ (γ^{-1}x − L*v*, Lx + μv*)`, whose base is the diagonal
/// `(γ^{-1}Id, μ Id)` and whose folded forward term is the skew coupling.
#[derive(Debug, Clone)]
pub struct PrimalDualKernel {
    coupling: Arc<SkewCoupling>,
    gamma: f64,
    mu: f64,
    base: [BaseBlock; 2],
    folded: Folded,
}

pub fn primal_dual_kernel(l: LinearMap, gamma: f64, mu: f64) -> Result<PrimalDualKernel> {
    PrimalDualKernel::with_coupling(Arc::new(SkewCoupling::new(l)), gamma, mu)
}

impl PrimalDualKernel {
    /// Share `coupling` with the forward part of the operator, so that the
    /// warped resolvent reduces to two independent resolvents.
    pub fn with_coupling(coupling: Arc<SkewCoupling>, gamma: f64, mu: f64) -> Result<Self> {
        for (name, value) in [("gamma", gamma), ("mu", mu)] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::config(format!("{name} must be positive, got {value}")));
            }
        }
        let base = [
            BaseBlock::Scaled {
                dim: coupling.primal_dim(),
                c: 1.0 / gamma,
            },
            BaseBlock::Scaled {
                dim: coupling.dual_dim(),
                c: mu,
            },
        ];
        let folded = Folded {
            op: coupling.clone(),
            scale: 1.0,
        };
        Ok(PrimalDualKernel {
            coupling,
            gamma,
            mu,
            base,
            folded,
        })
    }

    pub fn coupling(&self) -> &Arc<SkewCoupling> {
        &self.coupling
    }
}

/// `(x, v*) ↦ (A x + L*v*) × (B^{-1} v* − L x)`, the primal-dual operator
/// whose zeros solve `0 ∈ A x + L*B(L x)`. Pass the coupling of the kernel
/// to get the cancelling warped resolvent.
pub fn primal_dual_operator(a: SetRef, b: SetRef, coupling: &Arc<SkewCoupling>) -> Result<MDecomposition> {
    check_dim(coupling.primal_dim(), a.dim())?;
    check_dim(coupling.dual_dim(), b.dim())?;
    let set: SetRef = Arc::new(ProductOperator::new(vec![a, Arc::new(Inverse::new(b))]));
    let forward: MapRef = coupling.clone();
    MDecomposition::new(set, Some(forward))
}

impl Kernel for PrimalDualKernel {
    fn name(&self) -> &str {
        "primal_dual"
    }

    fn dim(&self) -> usize {
        self.coupling.dim()
    }

    fn apply(&self, z: &Vector) -> Vector {
        let n = self.coupling.primal_dim();
        let k = self.coupling.dual_dim();
        let diag = Vector::concat(&[
            z.segment(0, n).scale(1.0 / self.gamma),
            z.segment(n, k).scale(self.mu),
        ]);
        diag - self.coupling.apply(z)
    }

    fn strong_monotonicity(&self) -> f64 {
        (1.0 / self.gamma).min(self.mu)
    }

    fn lipschitz(&self) -> f64 {
        (1.0 / self.gamma).max(self.mu) + self.coupling.lipschitz()
    }

    fn base(&self) -> &[BaseBlock] {
        &self.base
    }

    fn folded(&self) -> Option<&Folded> {
        Some(&self.folded)
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let (sm, sb) = self.coupling.affine_form()?;
        let n = self.coupling.primal_dim();
        let total = self.coupling.dim();
        let mut d = DMatrix::zeros(total, total);
        for i in 0..total {
            d[(i, i)] = if i < n { 1.0 / self.gamma } else { self.mu };
        }
        Some((d - sm, -sb))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Affine, ScaledIdentity, Zero};

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn rotation() -> MapRef {
        Arc::new(Affine::linear(LinearMap::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap()).unwrap())
    }

    #[test]
    fn fbf_with_zero_forward_is_w() {
        let w: MapRef = Arc::new(ScaledIdentity::new(2, 1.0).unwrap());
        let k = fbf_kernel(w, Arc::new(Zero::new(2)), 3.0, 0.5).unwrap();
        assert_eq!(k.apply(&v(&[1.0, -2.0])), v(&[1.0, -2.0]));
    }

    #[test]
    fn fbf_regime_check() {
        let w: MapRef = Arc::new(ScaledIdentity::new(2, 1.0).unwrap());
        let err = fbf_kernel(w.clone(), rotation(), 10.0, 0.5).unwrap_err();
        assert!(err.to_string().contains("(alpha - epsilon)/beta"));
        assert!(fbf_kernel(w.clone(), rotation(), 0.8, 0.2).is_ok());
        assert!(fbf_kernel(w, rotation(), 0.5, 1.0).is_err());
    }

    #[test]
    fn primal_dual_examples() {
        let k = primal_dual_kernel(LinearMap::zeros(2, 3), 1.0, 1.0).unwrap();
        let z = v(&[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(k.apply(&z), z);

        let k = primal_dual_kernel(LinearMap::from_rows(&[vec![2.0]]).unwrap(), 1.0, 1.0).unwrap();
        assert_eq!(k.apply(&v(&[1.0, 1.0])), v(&[-1.0, 3.0]));
        let (m, _) = k.affine_form().unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, -2.0, 2.0, 1.0]));
    }

    #[test]
    fn cubic_shear_values() {
        let k = CubicShear::new(2.0).unwrap();
        assert_eq!(k.apply(&v(&[2.0, 1.0])), v(&[4.0 + 0.4 - 1.0, 3.0]));
        assert!(CubicShear::new(0.0).is_err());
    }

    #[test]
    fn map_kernel_requires_strong_monotonicity() {
        assert!(MapKernel::new(rotation()).is_err());
        assert!(MapKernel::new(Arc::new(CubicShear::new(1.0).unwrap())).is_ok());
    }
}
