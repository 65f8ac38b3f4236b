//! Concrete operators with closed-form resolvents or evaluations.

use nalgebra::{DMatrix, DVector};

use super::{AffineForm, MapRef, SetRef, SetValued, SingleValued};
use crate::error::{check_dim, Error, Result};
use crate::space::{Layout, LinearMap, ProductVector, Vector};

/// The zero operator. Its resolvent is the identity.
#[derive(Debug, Clone)]
pub struct Zero {
    dim: usize,
}

impl Zero {
    pub fn new(dim: usize) -> Self {
        Zero { dim }
    }
}

impl SetValued for Zero {
    fn name(&self) -> &str {
        "zero"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, _gamma: f64, x: &Vector) -> Result<Vector> {
        Ok(x.clone())
    }

    fn affine_form(&self) -> Option<AffineForm> {
        Some((DMatrix::zeros(self.dim, self.dim), DVector::zeros(self.dim)))
    }
}

impl SingleValued for Zero {
    fn name(&self) -> &str {
        "zero"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), self.dim, "vector dimension mismatch");
        Vector::zeros(self.dim)
    }

    fn lipschitz(&self) -> f64 {
        0.0
    }

    fn affine_form(&self) -> Option<AffineForm> {
        Some((DMatrix::zeros(self.dim, self.dim), DVector::zeros(self.dim)))
    }
}

/// `x ↦ c x` with `c ≥ 0`.
#[derive(Debug, Clone)]
pub struct ScaledIdentity {
    dim: usize,
    c: f64,
}

impl ScaledIdentity {
    pub fn new(dim: usize, c: f64) -> Result<Self> {
        if !(c.is_finite() && c >= 0.0) {
            return Err(Error::config(format!("scaled identity needs c >= 0, got {c}")));
        }
        Ok(ScaledIdentity { dim, c })
    }

    pub fn factor(&self) -> f64 {
        self.c
    }

    fn form(&self) -> AffineForm {
        (DMatrix::identity(self.dim, self.dim) * self.c, DVector::zeros(self.dim))
    }
}

impl SetValued for ScaledIdentity {
    fn name(&self) -> &str {
        "scaled_identity"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        Ok(x.scale(1.0 / (1.0 + gamma * self.c)))
    }

    fn affine_form(&self) -> Option<AffineForm> {
        Some(self.form())
    }
}

impl SingleValued for ScaledIdentity {
    fn name(&self) -> &str {
        "scaled_identity"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector) -> Vector {
        assert_eq!(x.dim(), self.dim, "vector dimension mismatch");
        x.scale(self.c)
    }

    fn lipschitz(&self) -> f64 {
        self.c
    }

    fn strong_monotonicity(&self) -> f64 {
        self.c
    }

    fn affine_form(&self) -> Option<AffineForm> {
        Some(self.form())
    }
}

/// The constant operator `x ↦ c`, i.e. the gradient of `⟨c, ·⟩`.
#[derive(Debug, Clone)]
pub struct Constant {
    value: Vector,
}

impl Constant {
    pub fn new(value: Vector) -> Self {
        Constant { value }
    }
}

impl SetValued for Constant {
    fn name(&self) -> &str {
        "constant"
    }

    fn dim(&self) -> usize {
        self.value.dim()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        Ok(x.add_scaled(-gamma, &self.value))
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let n = self.value.dim();
        Some((DMatrix::zeros(n, n), self.value.as_dvector().clone()))
    }
}

/// Affine map `x ↦ M x + b`. Monotone exactly when the symmetric part of
/// `M` is positive semidefinite.
#[derive(Debug, Clone)]
pub struct Affine {
    m: LinearMap,
    b: Vector,
    lipschitz: f64,
    alpha: f64,
}

impl Affine {
    pub fn new(m: LinearMap, b: Vector) -> Result<Self> {
        check_dim(m.rows(), m.cols())?;
        check_dim(m.rows(), b.dim())?;
        let lipschitz = m.norm();
        let alpha = m.min_sym_eigenvalue()?;
        Ok(Affine { m, b, lipschitz, alpha })
    }

    /// `x ↦ M x`.
    pub fn linear(m: LinearMap) -> Result<Self> {
        let n = m.rows();
        Self::new(m, Vector::zeros(n))
    }

    pub fn matrix(&self) -> &LinearMap {
        &self.m
    }

    pub fn shift(&self) -> &Vector {
        &self.b
    }

    fn form(&self) -> AffineForm {
        (self.m.matrix().clone(), self.b.as_dvector().clone())
    }
}

impl SetValued for Affine {
    fn name(&self) -> &str {
        "affine"
    }

    fn dim(&self) -> usize {
        self.m.rows()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let n = self.m.rows();
        let lhs = DMatrix::identity(n, n) + self.m.matrix() * gamma;
        let rhs = x.as_dvector() - self.b.as_dvector() * gamma;
        lhs.lu()
            .solve(&rhs)
            .map(Vector::from_dvector)
            .ok_or_else(|| Error::Singular("Id + γM in affine resolvent".into()))
    }

    fn affine_form(&self) -> Option<AffineForm> {
        Some(self.form())
    }
}

impl SingleValued for Affine {
    fn name(&self) -> &str {
        "affine"
    }

    fn dim(&self) -> usize {
        self.m.rows()
    }

    fn apply(&self, x: &Vector) -> Vector {
        self.m.apply(x).expect("vector dimension mismatch") + &self.b
    }

    fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    fn strong_monotonicity(&self) -> f64 {
        self.alpha.max(0.0)
    }

    fn is_monotone(&self) -> bool {
        self.alpha >= -1e-12 * self.lipschitz.max(1.0)
    }

    fn affine_form(&self) -> Option<AffineForm> {
        Some(self.form())
    }
}

/// Subdifferential of `w‖·‖₁`; the resolvent is soft-thresholding.
#[derive(Debug, Clone)]
pub struct L1Norm {
    dim: usize,
    weight: f64,
}

impl L1Norm {
    pub fn new(dim: usize, weight: f64) -> Result<Self> {
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(Error::config(format!("l1 weight must be nonnegative, got {weight}")));
        }
        Ok(L1Norm { dim, weight })
    }
}

impl SetValued for L1Norm {
    fn name(&self) -> &str {
        "l1"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let t = gamma * self.weight;
        Ok(x.map(|c| c.signum() * (c.abs() - t).max(0.0)))
    }
}

/// `A − s` for a fixed vector `s`: `J_{γ(A−s)} x = J_{γA}(x + γ s)`.
#[derive(Debug, Clone)]
pub struct Shifted {
    inner: SetRef,
    shift: Vector,
    label: String,
}

impl Shifted {
    pub fn new(inner: SetRef, shift: Vector) -> Result<Self> {
        check_dim(inner.dim(), shift.dim())?;
        let label = format!("{} - s", inner.name());
        Ok(Shifted { inner, shift, label })
    }
}

impl SetValued for Shifted {
    fn name(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.shift.dim()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        self.inner.resolve(gamma, &x.add_scaled(gamma, &self.shift))
    }

    fn affine_form(&self) -> Option<AffineForm> {
        self.inner
            .affine_form()
            .map(|(m, b)| (m, b - self.shift.as_dvector()))
    }
}

/// The inverse operator `A^{-1}`, resolved through the inverse-resolvent
/// identity.
#[derive(Debug, Clone)]
pub struct Inverse {
    inner: SetRef,
    label: String,
}

impl Inverse {
    pub fn new(inner: SetRef) -> Self {
        let label = format!("inverse({})", inner.name());
        Inverse { inner, label }
    }
}

impl SetValued for Inverse {
    fn name(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        let inner = self.inner.resolve(1.0 / gamma, &x.scale(1.0 / gamma))?;
        Ok(x.add_scaled(-gamma, &inner))
    }
}

fn block_diagonal(forms: &[AffineForm]) -> AffineForm {
    let n: usize = forms.iter().map(|(m, _)| m.nrows()).sum();
    let mut m = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    let mut at = 0;
    for (bm, bb) in forms {
        let k = bm.nrows();
        m.view_mut((at, at), (k, k)).copy_from(bm);
        b.rows_mut(at, k).copy_from(bb);
        at += k;
    }
    (m, b)
}

/// Diagonal operator `A_1 × … × A_k` on a product space; resolvents act
/// blockwise.
#[derive(Debug, Clone)]
pub struct ProductOperator {
    blocks: Vec<SetRef>,
    layout: Layout,
}

impl ProductOperator {
    pub fn new(blocks: Vec<SetRef>) -> Self {
        let layout = Layout::new(blocks.iter().map(|b| b.dim()).collect());
        ProductOperator { blocks, layout }
    }

    pub fn blocks(&self) -> &[SetRef] {
        &self.blocks
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// Resolve every block with its own step size.
    pub fn resolve_blocks(&self, gammas: &[f64], x: &Vector) -> Result<Vector> {
        check_dim(self.blocks.len(), gammas.len())?;
        let parts = ProductVector::split(x, &self.layout)?;
        let out = self
            .blocks
            .iter()
            .zip(gammas)
            .zip(parts.blocks())
            .map(|((a, &g), xi)| a.resolve(g, xi))
            .collect::<Result<Vec<_>>>()?;
        Ok(Vector::concat(&out))
    }
}

impl SetValued for ProductOperator {
    fn name(&self) -> &str {
        "product"
    }

    fn dim(&self) -> usize {
        self.layout.total()
    }

    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector> {
        self.resolve_blocks(&vec![gamma; self.blocks.len()], x)
    }

    fn as_product(&self) -> Option<&ProductOperator> {
        Some(self)
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let forms = self
            .blocks
            .iter()
            .map(|b| b.affine_form())
            .collect::<Option<Vec<_>>>()?;
        Some(block_diagonal(&forms))
    }
}

/// Block-diagonal single-valued map `B_1 × … × B_k`.
#[derive(Debug, Clone)]
pub struct ProductMap {
    blocks: Vec<MapRef>,
    layout: Layout,
}

impl ProductMap {
    pub fn new(blocks: Vec<MapRef>) -> Self {
        let layout = Layout::new(blocks.iter().map(|b| b.dim()).collect());
        ProductMap { blocks, layout }
    }

    pub fn blocks(&self) -> &[MapRef] {
        &self.blocks
    }
}

impl SingleValued for ProductMap {
    fn name(&self) -> &str {
        "product"
    }

    fn dim(&self) -> usize {
        self.layout.total()
    }

    fn apply(&self, x: &Vector) -> Vector {
        let parts = ProductVector::split(x, &self.layout).expect("vector dimension mismatch");
        let out: Vec<Vector> = self
            .blocks
            .iter()
            .zip(parts.blocks())
            .map(|(b, xi)| b.apply(xi))
            .collect();
        Vector::concat(&out)
    }

    fn lipschitz(&self) -> f64 {
        self.blocks.iter().map(|b| b.lipschitz()).fold(0.0, f64::max)
    }

    fn strong_monotonicity(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.strong_monotonicity())
            .fold(f64::INFINITY, f64::min)
            .min(if self.blocks.is_empty() { 0.0 } else { f64::INFINITY })
    }

    fn is_monotone(&self) -> bool {
        self.blocks.iter().all(|b| b.is_monotone())
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let forms = self
            .blocks
            .iter()
            .map(|b| b.affine_form())
            .collect::<Option<Vec<_>>>()?;
        Some(block_diagonal(&forms))
    }
}

/// Sum of single-valued maps on a common space.
#[derive(Debug, Clone)]
pub struct SumMap {
    parts: Vec<MapRef>,
    dim: usize,
}

impl SumMap {
    pub fn new(parts: Vec<MapRef>) -> Result<Self> {
        let dim = parts
            .first()
            .map(|p| p.dim())
            .ok_or_else(|| Error::config("sum of no operators"))?;
        for p in &parts {
            check_dim(dim, p.dim())?;
        }
        Ok(SumMap { parts, dim })
    }

    pub fn parts(&self) -> &[MapRef] {
        &self.parts
    }
}

impl SingleValued for SumMap {
    fn name(&self) -> &str {
        "sum"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &Vector) -> Vector {
        let mut acc = Vector::zeros(self.dim);
        for p in &self.parts {
            acc += &p.apply(x);
        }
        acc
    }

    fn lipschitz(&self) -> f64 {
        self.parts.iter().map(|p| p.lipschitz()).sum()
    }

    fn strong_monotonicity(&self) -> f64 {
        self.parts.iter().map(|p| p.strong_monotonicity()).sum()
    }

    fn is_monotone(&self) -> bool {
        self.parts.iter().all(|p| p.is_monotone())
    }

    fn affine_form(&self) -> Option<AffineForm> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        let mut b = DVector::zeros(self.dim);
        for p in &self.parts {
            let (pm, pb) = p.affine_form()?;
            m += pm;
            b += pb;
        }
        Some((m, b))
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    #[test]
    fn skew_affine_constants() {
        let m = LinearMap::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap();
        let a = Affine::linear(m).unwrap();
        assert!(SingleValued::is_monotone(&a));
        assert!((SingleValued::lipschitz(&a) - 1.0).abs() < 1e-14);
        assert!(SingleValued::strong_monotonicity(&a).abs() < 1e-14);
    }

    #[test]
    fn affine_resolvent_solves_linear_system() {
        let m = LinearMap::from_rows(&[vec![2.0, 1.0], vec![-1.0, 1.0]]).unwrap();
        let a = Affine::new(m.clone(), v(&[1.0, -1.0])).unwrap();
        let x = v(&[0.5, 2.0]);
        let p = SetValued::resolve(&a, 0.7, &x).unwrap();
        // p + γ(Mp + b) = x
        let back = &p + (m.apply(&p).unwrap() + v(&[1.0, -1.0])).scale(0.7);
        assert!((back - x).norm() < 1e-14);
    }

    #[test]
    fn soft_threshold() {
        let l1 = L1Norm::new(3, 2.0).unwrap();
        let p = l1.resolve(0.5, &v(&[3.0, -0.5, -4.0])).unwrap();
        assert_eq!(p, v(&[2.0, 0.0, -3.0]));
    }

    #[test]
    fn shifted_and_inverse() {
        // Id − s has resolvent (x + γs)/(1+γ)
        let id: SetRef = Arc::new(ScaledIdentity::new(1, 1.0).unwrap());
        let s = Shifted::new(id.clone(), v(&[2.0])).unwrap();
        assert_eq!(s.resolve(1.0, &v(&[0.0])).unwrap(), v(&[1.0]));
        // (c Id)^{-1} = c^{-1} Id
        let two: SetRef = Arc::new(ScaledIdentity::new(1, 2.0).unwrap());
        let inv = Inverse::new(two);
        let p = inv.resolve(1.0, &v(&[3.0])).unwrap();
        assert!((p[0] - 2.0).abs() < 1e-15);
    }

    #[test]
    fn product_resolves_blockwise() {
        let p = ProductOperator::new(vec![
            Arc::new(ScaledIdentity::new(1, 1.0).unwrap()),
            Arc::new(Zero::new(2)),
        ]);
        let x = v(&[4.0, 1.0, 2.0]);
        assert_eq!(p.resolve(1.0, &x).unwrap(), v(&[2.0, 1.0, 2.0]));
        let (m, _) = SetValued::affine_form(&p).unwrap();
        assert_eq!(m[(0, 0)], 1.0);
        assert_eq!(m[(1, 1)], 0.0);
    }

    #[test]
    fn sum_map_adds() {
        let s = SumMap::new(vec![
            Arc::new(ScaledIdentity::new(2, 1.0).unwrap()),
            Arc::new(Affine::linear(LinearMap::from_rows(&[vec![0.0, 1.0], vec![-1.0, 0.0]]).unwrap()).unwrap()),
        ])
        .unwrap();
        assert_eq!(s.apply(&v(&[1.0, 2.0])), v(&[3.0, 1.0]));
        assert!((s.strong_monotonicity() - 1.0).abs() < 1e-14);
    }
}
