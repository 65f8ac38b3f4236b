//! Finite-dimensional real Euclidean spaces, block product spaces and dense
//! linear maps.

use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub, SubAssign};

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// A point of a real Euclidean space.
///
/// Constructors reject NaN and infinite entries. Arithmetic is unchecked;
/// solver loops test iterates with [`Vector::is_finite`] and report
/// divergence as an error.
#[derive(Clone, PartialEq)]
pub struct Vector(DVector<f64>);

impl Vector {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFinite(format!("vector entry {i}")));
        }
        Ok(Vector(DVector::from_vec(coords)))
    }

    pub fn from_slice(coords: &[f64]) -> Result<Self> {
        Self::new(coords.to_vec())
    }

    pub fn zeros(dim: usize) -> Self {
        Vector(DVector::zeros(dim))
    }

    pub fn from_element(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    /// Unit vector `e_i` of dimension `dim`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[i] = 1.0;
        Vector(v)
    }

    pub(crate) fn from_dvector(v: DVector<f64>) -> Self {
        Vector(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.0.as_slice().to_vec()
    }

    pub fn as_dvector(&self) -> &DVector<f64> {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|c| c.is_finite())
    }

    /// Inner product. Panics on dimension mismatch; use [`inner`] for a
    /// checked variant.
    pub fn dot(&self, other: &Vector) -> f64 {
        assert_eq!(self.dim(), other.dim(), "inner product of vectors with different dimensions");
        self.0.dot(&other.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.0.norm_squared()
    }

    pub fn scale(&self, s: f64) -> Vector {
        Vector(&self.0 * s)
    }

    /// `self + s * other`
    pub fn add_scaled(&self, s: f64, other: &Vector) -> Vector {
        let mut out = self.0.clone();
        out.axpy(s, &other.0, 1.0);
        Vector(out)
    }

    pub fn map(&self, f: impl FnMut(f64) -> f64) -> Vector {
        Vector(self.0.map(f))
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.0.iter()
    }

    /// Contiguous sub-vector `[start, start + len)`.
    pub fn segment(&self, start: usize, len: usize) -> Vector {
        Vector(self.0.rows(start, len).into_owned())
    }

    pub fn concat(parts: &[Vector]) -> Vector {
        let data: Vec<f64> = parts.iter().flat_map(|p| p.as_slice().iter().copied()).collect();
        Vector(DVector::from_vec(data))
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident, $op:tt) => {
        impl $trait<&Vector> for &Vector {
            type Output = Vector;
            fn $method(self, rhs: &Vector) -> Vector {
                assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
                Vector(&self.0 $op &rhs.0)
            }
        }
        impl $trait<Vector> for Vector {
            type Output = Vector;
            fn $method(self, rhs: Vector) -> Vector {
                &self $op &rhs
            }
        }
        impl $trait<&Vector> for Vector {
            type Output = Vector;
            fn $method(self, rhs: &Vector) -> Vector {
                &self $op rhs
            }
        }
        impl $trait<Vector> for &Vector {
            type Output = Vector;
            fn $method(self, rhs: Vector) -> Vector {
                self $op &rhs
            }
        }
    };
}

binop!(Add, add, +);
binop!(Sub, sub, -);

impl Mul<f64> for &Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        self.scale(s)
    }
}

impl Mul<f64> for Vector {
    type Output = Vector;
    fn mul(self, s: f64) -> Vector {
        Vector(self.0 * s)
    }
}

impl Mul<&Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: &Vector) -> Vector {
        v.scale(self)
    }
}

impl Mul<Vector> for f64 {
    type Output = Vector;
    fn mul(self, v: Vector) -> Vector {
        v * self
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(-&self.0)
    }
}

impl Neg for Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        Vector(-self.0)
    }
}

impl AddAssign<&Vector> for Vector {
    fn add_assign(&mut self, rhs: &Vector) {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        self.0 += &rhs.0;
    }
}

impl SubAssign<&Vector> for Vector {
    fn sub_assign(&mut self, rhs: &Vector) {
        assert_eq!(self.dim(), rhs.dim(), "vector dimension mismatch");
        self.0 -= &rhs.0;
    }
}

/// Checked inner product.
pub fn inner(x: &Vector, y: &Vector) -> Result<f64> {
    check_dim(x.dim(), y.dim())?;
    Ok(x.dot(y))
}

/// `v / ‖v‖`, or the zero vector when `v = 0`.
pub fn normalize_or_zero(v: &Vector) -> Vector {
    let n = v.norm();
    if n > 0.0 {
        v.scale(1.0 / n)
    } else {
        Vector::zeros(v.dim())
    }
}

/// Block layout of a product space: the list of block dimensions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout(Vec<usize>);

impl Layout {
    pub fn new(dims: Vec<usize>) -> Self {
        Layout(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.0
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Start offset of every block.
    pub fn offsets(&self) -> Vec<usize> {
        self.0
            .iter()
            .scan(0, |acc, &d| {
                let start = *acc;
                *acc += d;
                Some(start)
            })
            .collect()
    }
}

/// A point of a block product space `X_1 × … × X_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVector {
    blocks: Vec<Vector>,
    layout: Layout,
}

impl ProductVector {
    pub fn new(blocks: Vec<Vector>) -> Self {
        let layout = Layout::new(blocks.iter().map(Vector::dim).collect());
        ProductVector { blocks, layout }
    }

    pub fn zeros(layout: &Layout) -> Self {
        ProductVector::new(layout.dims().iter().map(|&d| Vector::zeros(d)).collect())
    }

    /// Re-split a flat vector according to `layout`.
    pub fn split(flat: &Vector, layout: &Layout) -> Result<Self> {
        check_dim(layout.total(), flat.dim())?;
        let blocks = layout
            .dims()
            .iter()
            .zip(layout.offsets())
            .map(|(&d, start)| flat.segment(start, d))
            .collect();
        Ok(ProductVector {
            blocks,
            layout: layout.clone(),
        })
    }

    pub fn flatten(&self) -> Vector {
        Vector::concat(&self.blocks)
    }

    pub fn blocks(&self) -> &[Vector] {
        &self.blocks
    }

    pub fn block(&self, i: usize) -> &Vector {
        &self.blocks[i]
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn inner(&self, other: &ProductVector) -> Result<f64> {
        if self.layout != other.layout {
            return Err(Error::DimensionMismatch {
                expected: self.layout.total(),
                found: other.layout.total(),
            });
        }
        Ok(self.blocks.iter().zip(&other.blocks).map(|(a, b)| a.dot(b)).sum())
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(Vector::norm_squared).sum::<f64>().sqrt()
    }
}

/// A bounded linear map between Euclidean spaces, stored densely
/// (rows = codomain dimension, columns = domain dimension).
#[derive(Clone, PartialEq)]
pub struct LinearMap(DMatrix<f64>);

impl LinearMap {
    /// Build from row-major rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
            return Err(Error::DimensionMismatch {
                expected: ncols,
                found: bad.len(),
            });
        }
        let data: Vec<f64> = rows.iter().flatten().copied().collect();
        if data.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(LinearMap(DMatrix::from_row_slice(nrows, ncols, &data)))
    }

    pub fn from_matrix(m: DMatrix<f64>) -> Result<Self> {
        if m.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("matrix entry".into()));
        }
        Ok(LinearMap(m))
    }

    pub fn identity(n: usize) -> Self {
        LinearMap(DMatrix::identity(n, n))
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        LinearMap(DMatrix::zeros(rows, cols))
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.0.nrows())
            .map(|i| self.0.row(i).iter().copied().collect())
            .collect()
    }

    /// Codomain dimension.
    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    /// Domain dimension.
    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn apply(&self, x: &Vector) -> Result<Vector> {
        check_dim(self.cols(), x.dim())?;
        Ok(Vector::from_dvector(&self.0 * x.as_dvector()))
    }

    pub fn adjoint(&self) -> LinearMap {
        LinearMap(self.0.transpose())
    }

    pub fn adjoint_apply(&self, v: &Vector) -> Result<Vector> {
        check_dim(self.rows(), v.dim())?;
        Ok(Vector::from_dvector(self.0.tr_mul(v.as_dvector())))
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        self.0.clone().singular_values().max()
    }

    /// Smallest eigenvalue of the symmetric part `(L + L*)/2`; the
    /// strong-monotonicity modulus of `x ↦ Lx` when the map is square.
    pub fn min_sym_eigenvalue(&self) -> Result<f64> {
        check_dim(self.rows(), self.cols())?;
        if self.0.is_empty() {
            return Ok(0.0);
        }
        let sym = (&self.0 + self.0.transpose()) * 0.5;
        Ok(sym.symmetric_eigenvalues().min())
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.rows() == self.cols() && (&self.0 - self.0.transpose()).amax() <= tol
    }
}

impl fmt::Debug for LinearMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.to_rows()).finish()
    }
}

/// Checked `L* v`.
pub fn adjoint_apply(l: &LinearMap, v: &Vector) -> Result<Vector> {
    l.adjoint_apply(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    #[test]
    fn inner_examples() {
        assert_eq!(inner(&v(&[1.0, 0.0]), &v(&[0.0, 1.0])).unwrap(), 0.0);
        assert_eq!(inner(&v(&[3.0, 4.0]), &v(&[3.0, 4.0])).unwrap(), 25.0);
        assert_eq!(inner(&v(&[1.0, 2.0, 3.0]), &v(&[4.0, 5.0, 6.0])).unwrap(), 32.0);
    }

    #[test]
    fn inner_rejects_mismatch() {
        let err = inner(&v(&[1.0]), &v(&[1.0, 2.0])).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 1, found: 2 });
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize_or_zero(&v(&[0.0, 0.0])), v(&[0.0, 0.0]));
        let u = normalize_or_zero(&v(&[3.0, 4.0]));
        assert!((u[0] - 0.6).abs() < 1e-15 && (u[1] - 0.8).abs() < 1e-15);
        assert_eq!(normalize_or_zero(&v(&[1.0, 0.0])), v(&[1.0, 0.0]));
    }

    #[test]
    fn adjoint_examples() {
        let id = LinearMap::identity(2);
        assert_eq!(adjoint_apply(&id, &v(&[1.0, 2.0])).unwrap(), v(&[1.0, 2.0]));
        let shift = LinearMap::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        assert_eq!(adjoint_apply(&shift, &v(&[1.0, 0.0])).unwrap(), v(&[0.0, 1.0]));
        let col = LinearMap::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert_eq!(adjoint_apply(&col, &v(&[1.0, 1.0])).unwrap(), v(&[3.0]));
        assert!(adjoint_apply(&col, &v(&[1.0])).is_err());
    }

    #[test]
    fn rejects_non_finite() {
        assert!(Vector::new(vec![1.0, f64::NAN]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(LinearMap::from_rows(&[vec![f64::NAN]]).is_err());
        assert!(LinearMap::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn double_adjoint_is_identity() {
        let l = LinearMap::from_rows(&[vec![1.0, 2.0, 3.0], vec![-4.0, 5.0, 0.5]]).unwrap();
        assert_eq!(l.adjoint().adjoint(), l);
    }

    #[test]
    fn layout_offsets() {
        let l = Layout::new(vec![2, 1, 3]);
        assert_eq!(l.offsets(), vec![0, 2, 3]);
        assert_eq!(l.total(), 6);
    }
}
