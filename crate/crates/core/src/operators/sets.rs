//! Closed convex sets with closed-form projections, and their normal cones.

use std::fmt;

use nalgebra::DMatrix;

use super::{AffineForm, SetValued};
use crate::error::{check_dim, Error, Result};
use crate::space::{LinearMap, Vector};

/// A nonempty closed convex set with an exact projector.
pub trait ConvexSet: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    fn project(&self, x: &Vector) -> Vector;
}

/// The normal cone `N_C`; its resolvent is `proj_C` for every step size.
#[derive(Debug, Clone)]
pub struct NormalCone<S> {
    set: S,
    label: String,
}

impl<S: ConvexSet> NormalCone<S> {
    pub fn new(set: S) -> Self {
        let label = format!("normal_cone({})", set.name());
        NormalCone { set, label }
    }

    pub fn set(&self) -> &S {
        &self.set
    }
}

impl<S: ConvexSet> SetValued for NormalCone<S> {
    fn name(&self) -> &str {
        &self.label
    }

    fn dim(&self) -> usize {
        self.set.dim()
    }

    fn resolve(&self, _gamma: f64, x: &Vector) -> Result<Vector> {
        Ok(self.set.project(x))
    }
}

/// Axis-aligned box `{x : lower ≤ x ≤ upper}`; infinite bounds allowed.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxSet {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl BoxSet {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        for (i, (l, u)) in lower.iter().zip(&upper).enumerate() {
            if l.is_nan() || u.is_nan() {
                return Err(Error::NonFinite(format!("box bound {i}")));
            }
            if l > u || *l == f64::INFINITY || *u == f64::NEG_INFINITY {
                return Err(Error::config(format!("empty box in coordinate {i}: [{l}, {u}]")));
            }
        }
        Ok(BoxSet { lower, upper })
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }
}

impl ConvexSet for BoxSet {
    fn name(&self) -> &str {
        "box"
    }

    fn dim(&self) -> usize {
        self.lower.len()
    }

    fn project(&self, x: &Vector) -> Vector {
        let clamped: Vec<f64> = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&c, (&l, &u))| c.max(l).min(u))
            .collect();
        Vector::new(clamped).expect("clamping preserves finiteness")
    }
}

/// Closed Euclidean ball; radius zero gives a single point.
#[derive(Debug, Clone, PartialEq)]
pub struct Ball {
    center: Vector,
    radius: f64,
}

impl Ball {
    pub fn new(center: Vector, radius: f64) -> Result<Self> {
        if !(radius.is_finite() && radius >= 0.0) {
            return Err(Error::config(format!("ball radius must be nonnegative, got {radius}")));
        }
        Ok(Ball { center, radius })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }
}

impl ConvexSet for Ball {
    fn name(&self) -> &str {
        if self.radius == 0.0 {
            "point"
        } else {
            "ball"
        }
    }

    fn dim(&self) -> usize {
        self.center.dim()
    }

    fn project(&self, x: &Vector) -> Vector {
        let d = x - &self.center;
        let n = d.norm();
        if n <= self.radius {
            x.clone()
        } else {
            self.center.add_scaled(self.radius / n, &d)
        }
    }
}

/// Half-space `{x : ⟨a, x⟩ ≤ b}` with `a ≠ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpace {
    normal: Vector,
    offset: f64,
}

impl HalfSpace {
    pub fn new(normal: Vector, offset: f64) -> Result<Self> {
        if normal.norm() == 0.0 {
            return Err(Error::config("half-space normal must be nonzero"));
        }
        if !offset.is_finite() {
            return Err(Error::NonFinite("half-space offset".into()));
        }
        Ok(HalfSpace { normal, offset })
    }

    pub fn normal(&self) -> &Vector {
        &self.normal
    }

    pub fn offset(&self) -> f64 {
        self.offset
    }
}

impl ConvexSet for HalfSpace {
    fn name(&self) -> &str {
        "halfspace"
    }

    fn dim(&self) -> usize {
        self.normal.dim()
    }

    fn project(&self, x: &Vector) -> Vector {
        let excess = self.normal.dot(x) - self.offset;
        if excess <= 0.0 {
            x.clone()
        } else {
            x.add_scaled(-excess / self.normal.norm_squared(), &self.normal)
        }
    }
}

/// Affine subspace `{x : A x = b}`, projected through the pseudo-inverse
/// of `A` computed once at construction.
#[derive(Debug, Clone)]
pub struct AffineSubspace {
    a: LinearMap,
    b: Vector,
    pinv: DMatrix<f64>,
}

impl AffineSubspace {
    pub fn new(a: LinearMap, b: Vector) -> Result<Self> {
        check_dim(a.rows(), b.dim())?;
        let m = a.matrix();
        let tol = 1e-12 * m.amax().max(1.0) * (m.nrows().max(m.ncols()) as f64);
        let pinv = m
            .clone()
            .pseudo_inverse(tol)
            .map_err(|e| Error::Singular(e.to_string()))?;
        let bv = b.as_dvector();
        let fit = m * (&pinv * bv) - bv;
        if fit.norm() > 1e-9 * (1.0 + bv.norm()) {
            return Err(Error::config("affine subspace is empty: right-hand side not in the range"));
        }
        Ok(AffineSubspace { a, b, pinv })
    }

    pub fn matrix(&self) -> &LinearMap {
        &self.a
    }

    pub fn rhs(&self) -> &Vector {
        &self.b
    }

    /// The projector in matrix form `x ↦ P x + q`.
    pub fn projector(&self) -> AffineForm {
        let n = self.a.cols();
        let p = DMatrix::identity(n, n) - &self.pinv * self.a.matrix();
        let q = &self.pinv * self.b.as_dvector();
        (p, q)
    }
}

impl ConvexSet for AffineSubspace {
    fn name(&self) -> &str {
        "affine_subspace"
    }

    fn dim(&self) -> usize {
        self.a.cols()
    }

    fn project(&self, x: &Vector) -> Vector {
        let r = self.a.matrix() * x.as_dvector() - self.b.as_dvector();
        x - Vector::from_dvector(&self.pinv * r)
    }
}
