//! Oracles for maximally monotone operators.
//!
//! Set-valued operators are represented only through their scaled
//! resolvents `J_{γA} = (Id + γA)^{-1}`; single-valued operators through
//! evaluation plus declared constants.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, check_gamma, Result};
use crate::space::Vector;

pub(crate) mod catalog;
mod library;
mod sets;

pub use catalog::{standard_library, OperatorCatalog, Param, Params};
pub use library::{
    Affine, Constant, Inverse, L1Norm, ProductMap, ProductOperator, ScaledIdentity, Shifted, SumMap,
    Zero,
};
pub use sets::{AffineSubspace, Ball, BoxSet, ConvexSet, HalfSpace, NormalCone};

/// Affine representation `x ↦ M x + b`.
pub type AffineForm = (DMatrix<f64>, DVector<f64>);

/// A maximally monotone operator `A`, known through its resolvents.
pub trait SetValued: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// `J_{γA} x`. Inputs are validated by [`resolvent`].
    fn resolve(&self, gamma: f64, x: &Vector) -> Result<Vector>;

    fn as_product(&self) -> Option<&ProductOperator> {
        None
    }

    /// `Some((M, b))` when `A` is single-valued and affine.
    fn affine_form(&self) -> Option<AffineForm> {
        None
    }
}

/// A monotone Lipschitz single-valued operator with declared constants.
pub trait SingleValued: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Evaluate. Panics on dimension mismatch; see [`evaluate`].
    fn apply(&self, x: &Vector) -> Vector;

    /// Declared Lipschitz constant.
    fn lipschitz(&self) -> f64;

    /// Declared strong-monotonicity modulus (zero when merely monotone).
    fn strong_monotonicity(&self) -> f64 {
        0.0
    }

    fn is_monotone(&self) -> bool {
        true
    }

    fn affine_form(&self) -> Option<AffineForm> {
        None
    }
}

/// Checked `J_{γA} x`.
pub fn resolvent(a: &dyn SetValued, gamma: f64, x: &Vector) -> Result<Vector> {
    check_gamma(gamma)?;
    check_dim(a.dim(), x.dim())?;
    a.resolve(gamma, x)
}

/// `J_{γA^{-1}} x = x − γ J_{γ^{-1}A}(x/γ)`.
pub fn inverse_resolvent(a: &dyn SetValued, gamma: f64, x: &Vector) -> Result<Vector> {
    check_gamma(gamma)?;
    check_dim(a.dim(), x.dim())?;
    let inner = a.resolve(1.0 / gamma, &x.scale(1.0 / gamma))?;
    Ok(x.add_scaled(-gamma, &inner))
}

/// Checked evaluation of a single-valued operator.
pub fn evaluate(b: &dyn SingleValued, x: &Vector) -> Result<Vector> {
    check_dim(b.dim(), x.dim())?;
    Ok(b.apply(x))
}

/// A pair `(y, y*)` in the graph of an operator `M`.
///
/// Kernel routines emit these with a membership guarantee. The public
/// constructor exists for callers that certify membership themselves.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphPoint {
    y: Vector,
    y_star: Vector,
}

impl GraphPoint {
    pub fn new(y: Vector, y_star: Vector) -> Result<Self> {
        check_dim(y.dim(), y_star.dim())?;
        Ok(GraphPoint { y, y_star })
    }

    pub fn y(&self) -> &Vector {
        &self.y
    }

    pub fn y_star(&self) -> &Vector {
        &self.y_star
    }

    pub fn into_parts(self) -> (Vector, Vector) {
        (self.y, self.y_star)
    }
}

/// Shared handle types.
pub type SetRef = Arc<dyn SetValued>;
pub type MapRef = Arc<dyn SingleValued>;
