//! Operators registered by name, built from loosely typed parameter maps.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::library::{Affine, Constant, L1Norm, ScaledIdentity, Zero};
use super::sets::{AffineSubspace, Ball, BoxSet, HalfSpace, NormalCone};
use super::{MapRef, SetRef};
use crate::error::{check_dim, Error, Result};
use crate::space::{LinearMap, Vector};

/// A parameter value from a problem description.
#[derive(Debug, Clone, PartialEq)]
pub enum Param {
    Number(f64),
    List(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
    Text(String),
}

pub type Params = BTreeMap<String, Param>;

type SetCtor = Box<dyn Fn(&Params, usize) -> Result<SetRef> + Send + Sync>;
type MapCtor = Box<dyn Fn(&Params, usize) -> Result<MapRef> + Send + Sync>;

/// Name → constructor tables for set-valued and single-valued operators.
///
/// Constructors receive the parameters and the dimension of the space the
/// operator must act on.
pub struct OperatorCatalog {
    sets: BTreeMap<String, SetCtor>,
    maps: BTreeMap<String, MapCtor>,
}

impl std::fmt::Debug for OperatorCatalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("OperatorCatalog")
            .field("set_valued", &self.sets.keys().collect::<Vec<_>>())
            .field("single_valued", &self.maps.keys().collect::<Vec<_>>())
            .finish()
    }
}

impl OperatorCatalog {
    pub fn empty() -> Self {
        OperatorCatalog {
            sets: BTreeMap::new(),
            maps: BTreeMap::new(),
        }
    }

    pub fn register_set<F>(&mut self, name: &str, ctor: F)
    where
        F: Fn(&Params, usize) -> Result<SetRef> + Send + Sync + 'static,
    {
        self.sets.insert(name.to_string(), Box::new(ctor));
    }

    pub fn register_map<F>(&mut self, name: &str, ctor: F)
    where
        F: Fn(&Params, usize) -> Result<MapRef> + Send + Sync + 'static,
    {
        self.maps.insert(name.to_string(), Box::new(ctor));
    }

    pub fn set_valued(&self, name: &str, params: &Params, dim: usize) -> Result<SetRef> {
        let ctor = self.sets.get(name).ok_or_else(|| Error::UnknownName {
            kind: "set-valued operator",
            name: name.to_string(),
        })?;
        let op = ctor(params, dim)?;
        check_dim(dim, op.dim())?;
        Ok(op)
    }

    pub fn single_valued(&self, name: &str, params: &Params, dim: usize) -> Result<MapRef> {
        let ctor = self.maps.get(name).ok_or_else(|| Error::UnknownName {
            kind: "single-valued operator",
            name: name.to_string(),
        })?;
        let op = ctor(params, dim)?;
        check_dim(dim, op.dim())?;
        if !op.is_monotone() {
            return Err(Error::config(format!("operator `{name}` is not monotone")));
        }
        Ok(op)
    }

    pub fn set_names(&self) -> impl Iterator<Item = &str> {
        self.sets.keys().map(String::as_str)
    }

    pub fn map_names(&self) -> impl Iterator<Item = &str> {
        self.maps.keys().map(String::as_str)
    }
}

/// The built-in operator catalog.
///
/// Set-valued: `zero`, `scaled_identity`, `box`, `ball`, `point`,
/// `halfspace`, `affine_subspace`, `l1`, `affine`, `constant`.
/// Single-valued: `zero`, `scaled_identity`, `affine`.
pub fn standard_library() -> OperatorCatalog {
    let mut c = OperatorCatalog::empty();

    c.register_set("zero", |p, dim| {
        allow(p, "zero", &[])?;
        Ok(Arc::new(Zero::new(dim)))
    });
    c.register_set("scaled_identity", |p, dim| {
        allow(p, "scaled_identity", &["c"])?;
        let factor = number_or(p, "scaled_identity", "c", 1.0)?;
        Ok(Arc::new(ScaledIdentity::new(dim, factor)?))
    });
    c.register_set("box", |p, dim| {
        allow(p, "box", &["lower", "upper"])?;
        let lower = broadcast(p, "box", "lower", dim, f64::NEG_INFINITY)?;
        let upper = broadcast(p, "box", "upper", dim, f64::INFINITY)?;
        Ok(Arc::new(NormalCone::new(BoxSet::new(lower, upper)?)))
    });
    c.register_set("ball", |p, dim| {
        allow(p, "ball", &["center", "radius"])?;
        let center = Vector::new(broadcast(p, "ball", "center", dim, 0.0)?)?;
        let radius = number_or(p, "ball", "radius", 1.0)?;
        Ok(Arc::new(NormalCone::new(Ball::new(center, radius)?)))
    });
    c.register_set("point", |p, dim| {
        allow(p, "point", &["at"])?;
        let at = Vector::new(broadcast(p, "point", "at", dim, 0.0)?)?;
        Ok(Arc::new(NormalCone::new(Ball::new(at, 0.0)?)))
    });
    c.register_set("halfspace", |p, dim| {
        allow(p, "halfspace", &["normal", "offset"])?;
        let normal = Vector::new(list(p, "halfspace", "normal")?)?;
        check_dim(dim, normal.dim())?;
        let offset = number_or(p, "halfspace", "offset", 0.0)?;
        Ok(Arc::new(NormalCone::new(HalfSpace::new(normal, offset)?)))
    });
    c.register_set("affine_subspace", |p, _dim| {
        allow(p, "affine_subspace", &["matrix", "rhs"])?;
        let a = LinearMap::from_rows(&matrix(p, "affine_subspace", "matrix")?)?;
        let rows = a.rows();
        let rhs = Vector::new(broadcast(p, "affine_subspace", "rhs", rows, 0.0)?)?;
        Ok(Arc::new(NormalCone::new(AffineSubspace::new(a, rhs)?)))
    });
    c.register_set("l1", |p, dim| {
        allow(p, "l1", &["weight"])?;
        let weight = number_or(p, "l1", "weight", 1.0)?;
        Ok(Arc::new(L1Norm::new(dim, weight)?))
    });
    c.register_set("affine", |p, dim| {
        let op = affine(p, dim)?;
        if !super::SingleValued::is_monotone(&op) {
            return Err(Error::config("affine operator is not monotone"));
        }
        Ok(Arc::new(op))
    });
    c.register_set("constant", |p, dim| {
        allow(p, "constant", &["value"])?;
        Ok(Arc::new(Constant::new(Vector::new(broadcast(
            p, "constant", "value", dim, 0.0,
        )?)?)))
    });

    c.register_map("zero", |p, dim| {
        allow(p, "zero", &[])?;
        Ok(Arc::new(Zero::new(dim)))
    });
    c.register_map("scaled_identity", |p, dim| {
        allow(p, "scaled_identity", &["c"])?;
        let factor = number_or(p, "scaled_identity", "c", 1.0)?;
        Ok(Arc::new(ScaledIdentity::new(dim, factor)?))
    });
    c.register_map("affine", |p, dim| Ok(Arc::new(affine(p, dim)?)));

    c
}

fn affine(p: &Params, dim: usize) -> Result<Affine> {
    allow(p, "affine", &["matrix", "shift"])?;
    let m = LinearMap::from_rows(&matrix(p, "affine", "matrix")?)?;
    check_dim(dim, m.rows())?;
    let b = Vector::new(broadcast(p, "affine", "shift", dim, 0.0)?)?;
    Affine::new(m, b)
}

fn bad(name: &str, param: &str, reason: impl Into<String>) -> Error {
    Error::Parameter {
        name: name.to_string(),
        param: param.to_string(),
        reason: reason.into(),
    }
}

/// Reject parameters the constructor does not understand.
pub(crate) fn allow(p: &Params, name: &str, known: &[&str]) -> Result<()> {
    match p.keys().find(|k| !known.contains(&k.as_str())) {
        Some(k) => Err(bad(name, k, format!("unexpected parameter; expected one of {known:?}"))),
        None => Ok(()),
    }
}

pub(crate) fn number_or(p: &Params, name: &str, key: &str, default: f64) -> Result<f64> {
    match p.get(key) {
        None => Ok(default),
        Some(Param::Number(v)) if v.is_finite() => Ok(*v),
        Some(_) => Err(bad(name, key, "expected a finite number")),
    }
}

pub(crate) fn number(p: &Params, name: &str, key: &str) -> Result<f64> {
    match p.get(key) {
        None => Err(bad(name, key, "missing")),
        Some(_) => number_or(p, name, key, 0.0),
    }
}

pub(crate) fn list(p: &Params, name: &str, key: &str) -> Result<Vec<f64>> {
    match p.get(key) {
        Some(Param::List(v)) => Ok(v.clone()),
        Some(Param::Number(v)) => Ok(vec![*v]),
        Some(_) => Err(bad(name, key, "expected a list of numbers")),
        None => Err(bad(name, key, "missing")),
    }
}

/// A vector parameter; a single number is repeated `dim` times.
pub(crate) fn broadcast(p: &Params, name: &str, key: &str, dim: usize, default: f64) -> Result<Vec<f64>> {
    let v = match p.get(key) {
        None => vec![default; dim],
        Some(Param::Number(v)) => vec![*v; dim],
        Some(Param::List(v)) => v.clone(),
        Some(_) => return Err(bad(name, key, "expected a number or a list")),
    };
    if v.len() != dim {
        return Err(bad(name, key, format!("expected {dim} entries, found {}", v.len())));
    }
    Ok(v)
}

pub(crate) fn matrix(p: &Params, name: &str, key: &str) -> Result<Vec<Vec<f64>>> {
    match p.get(key) {
        Some(Param::Matrix(m)) => Ok(m.clone()),
        Some(Param::List(row)) => Ok(vec![row.clone()]),
        Some(Param::Number(v)) => Ok(vec![vec![*v]]),
        Some(_) => Err(bad(name, key, "expected a matrix (list of rows)")),
        None => Err(bad(name, key, "missing")),
    }
}
