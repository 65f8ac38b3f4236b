//! Kernels registered by name.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::families::{fbf_kernel, CubicShear, MapKernel, ScaledKernel};
use super::KernelRef;
use crate::error::{check_dim, Error, Result};
use crate::operators::catalog::{allow, matrix, number, number_or};
use crate::operators::{Affine, MapRef, Params, ScaledIdentity, Zero};
use crate::space::LinearMap;

/// What a kernel constructor knows about the problem it serves.
#[derive(Debug, Clone)]
pub struct KernelContext {
    pub dim: usize,
    /// Forward part `B` of `M`, if any.
    pub forward: Option<MapRef>,
    /// Warped step size, used as default where a kernel needs one.
    pub gamma: Option<f64>,
}

type KernelCtor = Box<dyn Fn(&Params, &KernelContext) -> Result<KernelRef> + Send + Sync>;

pub struct KernelCatalog {
    entries: BTreeMap<String, KernelCtor>,
}

impl std::fmt::Debug for KernelCatalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.entries.keys()).finish()
    }
}

impl KernelCatalog {
    pub fn empty() -> Self {
        KernelCatalog {
            entries: BTreeMap::new(),
        }
    }

    pub fn register<F>(&mut self, name: &str, ctor: F)
    where
        F: Fn(&Params, &KernelContext) -> Result<KernelRef> + Send + Sync + 'static,
    {
        self.entries.insert(name.to_string(), Box::new(ctor));
    }

    pub fn build(&self, name: &str, params: &Params, ctx: &KernelContext) -> Result<KernelRef> {
        let ctor = self.entries.get(name).ok_or_else(|| Error::UnknownName {
            kind: "kernel",
            name: name.to_string(),
        })?;
        let k = ctor(params, ctx)?;
        check_dim(ctx.dim, k.dim())?;
        Ok(k)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Built-in kernels: `identity`, `scaled_identity` (`c`), `affine`
/// (`matrix`, strongly monotone), `fbf` (`gamma`, `epsilon`, optional
/// `w_matrix` or `w_scale`), `cubic_shear` (`region_radius`).
pub fn standard_kernels() -> KernelCatalog {
    let mut c = KernelCatalog::empty();
    c.register("identity", |p, ctx| {
        allow(p, "identity", &[])?;
        Ok(Arc::new(ScaledKernel::identity(ctx.dim)))
    });
    c.register("scaled_identity", |p, ctx| {
        allow(p, "scaled_identity", &["c"])?;
        Ok(Arc::new(ScaledKernel::new(ctx.dim, number(p, "scaled_identity", "c")?)?))
    });
    c.register("affine", |p, ctx| {
        allow(p, "affine", &["matrix"])?;
        let m = LinearMap::from_rows(&matrix(p, "affine", "matrix")?)?;
        check_dim(ctx.dim, m.rows())?;
        Ok(Arc::new(MapKernel::new(Arc::new(Affine::linear(m)?))?))
    });
    c.register("fbf", |p, ctx| {
        allow(p, "fbf", &["gamma", "epsilon", "w_matrix", "w_scale"])?;
        let w: MapRef = match (p.get("w_matrix"), p.get("w_scale")) {
            (Some(_), Some(_)) => {
                return Err(Error::config("fbf kernel takes either w_matrix or w_scale, not both"))
            }
            (Some(_), None) => {
                let m = LinearMap::from_rows(&matrix(p, "fbf", "w_matrix")?)?;
                Arc::new(Affine::linear(m)?)
            }
            (None, _) => Arc::new(ScaledIdentity::new(ctx.dim, number_or(p, "fbf", "w_scale", 1.0)?)?),
        };
        let gamma = match (p.get("gamma"), ctx.gamma) {
            (Some(_), _) => number(p, "fbf", "gamma")?,
            (None, Some(g)) => g,
            (None, None) => number(p, "fbf", "gamma")?,
        };
        let epsilon = number(p, "fbf", "epsilon")?;
        let b: MapRef = ctx.forward.clone().unwrap_or_else(|| Arc::new(Zero::new(ctx.dim)));
        Ok(Arc::new(fbf_kernel(w, b, gamma, epsilon)?))
    });
    c.register("cubic_shear", |p, ctx| {
        allow(p, "cubic_shear", &["region_radius"])?;
        check_dim(2, ctx.dim)?;
        let r = number_or(p, "cubic_shear", "region_radius", 3.0)?;
        Ok(Arc::new(MapKernel::new(Arc::new(CubicShear::new(r)?))?))
    });
    c
}
