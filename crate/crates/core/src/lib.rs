//! Warped-resolvent splitting methods for monotone inclusions in finite
//! dimensions.
//!
//! The crate is organized bottom-up: [`space`] holds vectors and linear
//! maps, [`operators`] the resolvent and evaluation oracles, [`kernels`]
//! the warping kernels and warped resolvents, [`fejer`] the half-space
//! projection primitives, and [`algorithms`] the iterative solvers.
//!
//! ```
//! use std::sync::Arc;
//! use warpres::algorithms::{solve_weak, KernelSchedule, PerturbationPolicy, SolverConfig};
//! use warpres::kernels::{MDecomposition, ScaledKernel};
//! use warpres::operators::{Ball, NormalCone};
//! use warpres::Vector;
//!
//! # fn main() -> warpres::Result<()> {
//! let ball = Ball::new(Vector::zeros(2), 1.0)?;
//! let m = MDecomposition::set_only(Arc::new(NormalCone::new(ball)));
//! let k = KernelSchedule::Fixed(Arc::new(ScaledKernel::identity(2)));
//! let x0 = Vector::from_slice(&[3.0, 4.0])?;
//! let report = solve_weak(&m, &k, &PerturbationPolicy::None, &SolverConfig::default(), &x0)?;
//! assert!(report.converged());
//! assert!((report.point.norm() - 1.0).abs() < 1e-12);
//! # Ok(())
//! # }
//! ```

pub mod algorithms;
pub mod error;
pub mod fejer;
pub mod kernels;
pub mod operators;
pub mod space;

pub use error::{Error, ErrorClass, Result};
pub use operators::{GraphPoint, SetValued, SingleValued};
pub use space::{LinearMap, ProductVector, Vector};
