//! Inner solver for `G(p) + γA(p) ∋ v` with `G` strongly monotone and
//! Lipschitz, used when no closed form applies.
//!
//! Affine `G` with affine `A` is a single LU solve. Otherwise damped
//! Newton steps on `p − T(p)`, with `T(p) = J_{σγA}(p − σ(G p − v))` and a
//! finite-difference Jacobian, are tried first; when they fail to reduce
//! the residual a contracting forward-backward step is taken instead.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::operators::{AffineForm, SetValued};
use crate::space::Vector;

pub(crate) const TOLERANCE: f64 = 1e-12;
pub(crate) const MAX_ITERATIONS: usize = 200;
const NEWTON_MAX_DIM: usize = 64;

/// The single-valued part of the inner inclusion.
pub(crate) struct Smooth<'a> {
    pub eval: &'a dyn Fn(&Vector) -> Vector,
    pub alpha: f64,
    pub lipschitz: f64,
    pub affine: Option<AffineForm>,
}

pub(crate) fn solve(
    g: &Smooth<'_>,
    gamma: f64,
    a: &dyn SetValued,
    v: &Vector,
    guess: &Vector,
) -> Result<Vector> {
    if let (Some((gm, gc)), Some((am, ad))) = (&g.affine, a.affine_form()) {
        let lhs = gm + am * gamma;
        let rhs = v.as_dvector() - gc - ad * gamma;
        return lhs
            .lu()
            .solve(&rhs)
            .map(Vector::from_dvector)
            .ok_or_else(|| Error::Singular("affine inner system".into()));
    }
    if !(g.alpha > 0.0) {
        return Err(Error::config(
            "backward solve needs a strongly monotone base part",
        ));
    }
    let l = g.lipschitz.max(g.alpha);
    let symmetric = g
        .affine
        .as_ref()
        .is_some_and(|(m, _)| (m - m.transpose()).amax() <= 1e-14 * m.amax().max(1.0));
    // contraction step for the fallback iteration
    let tau = if symmetric {
        2.0 / (g.alpha + l)
    } else {
        g.alpha / (l * l)
    };
    // step of the map whose fixed-point residual Newton drives to zero
    let sigma = 1.0 / l;
    let tol = TOLERANCE * (1.0 + v.norm());

    let map = |s: f64, p: &Vector, gp: &Vector| -> Result<Vector> {
        a.resolve(s * gamma, &p.add_scaled(-s, &(gp - v)))
    };
    let newton_map = |p: &Vector| -> Result<Vector> { map(sigma, p, &(g.eval)(p)) };

    let mut p = guess.clone();
    let mut gp = (g.eval)(&p);
    let mut iterations = 0;
    loop {
        // For p⁺ = T(p): (p − p⁺)/σ − (G p − G p⁺) ∈ v − (G + γA) p⁺.
        let tp = map(sigma, &p, &gp)?;
        if !tp.is_finite() {
            return Err(Error::NonFinite("inner solve iterate".into()));
        }
        let gtp = (g.eval)(&tp);
        let certified = ((&p - &tp).scale(1.0 / sigma) - (&gp - &gtp)).norm();
        if certified <= tol || p == tp {
            return Ok(tp);
        }
        if iterations >= MAX_ITERATIONS {
            return Err(Error::InnerSolve {
                iterations,
                residual: certified,
            });
        }
        iterations += 1;

        let fixed_res = (&p - &tp).norm();
        if p.dim() <= NEWTON_MAX_DIM {
            if let Some(q) = newton(&newton_map, &p, &tp, fixed_res)? {
                gp = (g.eval)(&q);
                p = q;
                continue;
            }
        }
        let next = map(tau, &p, &gp)?;
        gp = (g.eval)(&next);
        p = next;
    }
}

/// A damped Newton step on `p − T(p)`, or `None` when no step along the
/// Newton direction reduces the residual.
fn newton(
    map: &dyn Fn(&Vector) -> Result<Vector>,
    p: &Vector,
    tp: &Vector,
    fixed_res: f64,
) -> Result<Option<Vector>> {
    let n = p.dim();
    let f0 = p - tp;
    let mut jac = DMatrix::zeros(n, n);
    let scale = fixed_res.sqrt().clamp(1e-9, 1e-6);
    for i in 0..n {
        let h = scale * p[i].abs().max(1.0);
        let mut shifted = p.to_vec();
        shifted[i] += h;
        let q = Vector::new(shifted)?;
        let fq = &q - map(&q)?;
        let col = (fq - &f0).scale(1.0 / h);
        jac.set_column(i, col.as_dvector());
    }
    let Some(d) = jac.lu().solve(&(-f0.as_dvector())) else {
        return Ok(None);
    };
    let d = Vector::from_dvector(d);
    if !d.is_finite() {
        return Ok(None);
    }
    let mut t = 1.0;
    for _ in 0..12 {
        let q = p.add_scaled(t, &d);
        let rq = (&q - map(&q)?).norm();
        if rq <= (1.0 - 1e-4 * t) * fixed_res {
            return Ok(Some(q));
        }
        t *= 0.5;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{Ball, BoxSet, NormalCone, Zero};

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    #[test]
    fn nonlinear_base_with_projection() {
        // G(p) = p³ + p (componentwise), A = N_[0,1]^2
        let eval = |p: &Vector| p.map(|c| c * c * c + c);
        let g = Smooth {
            eval: &eval,
            alpha: 1.0,
            lipschitz: 28.0,
            affine: None,
        };
        let a = NormalCone::new(BoxSet::new(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        let target = v(&[10.0, 0.5]);
        let p = solve(&g, 1.0, &a, &target, &Vector::zeros(2)).unwrap();
        // first coordinate clamps at 1; second solves c³ + c = 0.5
        assert!((p[0] - 1.0).abs() < 1e-12);
        let c = p[1];
        assert!((c * c * c + c - 0.5).abs() < 1e-11);
    }

    #[test]
    fn affine_pair_is_direct() {
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 2.0]);
        let eval = |p: &Vector| Vector::from_dvector(&m * p.as_dvector());
        let g = Smooth {
            eval: &eval,
            alpha: 2.0,
            lipschitz: 5f64.sqrt(),
            affine: Some((m.clone(), nalgebra::DVector::zeros(2))),
        };
        let p = solve(&g, 1.0, &Zero::new(2), &v(&[3.0, 1.0]), &Vector::zeros(2)).unwrap();
        assert!(((&m * p.as_dvector()) - v(&[3.0, 1.0]).as_dvector()).norm() < 1e-14);
    }

    #[test]
    fn reports_non_convergence_without_newton() {
        // a rotation-dominated base in high dimension converges too slowly
        let n = NEWTON_MAX_DIM + 1;
        let mut m = DMatrix::identity(n, n) * 0.01;
        for i in 0..n - 1 {
            m[(i, i + 1)] = 1.0;
            m[(i + 1, i)] = -1.0;
        }
        let eval = |p: &Vector| Vector::from_dvector(&m * p.as_dvector());
        let g = Smooth {
            eval: &eval,
            alpha: 0.01,
            lipschitz: 2.01,
            affine: Some((m.clone(), nalgebra::DVector::zeros(n))),
        };
        let a = NormalCone::new(Ball::new(Vector::zeros(n), 0.5).unwrap());
        let err = solve(&g, 1.0, &a, &Vector::basis(n, 0), &Vector::zeros(n)).unwrap_err();
        assert!(matches!(err, Error::InnerSolve { .. }));
    }
}
