//! Half-space cuts induced by graph points and the projection steps built
//! on them.

use crate::error::{check_dim, Error, Result};
use crate::operators::GraphPoint;
use crate::space::Vector;

/// The half-space `H = {z : ⟨z − y, y*⟩ ≤ 0}`. With `y* = 0` it is the
/// whole space.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfSpaceCut {
    y: Vector,
    y_star: Vector,
}

impl HalfSpaceCut {
    pub fn new(y: Vector, y_star: Vector) -> Result<Self> {
        check_dim(y.dim(), y_star.dim())?;
        Ok(HalfSpaceCut { y, y_star })
    }

    pub fn from_graph_point(gp: &GraphPoint) -> Self {
        HalfSpaceCut {
            y: gp.y().clone(),
            y_star: gp.y_star().clone(),
        }
    }

    /// `⟨z − y, y*⟩`; nonpositive exactly on the cut.
    pub fn slack(&self, z: &Vector) -> f64 {
        (z - &self.y).dot(&self.y_star)
    }

    pub fn contains(&self, z: &Vector, tol: f64) -> bool {
        self.slack(z) <= tol
    }

    pub fn project(&self, x: &Vector) -> Vector {
        cut_step(x, &self.y, &self.y_star, 1.0)
    }
}

fn cut_step(x: &Vector, y: &Vector, y_star: &Vector, lambda: f64) -> Vector {
    let gap = (y - x).dot(y_star);
    if gap < 0.0 {
        x.add_scaled(lambda * gap / y_star.norm_squared(), y_star)
    } else {
        x.clone()
    }
}

/// `x + λ⟨y − x, y*⟩/‖y*‖² · y*` when `⟨y − x, y*⟩ < 0`, otherwise `x`.
pub fn relaxed_projection_step(x: &Vector, gp: &GraphPoint, lambda: f64) -> Result<Vector> {
    if !(lambda > 0.0 && lambda < 2.0) {
        return Err(Error::config(format!("relaxation must lie in ]0, 2[, got {lambda}")));
    }
    check_dim(gp.y().dim(), x.dim())?;
    Ok(cut_step(x, gp.y(), gp.y_star(), lambda))
}

/// Arguments of the Haugazeau projector: anchor, current point, candidate.
#[derive(Debug, Clone, PartialEq)]
pub struct HaugazeauTriple {
    pub x0: Vector,
    pub x: Vector,
    pub x_half: Vector,
}

impl HaugazeauTriple {
    pub fn new(x0: Vector, x: Vector, x_half: Vector) -> Result<Self> {
        check_dim(x0.dim(), x.dim())?;
        check_dim(x0.dim(), x_half.dim())?;
        Ok(HaugazeauTriple { x0, x, x_half })
    }
}

/// Projection of `x0` onto `{z : ⟨z − x, x0 − x⟩ ≤ 0} ∩ {z : ⟨z − x½, x − x½⟩ ≤ 0}`.
///
/// Fails with [`Error::Infeasible`] when the two half-spaces are disjoint.
pub fn haugazeau_q(t: &HaugazeauTriple) -> Result<Vector> {
    let HaugazeauTriple { x0, x, x_half } = t;
    let a = x0 - x;
    let b = x - x_half;
    let chi = a.dot(&b);
    let mu = a.norm_squared();
    let nu = b.norm_squared();
    // ρ = μν − χ² = μ‖r‖² with r the part of b orthogonal to a; forming r
    // avoids the cancellation when the cuts are nearly parallel
    let r = if mu > 0.0 { b.add_scaled(-chi / mu, &a) } else { Vector::zeros(b.dim()) };
    let rr = r.norm_squared();
    let rho = mu * rr;
    if rr <= 1e-14 * nu {
        if chi < 0.0 {
            return Err(Error::Infeasible { chi, rho });
        }
        return Ok(x_half.clone());
    }
    if chi * nu >= rho {
        Ok(x0.add_scaled(1.0 + chi / nu, &(x_half - x)))
    } else {
        Ok(x.add_scaled(-nu / rr, &r))
    }
}

/// Projection of `x` onto the averaged cut `{z : ⟨z, Σω_i y*_i⟩ ≤ Σω_i⟨y_i, y*_i⟩}`.
pub fn multipoint_step(x: &Vector, points: &[(GraphPoint, f64)]) -> Result<Vector> {
    if points.is_empty() {
        return Err(Error::config("multi-point step needs at least one graph point"));
    }
    let mut total = 0.0;
    for (gp, w) in points {
        check_dim(x.dim(), gp.y().dim())?;
        if !(*w > 0.0) {
            return Err(Error::config(format!("weights must be positive, got {w}")));
        }
        total += w;
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::config(format!("weights must sum to 1, got {total}")));
    }
    let mut y_star = Vector::zeros(x.dim());
    let mut excess = 0.0;
    let mut numer = 0.0;
    for (gp, w) in points {
        y_star = y_star.add_scaled(*w, gp.y_star());
        let d = gp.y() - x;
        let s = d.dot(gp.y_star());
        excess -= w * s;
        numer += w * s;
    }
    if excess > 0.0 {
        let n2 = y_star.norm_squared();
        if n2 == 0.0 {
            return Err(Error::Corruption("averaged cut normal vanished".into()));
        }
        Ok(x.add_scaled(numer / n2, &y_star))
    } else {
        Ok(x.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(c: &[f64]) -> Vector {
        Vector::from_slice(c).unwrap()
    }

    fn gp(y: &[f64], ys: &[f64]) -> GraphPoint {
        GraphPoint::new(v(y), v(ys)).unwrap()
    }

    #[test]
    fn relaxed_step_examples() {
        let p = gp(&[1.0, 0.0], &[-1.0, 0.0]);
        let x = v(&[0.0, 0.0]);
        assert_eq!(relaxed_projection_step(&x, &p, 1.0).unwrap(), v(&[1.0, 0.0]));
        // λ → 2 approaches the reflection (2, 0)
        let r = relaxed_projection_step(&x, &p, 2.0 - 1e-12).unwrap();
        assert!((r - v(&[2.0, 0.0])).norm() < 1e-11);
        // already inside the cut
        let x = v(&[3.0, 1.0]);
        assert_eq!(relaxed_projection_step(&x, &p, 1.5).unwrap(), x);
        assert!(relaxed_projection_step(&x, &p, 2.0).is_err());
        assert!(relaxed_projection_step(&x, &p, 0.0).is_err());
    }

    #[test]
    fn zero_normal_is_whole_space() {
        let cut = HalfSpaceCut::new(v(&[1.0, 1.0]), v(&[0.0, 0.0])).unwrap();
        assert!(cut.contains(&v(&[-100.0, 7.0]), 0.0));
        assert_eq!(cut.project(&v(&[5.0, 5.0])), v(&[5.0, 5.0]));
    }

    #[test]
    fn haugazeau_examples() {
        let t = HaugazeauTriple::new(v(&[1.0, 2.0]), v(&[1.0, 2.0]), v(&[3.0, -1.0])).unwrap();
        assert_eq!(haugazeau_q(&t).unwrap(), v(&[3.0, -1.0]));

        let t = HaugazeauTriple::new(v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[1.0, 1.0])).unwrap();
        let q = haugazeau_q(&t).unwrap();
        assert!((q - v(&[1.0, 1.0])).norm() < 1e-15);

        let t = HaugazeauTriple::new(v(&[0.0, 0.0]), v(&[2.0, 0.0]), v(&[1.0, 0.0])).unwrap();
        assert!(matches!(haugazeau_q(&t), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn multipoint_examples() {
        let a = gp(&[1.0, 0.0], &[-1.0, 0.0]);
        let b = gp(&[0.0, 1.0], &[0.0, -1.0]);
        let x = v(&[0.0, 0.0]);
        let single = multipoint_step(&x, &[(a.clone(), 1.0)]).unwrap();
        assert_eq!(single, relaxed_projection_step(&x, &a, 1.0).unwrap());
        let doubled = multipoint_step(&x, &[(a.clone(), 0.5), (a.clone(), 0.5)]).unwrap();
        assert!((doubled - &single).norm() < 1e-15);
        let avg = multipoint_step(&x, &[(a.clone(), 0.5), (b, 0.5)]).unwrap();
        assert!((avg - v(&[1.0, 1.0])).norm() < 1e-15);

        assert!(multipoint_step(&x, &[]).is_err());
        assert!(multipoint_step(&x, &[(a.clone(), 0.7)]).is_err());
        assert!(multipoint_step(&x, &[(a.clone(), 1.5), (a, -0.5)]).is_err());
    }
}
