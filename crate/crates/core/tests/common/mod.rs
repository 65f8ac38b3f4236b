//! Seeded generators and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use warpres::kernels::MDecomposition;
use warpres::operators::{Affine, BoxSet, MapRef, NormalCone, SetRef};
use warpres::{LinearMap, Vector};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn v(c: &[f64]) -> Vector {
    Vector::from_slice(c).unwrap()
}

pub fn dv(x: &Vector) -> DVector<f64> {
    DVector::from_column_slice(x.as_slice())
}

pub fn from_dv(x: &DVector<f64>) -> Vector {
    Vector::from_slice(x.as_slice()).unwrap()
}

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    // Box–Muller
    let u: f64 = rng.random_range(f64::EPSILON..1.0);
    let w: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    (-2.0 * u.ln()).sqrt() * w.cos()
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vector {
    Vector::new((0..n).map(|_| scale * gaussian(rng)).collect()).unwrap()
}

pub fn uniform_vec(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64) -> Vector {
    Vector::new((0..n).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| gaussian(rng))
}

/// `s·I + skew + PSD`, scaled to keep entries of order one.
pub fn monotone_matrix(rng: &mut ChaCha8Rng, n: usize, s: f64) -> DMatrix<f64> {
    let g = random_matrix(rng, n, n) / (n as f64).sqrt();
    let h = random_matrix(rng, n, n) / (n as f64).sqrt();
    let skew = &h - h.transpose();
    DMatrix::identity(n, n) * s + skew + g.transpose() * &g * 0.5
}

pub fn affine(m: DMatrix<f64>, b: Vector) -> Arc<Affine> {
    Arc::new(Affine::new(LinearMap::from_matrix(m).unwrap(), b).unwrap())
}

pub fn box_cone(lo: f64, hi: f64, n: usize) -> SetRef {
    Arc::new(NormalCone::new(BoxSet::new(vec![lo; n], vec![hi; n]).unwrap()))
}

/// Projection of `x0` onto `{⟨a1, z⟩ ≤ c1} ∩ {⟨a2, z⟩ ≤ c2}` by enumerating
/// active sets; `None` when the intersection is empty.
pub fn project_two_halfspaces(x0: &DVector<f64>, cuts: [(DVector<f64>, f64); 2]) -> Option<DVector<f64>> {
    let scale = 1.0 + x0.norm() + cuts.iter().map(|(a, c)| a.norm() + c.abs()).sum::<f64>();
    let tol = 1e-10 * scale * scale;
    let feasible = |z: &DVector<f64>| cuts.iter().all(|(a, c)| a.dot(z) <= c + tol);
    let mut candidates = vec![x0.clone()];
    for (a, c) in &cuts {
        let nn = a.norm_squared();
        if nn > 0.0 {
            candidates.push(x0 - a * ((a.dot(x0) - c) / nn));
        }
    }
    let (a1, c1) = &cuts[0];
    let (a2, c2) = &cuts[1];
    // both active: z = x0 − Aᵀw with A Aᵀ w = A x0 − c, solved through the
    // QR factors of Aᵀ rather than the Gram matrix
    let at = DMatrix::from_columns(&[a1.clone(), a2.clone()]);
    let qr = at.qr();
    let rmat = qr.r();
    if x0.len() >= 2 && rmat[(1, 1)].abs() > 1e-12 * rmat[(0, 0)].abs() {
        let rhs = DVector::from_vec(vec![a1.dot(x0) - c1, a2.dot(x0) - c2]);
        // Aᵀ = QR, so A Aᵀ = RᵀR and Aᵀw = Q(Rw)
        if let Some(u) = rmat.transpose().solve_lower_triangular(&rhs) {
            if let Some(w) = rmat.solve_upper_triangular(&u) {
                if w[0] >= 0.0 && w[1] >= 0.0 {
                    candidates.push(x0 - qr.q() * u);
                }
            }
        }
    }
    candidates
        .into_iter()
        .filter(|z| feasible(z))
        .min_by(|p, q| (p - x0).norm().total_cmp(&(q - x0).norm()))
}

/// Oracle for the Haugazeau projector on the triple `(x0, x, x½)`.
pub fn haugazeau_oracle(x0: &Vector, x: &Vector, xh: &Vector) -> Option<Vector> {
    let (x0, x, xh) = (dv(x0), dv(x), dv(xh));
    let a1 = &x0 - &x;
    let c1 = a1.dot(&x);
    let a2 = &x - &xh;
    let c2 = a2.dot(&xh);
    project_two_halfspaces(&x0, [(a1, c1), (a2, c2)]).map(|z| from_dv(&z))
}

/// Box-constrained variational inequality with a strongly monotone affine
/// operator and a zero built coordinate by coordinate.
pub struct Regression {
    pub dim: usize,
    pub a: SetRef,
    pub b: MapRef,
    pub m: MDecomposition,
    pub zero: Vector,
    pub start: Vector,
}

/// Zeros at the lower bound, the upper bound or inside `[−1, 1]`, with the
/// matching normal vector; `B x = M x + c` with `B z = −n`.
pub fn regression_problem(seed: u64) -> Regression {
    let mut r = rng(seed);
    let dim = r.random_range(2..=8);
    let mut zero = vec![0.0; dim];
    let mut normal = vec![0.0; dim];
    for i in 0..dim {
        match r.random_range(0..3) {
            0 => {
                zero[i] = -1.0;
                normal[i] = -r.random_range(0.5..2.0);
            }
            1 => {
                zero[i] = 1.0;
                normal[i] = r.random_range(0.5..2.0);
            }
            _ => zero[i] = r.random_range(-0.8..0.8),
        }
    }
    let mat = monotone_matrix(&mut r, dim, 0.2);
    let z = DVector::from_vec(zero);
    let c = -DVector::from_vec(normal) - &mat * &z;
    let b: MapRef = affine(mat, from_dv(&c));
    let a = box_cone(-1.0, 1.0, dim);
    let m = MDecomposition::new(a.clone(), Some(b.clone())).unwrap();
    let start = random_vec(&mut r, dim, 3.0);
    Regression {
        dim,
        a,
        b,
        m,
        zero: from_dv(&z),
        start,
    }
}

/// `(ξ₁, ξ₂) ↦ (ξ₁³/2 + ξ₁/5 − ξ₂, ξ₁ + ξ₂)`, written out independently.
pub fn k2(p: [f64; 2]) -> [f64; 2] {
    [p[0].powi(3) / 2.0 + p[0] / 5.0 - p[1], p[0] + p[1]]
}

/// Points `p` of the unit circle with `K x − K p = t p` and `t ≥ 0`, found by
/// scanning the angle and bisecting sign changes of the cross product.
pub fn warped_disk_projection_oracle(x: [f64; 2], kernel: impl Fn([f64; 2]) -> [f64; 2]) -> Vec<[f64; 2]> {
    let kx = kernel(x);
    let residual = |th: f64| {
        let p = [th.cos(), th.sin()];
        let kp = kernel(p);
        let d = [kx[0] - kp[0], kx[1] - kp[1]];
        (d[0] * p[1] - d[1] * p[0], d[0] * p[0] + d[1] * p[1])
    };
    let grid = 20_000;
    let step = std::f64::consts::TAU / grid as f64;
    let mut roots = Vec::new();
    for k in 0..grid {
        let (mut lo, mut hi) = (k as f64 * step, (k + 1) as f64 * step);
        let (flo, _) = residual(lo);
        let (fhi, _) = residual(hi);
        if flo == 0.0 || flo.signum() != fhi.signum() {
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if residual(mid).0.signum() == residual(lo).0.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            let th = 0.5 * (lo + hi);
            if residual(th).1 >= 0.0 {
                roots.push([th.cos(), th.sin()]);
            }
        }
    }
    roots
}
