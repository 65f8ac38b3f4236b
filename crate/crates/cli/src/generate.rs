//! Seeded test problems with a known zero.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::file::{Kind, OperatorSpec, ParamValue, ProblemFile, SolutionSpec, SolverSpec};

/// Variational inequality on `[−1, 1]^dim` with a strongly monotone affine
/// field `x ↦ Mx + c`. Each coordinate of the zero sits on a bound, with a
/// matching normal component, or strictly inside; `c` is then chosen so
/// that `−(Mz + c)` lies in the normal cone at `z`.
pub fn box_vi(seed: u64, dim: usize) -> ProblemFile {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut zero = vec![0.0; dim];
    let mut normal = vec![0.0; dim];
    for i in 0..dim {
        match rng.random_range(0..3) {
            0 => {
                zero[i] = -1.0;
                normal[i] = -rng.random_range(0.5..2.0);
            }
            1 => {
                zero[i] = 1.0;
                normal[i] = rng.random_range(0.5..2.0);
            }
            _ => zero[i] = rng.random_range(-0.8..0.8),
        }
    }
    let entries = |rng: &mut ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..dim)
            .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect()
    };
    let h = entries(&mut rng);
    let g = entries(&mut rng);
    // 0.5 Id + skew(H) + GᵀG / (2 dim)
    let m: Vec<Vec<f64>> = (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| {
                    let gram: f64 = (0..dim).map(|k| g[k][i] * g[k][j]).sum();
                    let diag = if i == j { 0.5 } else { 0.0 };
                    diag + 0.5 * (h[i][j] - h[j][i]) + gram / (2.0 * dim as f64)
                })
                .collect()
        })
        .collect();
    let shift: Vec<f64> = (0..dim)
        .map(|i| -normal[i] - (0..dim).map(|j| m[i][j] * zero[j]).sum::<f64>())
        .collect();
    let start: Vec<f64> = (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect();

    ProblemFile {
        kind: Kind::Inclusion,
        dim: Some(dim),
        set: Some(
            OperatorSpec::named("box")
                .with("lower", ParamValue::Number(-1.0))
                .with("upper", ParamValue::Number(1.0)),
        ),
        forward: Some(
            OperatorSpec::named("affine")
                .with("matrix", ParamValue::Matrix(m))
                .with("shift", ParamValue::List(shift)),
        ),
        w: None,
        kernel: None,
        primal: Vec::new(),
        dual: Vec::new(),
        link: Vec::new(),
        solver: SolverSpec {
            algo: "fbf".to_string(),
            max_iter: Some(5000),
            tol_residual: Some(1e-10),
            tol_step: Some(1e-10),
            start: Some(start),
            ..SolverSpec::default()
        },
        solution: Some(SolutionSpec {
            point: zero,
            dual: None,
            tolerance: 1e-6,
        }),
    }
}
