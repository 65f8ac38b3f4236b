mod common;

use std::sync::Arc;

use proptest::prelude::*;

use common::*;
use warpres::fejer::{haugazeau_q, relaxed_projection_step, HaugazeauTriple, HalfSpaceCut};
use warpres::kernels::{fbf_kernel, graph_point, warped_resolvent, KernelRef, MapKernel, ScaledKernel};
use warpres::operators::{MapRef, ScaledIdentity};
use warpres::Vector;

fn truncate(coords: &[f64], n: usize) -> Vector {
    v(&coords[..n])
}

/// Kernels for a regression problem: identity, a warped affine map and the
/// forward-backward-forward kernel folding the problem's own forward part.
fn kernels(p: &Regression, seed: u64) -> Vec<(KernelRef, f64)> {
    let mut r = rng(seed + 1000);
    let eps = 1e-3;
    let gamma = 0.9 * (1.0 - eps) / p.b.lipschitz();
    let w: MapRef = Arc::new(ScaledIdentity::new(p.dim, 1.0).unwrap());
    vec![
        (Arc::new(ScaledKernel::identity(p.dim)), 0.8),
        (
            Arc::new(MapKernel::new(affine(monotone_matrix(&mut r, p.dim, 0.5), Vector::zeros(p.dim))).unwrap()),
            1.3,
        ),
        (Arc::new(fbf_kernel(w, p.b.clone(), gamma, eps).unwrap()), gamma),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn graph_points_lie_in_the_graph(seed in 0u64..10, coords in prop::collection::vec(-4.0f64..4.0, 8)) {
        let p = regression_problem(400 + seed);
        let x = truncate(&coords, p.dim);
        for (k, gamma) in kernels(&p, seed) {
            let gp = graph_point(&p.m, k.as_ref(), gamma, &x).unwrap();
            // p = J x  ⇔  (p, γ^{-1}(Kx − Kp)) ∈ gra M
            let y_star = (k.apply(&x) - k.apply(gp.y())).scale(1.0 / gamma);
            prop_assert!((&y_star - gp.y_star()).norm() <= 1e-9 * (1.0 + y_star.norm()));
            prop_assert!(p.m.graph_residual(gp.y(), gp.y_star()).unwrap() <= 1e-8);
        }
    }

    #[test]
    fn zeros_are_fixed_and_inside_every_cut(seed in 0u64..10, coords in prop::collection::vec(-4.0f64..4.0, 8)) {
        let p = regression_problem(400 + seed);
        let x = truncate(&coords, p.dim);
        for (k, gamma) in kernels(&p, seed) {
            let fixed = warped_resolvent(&p.m, k.as_ref(), gamma, &p.zero).unwrap();
            prop_assert!((&fixed - &p.zero).norm() <= 1e-9);
            let gp = graph_point(&p.m, k.as_ref(), gamma, &x).unwrap();
            prop_assert!(HalfSpaceCut::from_graph_point(&gp).contains(&p.zero, 1e-9));
        }
    }

    #[test]
    fn relaxed_steps_are_fejer(
        seed in 0u64..10,
        coords in prop::collection::vec(-4.0f64..4.0, 8),
        lambda in 0.01f64..1.99,
    ) {
        let p = regression_problem(400 + seed);
        let x = truncate(&coords, p.dim);
        for (k, gamma) in kernels(&p, seed) {
            let gp = graph_point(&p.m, k.as_ref(), gamma, &x).unwrap();
            let next = relaxed_projection_step(&x, &gp, lambda).unwrap();
            let before = (&x - &p.zero).norm_squared();
            let after = (&next - &p.zero).norm_squared();
            let moved = (&next - &x).norm_squared();
            // ‖x⁺ − z‖² ≤ ‖x − z‖² − (2 − λ)/λ ‖x⁺ − x‖²
            prop_assert!(after <= before - (2.0 - lambda) / lambda * moved + 1e-9 * (1.0 + before));
        }
    }

    #[test]
    fn haugazeau_output_lies_in_both_cuts(
        n in 1usize..=6,
        coords in prop::collection::vec(-3.0f64..3.0, 18),
    ) {
        let x0 = v(&coords[0..n]);
        let x = v(&coords[6..6 + n]);
        let xh = v(&coords[12..12 + n]);
        let q = haugazeau_q(&HaugazeauTriple::new(x0.clone(), x.clone(), xh.clone()).unwrap());
        match q {
            Ok(q) => {
                let scale = 1.0 + x0.norm_squared() + x.norm_squared() + xh.norm_squared() + q.norm_squared();
                prop_assert!((&q - &x).dot(&(&x0 - &x)) <= 1e-9 * scale);
                prop_assert!((&q - &xh).dot(&(&x - &xh)) <= 1e-9 * scale);
            }
            Err(_) => prop_assert!(haugazeau_oracle(&x0, &x, &xh).is_none()),
        }
    }

    #[test]
    fn cut_projection_is_idempotent(coords in prop::collection::vec(-3.0f64..3.0, 9)) {
        let y = v(&coords[0..3]);
        let y_star = v(&coords[3..6]);
        let x = v(&coords[6..9]);
        let cut = HalfSpaceCut::new(y, y_star).unwrap();
        let p = cut.project(&x);
        prop_assert!(cut.contains(&p, 1e-9));
        prop_assert!((cut.project(&p) - &p).norm() <= 1e-12);
        if cut.contains(&x, 0.0) {
            prop_assert_eq!(p, x);
        }
    }

    #[test]
    fn warped_resolvent_is_lipschitz(
        seed in 0u64..10,
        a in prop::collection::vec(-4.0f64..4.0, 8),
        b in prop::collection::vec(-4.0f64..4.0, 8),
    ) {
        let p = regression_problem(400 + seed);
        let (x, y) = (truncate(&a, p.dim), truncate(&b, p.dim));
        for (k, gamma) in kernels(&p, seed) {
            let px = warped_resolvent(&p.m, k.as_ref(), gamma, &x).unwrap();
            let py = warped_resolvent(&p.m, k.as_ref(), gamma, &y).unwrap();
            let bound = k.lipschitz() / k.strong_monotonicity();
            prop_assert!((&px - &py).norm() <= bound * (&x - &y).norm() + 1e-9);
        }
    }
}
