//! Randomised invariants.

use std::f64::consts::PI;

use helicoid_core::period_solver::{f_func, h_func, solve_b, SolvedData};
use helicoid_core::surface_domain::{apply_symmetry, lift_path, w_values, Params, SurfacePoint, Symmetry};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn b_solves_f_and_lies_below_a(a in 0.01f64..0.99, rho in 0.01f64..3.13, beta in 0.05f64..1.0) {
        let b = solve_b(a, rho, beta).unwrap();
        prop_assert!(b > 0.0 && b <= a);
        prop_assert!(f_func(a, b, rho, beta).unwrap().abs() <= 1e-11);
    }

    #[test]
    fn b_increases_with_beta(a in 0.05f64..0.95, rho in 0.05f64..3.1, beta in 0.05f64..0.9) {
        let lo = solve_b(a, rho, beta).unwrap();
        let hi = solve_b(a, rho, beta + 0.05).unwrap();
        prop_assert!(hi > lo);
    }

    #[test]
    fn h_increases_with_rho(a in 0.05f64..0.95, rho in 0.1f64..3.0, beta in 0.1f64..1.0) {
        prop_assert!(h_func(a, rho + 0.02, beta).unwrap() > h_func(a, rho, beta).unwrap());
    }

    #[test]
    fn symmetries_are_involutions(x in -1.8f64..1.8, y in -1.8f64..1.8, rho in 0.1f64..3.0) {
        let z = C64::new(x, y);
        prop_assume!(z.norm() > 0.05);
        let p = SurfacePoint::finite(z, w_values(z, rho).0);
        for s in Symmetry::ALL {
            let q = apply_symmetry(s, apply_symmetry(s, p));
            prop_assert!(q.distance(&p) < 1e-12 * (1.0 + z.norm_sqr()), "{:?}", s);
            prop_assert!(apply_symmetry(s, p).on_curve(rho));
        }
    }

    #[test]
    fn lifted_segments_stay_on_the_curve(x0 in 0.05f64..0.9, y0 in -0.9f64..0.9, dx in -0.3f64..0.3, dy in -0.3f64..0.3, rho in 0.2f64..2.9) {
        let z0 = C64::new(x0, y0);
        let pts: Vec<C64> = (0..=50).map(|k| z0 + C64::new(dx, dy) * (k as f64 / 50.0)).collect();
        let bp = C64::from_polar(1.0, rho / 2.0);
        prop_assume!(pts.iter().all(|z| (z - bp).norm() > 0.02 && (z - bp.conj()).norm() > 0.02));
        let start = SurfacePoint::finite(z0, w_values(z0, rho).0);
        let path = lift_path(&pts, start, rho).unwrap();
        for s in &path.samples {
            prop_assert!(s.on_curve(rho));
        }
        for w in path.samples.windows(2) {
            prop_assert!((w[1].w - w[0].w).norm() < (w[1].w + w[0].w).norm());
        }
    }

    #[test]
    fn solved_data_is_consistent(a in 0.1f64..0.9, rho in 0.3f64..(PI - 0.3), beta in 0.2f64..1.0, lambda in 0.5f64..3.0) {
        let s = SolvedData::at(Params::with_lambda(a, rho, beta, lambda).unwrap()).unwrap();
        prop_assert!(s.r > 0.0);
        prop_assert!((s.t_period - PI * lambda * s.r).abs() <= 1e-14 * s.t_period);
        prop_assert!(s.residual_a3_cross.abs() <= 1e-8 * s.a3.abs().max(1.0));
    }
}
