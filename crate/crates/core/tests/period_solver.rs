//! Period problem: the implicit function `b`, the coefficient `a₃`, the offsets `h`
//! and `d`, the curve `h = 0` and the two-dimensional solve.

use std::f64::consts::PI;

use helicoid_core::period_solver::{
    a0_aux, beta_one_dual_route, compute_a3, d_func, f_func, h_func, period_integral, rho0_of, solve_b,
    solve_period_problem, trace_c1, SolvedData,
};
use helicoid_core::surface_domain::Params;
use helicoid_core::verify::d_rho_zero_closed_form;

fn midpoint<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> f64 {
    let h = (hi - lo) / n as f64;
    (0..n).map(|k| f(lo + (k as f64 + 0.5) * h)).sum::<f64>() * h
}

#[test]
fn f_vanishes_on_the_diagonal_for_beta_one() {
    for (a, rho) in [(0.2, 0.5), (0.6, 1.5), (0.95, 3.0)] {
        assert!(f_func(a, a, rho, 1.0).unwrap().abs() < 1e-15);
    }
}

#[test]
fn f_at_zero_b_is_positive() {
    for (a, rho, beta) in [(0.2, 0.5, 0.3), (0.8, 2.5, 0.9)] {
        let v = f_func(a, 0.0, rho, beta).unwrap();
        assert!(v > 0.0);
        assert!((v - beta * period_integral(a, rho).unwrap()).abs() < 1e-15);
    }
    assert_eq!(f_func(0.0, 0.0, 1.0, 0.5).unwrap(), 0.0);
}

#[test]
fn f_against_panel_oracle() {
    let f = |t: f64| 1.0 / (t.powi(4) + 1.0).sqrt();
    let oracle = 0.5 * midpoint(f, 0.0, 0.5, 1_000_000) - midpoint(f, 0.0, 0.2, 1_000_000);
    let v = f_func(0.5, 0.2, PI / 2.0, 0.5).unwrap();
    assert!((v - oracle).abs() < 1e-9, "{v} vs {oracle}");
}

#[test]
fn b_limits() {
    assert_eq!(solve_b(0.0, 1.2, 0.4).unwrap(), 0.0);
    let lo = solve_b(0.8, 1e-6, 0.5).unwrap();
    assert!((lo - (0.5 * 0.8f64.atan()).tan()).abs() < 1e-6);
    let hi = solve_b(0.5, PI - 1e-6, 0.5).unwrap();
    assert!((hi - (0.5 * 0.5f64.atanh()).tanh()).abs() < 1e-5);
    assert!((hi - 0.267949).abs() < 1e-5);
}

#[test]
fn solved_data_invariants() {
    for (a, rho, beta) in [(0.3, 0.8, 0.4), (0.7, 2.0, 0.9), (0.5, 1.5, 1.0), (0.9, 2.9, 0.2)] {
        let s = SolvedData::at(Params::new(a, rho, beta).unwrap()).unwrap();
        assert!(s.b > 0.0 && s.b <= a);
        if beta < 1.0 {
            assert!(s.b < a);
        }
        assert!(s.residual_f.abs() <= 1e-11);
        assert!(s.r > 0.0);
        assert!((s.t_period - PI * s.r).abs() < 1e-14 * s.t_period);
        assert!(s.residual_a3_cross.abs() <= 1e-8);
    }
}

#[test]
fn a3_limits_and_beta_one() {
    for a in [0.3, 0.5, 0.8] {
        for beta in [0.3, 0.7] {
            for rho in [1e-4, PI - 1e-4] {
                let b = solve_b(a, rho, beta).unwrap();
                let v = compute_a3(a, rho, beta, b).unwrap();
                assert!(v.inner.abs() < 1e-3, "a={a} β={beta} ρ={rho}: {}", v.inner);
            }
        }
        for rho in [0.5, 1.5, 2.5] {
            let v = compute_a3(a, rho, 1.0, a).unwrap();
            assert!(v.inner.abs() < 1e-12 && v.outer.abs() < 1e-12);
        }
    }
}

#[test]
fn a0_is_in_the_unit_interval() {
    for beta in [0.2, 0.5, 0.8, 1.0] {
        for k in 1..10 {
            let rho = PI * k as f64 / 10.0;
            let v = a0_aux(rho, beta).unwrap();
            assert!((0.0..=1.0).contains(&v), "β={beta} ρ={rho}: {v}");
        }
    }
}

#[test]
fn h_values() {
    for beta in [0.25, 0.5, 1.0] {
        assert!((h_func(1.0, PI - 1e-6, beta).unwrap() - PI / 4.0).abs() < 1e-4);
        for k in 0..20 {
            let rho = PI * (k as f64 + 0.5) / 20.0;
            assert!(h_func(0.0, rho, beta).unwrap() < 0.0);
        }
    }
    assert!(h_func(0.5, 0.01, 0.5).unwrap() < -2.0);
}

#[test]
fn d_values() {
    for k in 0..12 {
        let rho = PI * (k as f64 + 0.5) / 12.0;
        let (d3, d7) = (d_func(0.3, rho, 1.0).unwrap(), d_func(0.7, rho, 1.0).unwrap());
        assert!((d3 - d7).abs() < 1e-8, "ρ={rho}: {d3} vs {d7}");
    }
    assert!(d_func(0.5, PI - 0.01, 0.5).unwrap() < -5.0);
}

/// Near `ρ = 0` the offset `d` tends to half of `πa(1+b²)/(b(1+a²))`; the factor is
/// recorded here so a change in either side is noticed.
#[test]
fn d_near_rho_zero_is_half_the_residue_expression() {
    for (a, beta) in [(0.3, 0.3), (0.6, 0.7), (0.9, 1.0)] {
        let ratio = d_func(a, 1e-4, beta).unwrap() / d_rho_zero_closed_form(a, beta);
        assert!((ratio - 0.5).abs() < 1e-3, "a={a} β={beta}: {ratio}");
    }
}

#[test]
fn curve_h_zero() {
    let trace = trace_c1(0.5, 12).unwrap();
    for p in &trace.points {
        assert!(p.h_val.abs() < 1e-9, "{p:?}");
    }
    for w in trace.points.windows(2) {
        assert!(w[1].rho < w[0].rho, "ρ must decrease along the curve: {:?}", w);
    }
    assert!(trace.rho0 <= PI / 1.5 + 1e-6);
    assert!((trace.rho0 - rho0_of(0.5).unwrap()).abs() < 1e-14);
}

#[test]
fn beta_one_has_one_root_found_by_both_routes() {
    let sol = solve_period_problem(1.0).unwrap();
    assert_eq!(sol.roots.len(), 1);
    assert_eq!(sol.solved.root_count, 1);
    let (a, rho) = beta_one_dual_route().unwrap();
    assert!((a - sol.solved.params.a).abs() < 1e-7);
    assert!((rho - sol.solved.params.rho).abs() < 1e-7);
    assert!(sol.solved.residual_h.abs() < 1e-8 && sol.solved.residual_d.abs() < 1e-8);
    assert!(sol.solved.t_period > 0.0);
}

#[test]
fn beta_half_has_a_root() {
    let sol = solve_period_problem(0.5).unwrap();
    assert!(sol.solved.root_count >= 1);
    assert_eq!(sol.roots.len(), sol.solved.root_count);
    assert!(sol.dual_route.is_none());
    assert!(sol.solved.residual_h.abs() < 1e-8 && sol.solved.residual_d.abs() < 1e-8);
}

#[test]
fn out_of_range_inputs_are_rejected() {
    assert!(solve_period_problem(1.5).is_err());
    assert!(solve_period_problem(0.0).is_err());
    assert!(Params::new(1.0, 1.0, 0.5).is_err());
    assert!(Params::new(0.5, PI, 0.5).is_err());
    assert!(d_func(0.0, 1.0, 0.5).is_err());
}
