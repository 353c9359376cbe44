//! Immersion, fundamental mesh, boundary geometry, assembly, curvature and export.

use std::f64::consts::PI;
use std::sync::OnceLock;

use helicoid_core::builder::{
    assemble_complete, assemble_pair, domain_point, export_mesh, fit_boundary, gauss_map, gauss_monodromy,
    immerse, mesh_fundamental, predicted_total_curvature, rational_beta, read_obj, reflection_consistency, tau1,
    weierstrass_at, write_mesh, BoundaryGeometry, BoundaryTag, Mesh, MeshConfig, MeshFormat,
};
use helicoid_core::period_solver::{solve_period_problem, SolvedData};
use helicoid_core::surface_domain::one_plus;
use num_complex::Complex64 as C64;

struct Fixture {
    solved: SolvedData,
    mesh: Mesh,
    geometry: BoundaryGeometry,
}

fn beta_one() -> &'static Fixture {
    static F: OnceLock<Fixture> = OnceLock::new();
    F.get_or_init(|| {
        let solved = solve_period_problem(1.0).unwrap().solved;
        let mesh = mesh_fundamental(&solved, &MeshConfig::for_a(solved.params.a).with_resolution(32, 32)).unwrap();
        let geometry = fit_boundary(&mesh).unwrap();
        Fixture { solved, mesh, geometry }
    })
}

#[test]
fn base_point_normalisation() {
    let s = &beta_one().solved;
    let st = weierstrass_at(&one_plus(s.params.rho), s).unwrap();
    assert!((st.gauss() - 1.0).norm() < 1e-15);
    assert_eq!(st.x, [0.0; 3]);
}

#[test]
fn gauss_map_is_unimodular_on_the_slit_arcs() {
    let s = &beta_one().solved;
    let rho = s.params.rho;
    for k in 1..=20 {
        let theta = rho / 2.0 + (PI / 2.0 - rho / 2.0) * k as f64 / 21.0;
        for sign in [1.0, -1.0] {
            let g = gauss_map(&domain_point(C64::from_polar(1.0, sign * theta), rho), s).unwrap();
            assert!((g.norm() - 1.0).abs() < 1e-9, "θ={}: |g|={}", sign * theta, g.norm());
        }
    }
}

#[test]
fn gauss_map_closed_form_for_beta_one() {
    let s = &beta_one().solved;
    let (a, rho) = (s.params.a, s.params.rho);
    for z in [C64::new(0.3, 0.2), C64::new(0.7, -0.5), C64::new(0.1, 0.9), C64::new(1.6, 0.4)] {
        let g = gauss_map(&domain_point(z, rho), s).unwrap();
        let exact = (z * z + a * a) / (a * a * z * z + 1.0);
        assert!((g - exact).norm() < 1e-7 * exact.norm(), "{z}: {g} vs {exact}");
    }
}

#[test]
fn vertical_period_equals_pi_lambda_r() {
    let s = &beta_one().solved;
    let rho = s.params.rho;
    let top = immerse(&domain_point(C64::new(0.0, 1.0), rho), s).unwrap();
    let bottom = immerse(&domain_point(C64::new(0.0, 0.0), rho), s).unwrap();
    assert!(((top[2] - bottom[2]) - s.t_period).abs() < 1e-6 * s.t_period);
}

#[test]
fn fundamental_mesh_structure() {
    let f = beta_one();
    f.mesh.validate().unwrap();
    for tag in BoundaryTag::LINES {
        assert!(f.mesh.chain(tag).len() >= 2, "{tag:?} chain missing");
    }
    for name in ["1+", "q1+", "q1-", "q2+", "q2-"] {
        assert!(f.mesh.markers.contains_key(name), "{name}");
    }
    assert_eq!(f.mesh.vertices[f.mesh.markers["1+"]], [0.0; 3]);
}

#[test]
fn boundary_lines_and_corner() {
    let g = &beta_one().geometry;
    assert!(g.worst_relative_residual() < 1e-5);
    for l in &g.lines {
        let vertical = matches!(l.tag, BoundaryTag::L0Plus | BoundaryTag::L0Minus);
        let dz = l.direction[2].abs();
        assert!(if vertical { (1.0 - dz) < 1e-9 } else { dz < 1e-9 }, "{:?}", l.tag);
    }
    assert!(g.corner_gap() < 1e-5);
    assert!(g.d_geo.abs() < 1e-6 * g.diameter && g.h_geo.abs() < 1e-6 * g.diameter);
    // The two half-lines ℓ₁^± meet at βπ, each making βπ/2 with their bisector.
    assert!((g.plane_angle - PI).abs() < 1e-4);
    assert!((g.plane_angle_l2 - PI).abs() < 1e-4);
    assert!(g.slab_excess < 1e-6 * g.diameter);
}

#[test]
fn boundary_angle_for_beta_half() {
    let solved = solve_period_problem(0.5).unwrap().solved;
    let mesh = mesh_fundamental(&solved, &MeshConfig::for_a(solved.params.a).with_resolution(24, 24)).unwrap();
    let g = fit_boundary(&mesh).unwrap();
    assert!((g.plane_angle - PI / 2.0).abs() < 1e-4, "{}", g.plane_angle);
    assert!(g.worst_relative_residual() < 1e-5);
}

#[test]
fn reflections_are_consistent_with_continuation() {
    let f = beta_one();
    for s in reflection_consistency(&f.solved, &f.geometry, 8, 11).unwrap() {
        assert!(s.deviation < 1e-6 * f.geometry.diameter, "{s:?}");
    }
}

#[test]
fn pair_shares_the_reflection_line() {
    let f = beta_one();
    let pair = assemble_pair(&f.mesh, &f.geometry, BoundaryTag::L2Minus).unwrap();
    assert_eq!(pair.welded[1], f.mesh.chain(BoundaryTag::L2Minus).len());
    assert_eq!(pair.mesh.faces.len(), 2 * f.mesh.faces.len());
    assert!(assemble_pair(&f.mesh, &f.geometry, BoundaryTag::Cut).is_err());
}

#[test]
fn tau1_is_a_vertical_translation_by_twice_the_period() {
    let f = beta_one();
    let m = tau1(&f.geometry);
    assert!(m.is_translation(1e-9));
    let t = f.geometry.t_geo;
    assert!((t.abs() - f.solved.t_period).abs() < 1e-6 * f.solved.t_period);
    let moved = m.apply([0.0; 3]);
    assert!(moved[0].abs() < 1e-8 && moved[1].abs() < 1e-8);
    assert!((moved[2].abs() - 2.0 * f.solved.t_period).abs() < 1e-6 * f.solved.t_period);
}

#[test]
fn complete_assembly_counts() {
    let f = beta_one();
    let three = assemble_complete(&f.mesh, &f.geometry, 3).unwrap();
    assert_eq!(three.mesh.faces.len(), 3 * f.mesh.faces.len());
    assert_eq!(three.welded.len(), 3);
    assert!(three.welded[1..].iter().all(|&w| w > 0));
    // Breadth-first layout of four copies reaches one period above and below the
    // fundamental piece, which itself spans two periods.
    let four = assemble_complete(&f.mesh, &f.geometry, 4).unwrap();
    let (lo, hi) = four.mesh.vertical_range();
    let t = f.solved.t_period;
    assert!(((hi - lo) - 6.0 * t).abs() < 1e-6 * t, "extent {} vs 6t = {}", hi - lo, 6.0 * t);
    assert!(assemble_complete(&f.mesh, &f.geometry, 0).is_err());
}

#[test]
fn gauss_monodromy_at_the_solution() {
    let s = &beta_one().solved;
    let m = gauss_monodromy(s).unwrap();
    assert!(m.gamma1.norm() < 1e-8 && m.gamma2.norm() < 1e-8);
    assert!((m.end_circle - C64::new(0.0, 4.0 * PI)).norm() < 1e-8);
}

#[test]
fn curvature_predictions() {
    assert_eq!(rational_beta(0.5, 64), Some((1, 2)));
    assert_eq!(rational_beta(1.0 / 3.0, 64), Some((1, 3)));
    assert!((predicted_total_curvature(1.0).unwrap() + 8.0 * PI).abs() < 1e-12);
    assert!((predicted_total_curvature(0.5).unwrap() + 24.0 * PI).abs() < 1e-12);
    assert!((predicted_total_curvature(1.0 / 3.0).unwrap() + 16.0 * PI).abs() < 1e-12);
}

#[test]
fn empty_mesh_exports_header_only() {
    let mut buf = Vec::new();
    write_mesh(&Mesh::default(), MeshFormat::Obj, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1);
    assert!(text.starts_with('#'));
    let mut ply = Vec::new();
    write_mesh(&Mesh::default(), MeshFormat::Ply, &mut ply).unwrap();
    assert!(String::from_utf8(ply).unwrap().trim_end().ends_with("end_header"));
}

#[test]
fn obj_round_trip() {
    let f = beta_one();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("piece.obj");
    export_mesh(&f.mesh, MeshFormat::Obj, &path).unwrap();
    let back = read_obj(&path).unwrap();
    assert_eq!(back.faces, f.mesh.faces);
    assert_eq!(back.vertices.len(), f.mesh.vertices.len());
    for (p, q) in back.vertices.iter().zip(&f.mesh.vertices) {
        for i in 0..3 {
            assert!((p[i] - q[i]).abs() <= 1e-8 * q[i].abs().max(1e-300), "{p:?} vs {q:?}");
        }
    }
    let tags = |m: &Mesh| {
        let mut v: Vec<_> = m.boundary.iter().map(|e| (e.tag, e.a.min(e.b), e.a.max(e.b))).collect();
        v.sort();
        v
    };
    assert_eq!(tags(&back), tags(&f.mesh));
}

#[test]
fn three_copy_assembly_exports() {
    let f = beta_one();
    let three = assemble_complete(&f.mesh, &f.geometry, 3).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("three.obj");
    export_mesh(&three.mesh, MeshFormat::Obj, &path).unwrap();
    assert_eq!(read_obj(&path).unwrap().faces.len(), 3 * f.mesh.faces.len());
}

#[test]
fn mesh_config_validation() {
    let s = &beta_one().solved;
    let a = s.params.a;
    assert!(MeshConfig::for_a(a).validate(a).is_ok());
    assert!(MeshConfig::for_a(a).with_resolution(4, 64).validate(a).is_err());
    assert!(MeshConfig { eps_end: a, ..MeshConfig::for_a(a) }.validate(a).is_err());
    assert!("stl".parse::<MeshFormat>().is_err());
    assert_eq!("PLY".parse::<MeshFormat>().unwrap(), MeshFormat::Ply);
}
