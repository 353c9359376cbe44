//! End-to-end runs of the `helicoid` binary.

use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use helicoid_core::period_solver::{d_func, h_func};

fn helicoid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_helicoid")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn solve_to(dir: &Path, beta: &str) -> std::path::PathBuf {
    let path = dir.join(format!("solution_{beta}.json"));
    let o = helicoid(&["solve", "--beta", beta, "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    path
}

#[test]
fn solve_beta_one() {
    let o = helicoid(&["solve", "--beta", "1.0"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let keys = [
        "beta", "a", "rho", "b", "a3", "lambda", "c1", "c2", "a1", "a2", "R", "t_period", "residual_h", "residual_d",
        "residual_F", "residual_a3_cross", "root_count",
    ];
    let text = String::from_utf8_lossy(&o.stdout);
    let pos: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\":")).unwrap_or_else(|| panic!("{k}"))).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "keys out of order: {text}");
    assert_eq!(v.as_object().unwrap().len(), keys.len());
    assert_eq!(v["root_count"], 1);
    assert!(v["residual_h"].as_f64().unwrap().abs() < 1e-8);
    assert!(v["residual_d"].as_f64().unwrap().abs() < 1e-8);
    assert_eq!(v["a"].as_f64(), v["b"].as_f64());
}

#[test]
fn solve_beta_half_reports_root_count() {
    let o = helicoid(&["solve", "--beta", "0.5"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["root_count"].as_u64().unwrap() >= 1);
}

#[test]
fn solution_file_round_trips_losslessly() {
    let dir = tempfile::tempdir().unwrap();
    let path = solve_to(dir.path(), "1.0");
    let text = std::fs::read_to_string(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    // Every number re-serialises to the exact text in the file.
    for (k, val) in v.as_object().unwrap() {
        let line = format!("\"{k}\": {}", serde_json::to_string(val).unwrap());
        assert!(text.contains(&line), "{line} not in {text}");
        if let Some(x) = val.as_f64() {
            let back: f64 = serde_json::to_string(val).unwrap().parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits());
        }
    }
    let mesh = dir.path().join("m.obj");
    let o = helicoid(&["mesh", "--solution", path.to_str().unwrap(), "--radial", "16", "--angular", "16", "--out", mesh.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn usage_errors_exit_64() {
    assert_eq!(code(&helicoid(&["solve", "--beta", "1.5"])), 64);
    assert_eq!(code(&helicoid(&["solve"])), 64);
    assert_eq!(code(&helicoid(&["frobnicate"])), 64);
    assert_eq!(code(&helicoid(&["mesh", "--beta", "1", "--format", "stl"])), 64);
    assert_eq!(code(&helicoid(&["scan", "--beta", "0.5", "--a-points", "0"])), 64);
    assert_eq!(code(&helicoid(&["--help"])), 0);
}

#[test]
fn scan_grid() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("scan.csv");
    let t = std::time::Instant::now();
    let o = helicoid(&["scan", "--beta", "0.5", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(t.elapsed().as_secs_f64() < 60.0);
    let mut rdr = csv::Reader::from_path(&path).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["a", "rho", "b", "a3", "h", "d"]);
    let rows: Vec<Vec<f64>> = rdr.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 100);
    for idx in [0, 9, 90, 99] {
        let r = &rows[idx];
        let (a, rho) = (r[0], r[1]);
        assert_eq!(r[4].to_bits(), h_func(a, rho, 0.5).unwrap().to_bits(), "h at row {idx}");
        assert_eq!(r[5].to_bits(), d_func(a, rho, 0.5).unwrap().to_bits(), "d at row {idx}");
    }
    assert_eq!(rows[0][0], 0.05);
    assert_eq!(rows[0][1], PI * 0.05);
}

#[test]
fn mesh_reports_boundary_fit() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("piece.obj");
    let o = helicoid(&["mesh", "--beta", "1", "--radial", "24", "--angular", "24", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("residual"), "{err}");
    assert!(std::fs::read_to_string(&path).unwrap().lines().any(|l| l.starts_with("f ")));
}

#[test]
fn mesh_four_copies_stacks_periods() {
    let dir = tempfile::tempdir().unwrap();
    let sol = solve_to(dir.path(), "1.0");
    let t = serde_json::from_str::<serde_json::Value>(&std::fs::read_to_string(&sol).unwrap()).unwrap()["t_period"]
        .as_f64()
        .unwrap();
    let path = dir.path().join("four.ply");
    let o = helicoid(&[
        "mesh", "--solution", sol.to_str().unwrap(), "--radial", "16", "--angular", "16", "--copies", "4", "--format", "ply",
        "--out", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&path).unwrap();
    let body = text.split("end_header\n").nth(1).unwrap();
    let z: Vec<f64> = body
        .lines()
        .filter(|l| !l.starts_with("3 "))
        .map(|l| l.split_whitespace().nth(2).unwrap().parse().unwrap())
        .collect();
    let extent = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max) - z.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!((extent - 6.0 * t).abs() < 1e-6 * t, "extent {extent} vs t = {t}");
}

#[test]
fn verify_suites() {
    let lemmas = helicoid(&["verify", "--suite", "lemmas", "--coarse"]);
    assert_eq!(code(&lemmas), 0, "{}", String::from_utf8_lossy(&lemmas.stderr));
    let reports: Vec<serde_json::Value> = serde_json::from_slice(&lemmas.stdout).unwrap();
    assert!(reports.iter().all(|r| r["status"] == "pass"));
    let structure = helicoid(&["verify", "--suite", "structure", "--beta", "1.0", "--random", "1"]);
    assert_eq!(code(&structure), 0, "{}", String::from_utf8_lossy(&structure.stderr));
    // The divergence thresholds are not reached, so the claim suite reports failures.
    let claims = helicoid(&["verify", "--suite", "claims", "--beta", "1.0", "--coarse"]);
    assert_eq!(code(&claims), 3);
    let reports: Vec<serde_json::Value> = serde_json::from_slice(&claims.stdout).unwrap();
    let failing: Vec<&str> = reports.iter().filter(|r| r["status"] == "fail").map(|r| r["check_id"].as_str().unwrap()).collect();
    assert!(failing.iter().all(|id| ["h_diverges_at_rho_zero", "d_diverges_at_rho_pi", "d_rho_zero_residue_value"].contains(id)), "{failing:?}");
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "beta = 0.5\na_points = 2\nrho_points = 3\n").unwrap();
    let o = helicoid(&["--config", cfg.to_str().unwrap(), "scan"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 7);
    let o = helicoid(&["--config", cfg.to_str().unwrap(), "scan", "--a-points", "3"]);
    assert_eq!(String::from_utf8_lossy(&o.stdout).lines().count(), 10);
    std::fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(code(&helicoid(&["--config", cfg.to_str().unwrap(), "scan", "--beta", "0.5"])), 64);
}
