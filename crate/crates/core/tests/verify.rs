//! Verification suites: manifest coverage, determinism and report format.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use helicoid_core::period_solver::SolvedData;
use helicoid_core::surface_domain::Params;
use helicoid_core::verify::{
    appendix_aux, run_all, run_check, sign_changes, CheckReport, CheckStatus, Outcome, Suite, VerifyGrids, MANIFEST,
};

fn structure_list() -> Vec<SolvedData> {
    vec![
        SolvedData::at(Params::new(0.4, 1.3, 0.6).unwrap()).unwrap(),
        SolvedData::at(Params::new(0.6, 2.2, 1.0).unwrap()).unwrap(),
    ]
}

fn coarse_reports() -> &'static Vec<CheckReport> {
    static R: OnceLock<Vec<CheckReport>> = OnceLock::new();
    R.get_or_init(|| run_all(&VerifyGrids::coarse(), &structure_list(), 7).unwrap())
}

#[test]
fn every_manifest_entry_is_implemented_and_vice_versa() {
    let reported: BTreeSet<&str> = coarse_reports().iter().map(|r| r.check_id.as_str()).collect();
    let manifest: BTreeSet<&str> = MANIFEST.iter().map(|e| e.check_id).collect();
    assert_eq!(manifest.len(), MANIFEST.len(), "duplicate manifest ids");
    let missing: Vec<_> = manifest.difference(&reported).collect();
    let unlisted: Vec<_> = reported.difference(&manifest).collect();
    assert!(missing.is_empty(), "manifest entries without a check: {missing:?}");
    assert!(unlisted.is_empty(), "checks missing from the manifest: {unlisted:?}");
    assert_eq!(reported.len(), coarse_reports().len(), "a check id is reported twice");
    for suite in [Suite::Claim, Suite::Lemma, Suite::Structure] {
        assert!(MANIFEST.iter().any(|e| e.suite == suite));
    }
}

#[test]
fn reports_are_consistent() {
    for r in coarse_reports() {
        assert!(r.pass_count + r.fail_count > 0, "{}", r.check_id);
        assert_eq!(r.passed(), r.fail_count == 0 && r.pass_count > 0, "{}", r.check_id);
        assert!(r.worst_case.is_some(), "{} has no worst case", r.check_id);
        assert!(r.errors.len() <= r.fail_count);
    }
}

/// Only the divergence thresholds and the closed-form value near `ρ = 0` fail; every
/// other statement holds on the coarse grids.
#[test]
fn known_failures_only() {
    let failing: BTreeSet<&str> = coarse_reports().iter().filter(|r| !r.passed()).map(|r| r.check_id.as_str()).collect();
    let allowed: BTreeSet<&str> = ["h_diverges_at_rho_zero", "d_diverges_at_rho_pi", "d_rho_zero_residue_value"].into();
    assert!(failing.is_subset(&allowed), "unexpected failures: {:?}", failing.difference(&allowed).collect::<Vec<_>>());
    for id in ["h_blowup_monotone_at_rho_zero", "d_blowup_monotone_at_rho_pi", "h_corner_value", "d_unique_root_at_a_zero"] {
        assert!(coarse_reports().iter().any(|r| r.check_id == id && r.passed()), "{id}");
    }
}

#[test]
fn reports_are_bit_for_bit_reproducible() {
    let again = run_all(&VerifyGrids::coarse(), &structure_list(), 7).unwrap();
    assert_eq!(serde_json::to_string(coarse_reports()).unwrap(), serde_json::to_string(&again).unwrap());
}

#[test]
fn report_key_order_is_stable() {
    let json = serde_json::to_string(&coarse_reports()[0]).unwrap();
    let keys = ["\"check_id\"", "\"grid\"", "\"pass_count\"", "\"fail_count\"", "\"worst_case\"", "\"status\"", "\"errors\""];
    let pos: Vec<usize> = keys.iter().map(|k| json.find(k).unwrap_or_else(|| panic!("{k} missing"))).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]), "{json}");
    let back: CheckReport = serde_json::from_str(&json).unwrap();
    assert_eq!(&back, &coarse_reports()[0]);
}

#[test]
fn errored_cells_count_as_failures() {
    let r = run_check("demo", "two cells".into(), &["x"], vec![vec![1.0], vec![-1.0]], |p| {
        if p[0] < 0.0 {
            Err(helicoid_core::Error::InvalidInput("negative".into()))
        } else {
            Ok(Outcome::positive(p[0]))
        }
    });
    assert_eq!((r.pass_count, r.fail_count), (1, 1));
    assert_eq!(r.status, CheckStatus::Fail);
    assert_eq!(r.errors.len(), 1);
}

#[test]
fn nan_margins_fail() {
    let r = run_check("nan", "one cell".into(), &["x"], vec![vec![0.0]], |_| Ok(Outcome::positive(f64::NAN)));
    assert_eq!(r.status, CheckStatus::Fail);
}

#[test]
fn sign_change_counter() {
    assert_eq!(sign_changes(|x| Ok(x - 1.0), 64).unwrap(), 1);
    assert_eq!(sign_changes(|x| Ok((x - 1.0) * (x - 2.0)), 64).unwrap(), 2);
    assert_eq!(sign_changes(|x| Ok(x + 1.0), 64).unwrap(), 0);
}

#[test]
fn appendix_quantities() {
    let aux = appendix_aux(1.5, 0.6, 16).unwrap();
    assert!((0.0..=1.0).contains(&aux.a0));
    assert_eq!(aux.t_vals.len(), aux.g_vals.len());
    for ((t, g), th) in aux.t_vals.iter().zip(&aux.g_vals).zip(&aux.theta_vals) {
        assert!(*g >= -1e-10, "G({t}) = {g}");
        assert!(*th >= -1e-12 && *th <= t / 2.0 + 1e-12, "θ({t}) = {th}");
    }
    let json = serde_json::to_value(&aux).unwrap();
    for k in ["A0", "G_vals", "theta_vals", "H_val"] {
        assert!(json.get(k).is_some(), "{k}");
    }
}

#[test]
fn invalid_grids_are_rejected() {
    let g = VerifyGrids { betas: vec![1.5], ..VerifyGrids::coarse() };
    assert!(g.validate().is_err());
    let g = VerifyGrids { a_values: vec![1.0], ..VerifyGrids::coarse() };
    assert!(g.validate().is_err());
}
