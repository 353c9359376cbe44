//! `helicoid`: solve the period problem, scan `h` and `d`, export meshes and run the
//! verification suites.
//!
//! Exit codes: 0 success, 2 solver non-convergence, 3 failed check or invariant,
//! 64 usage error.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use helicoid_core::builder::{
    assemble_complete, fit_boundary, mesh_fundamental, write_mesh, BoundaryGeometry, BoundaryTag, Mesh, MeshConfig,
    MeshFormat,
};
use helicoid_core::forms::DerivedConstants;
use helicoid_core::period_solver::{compute_a3, d_func, h_func, solve_b, solve_period_problem_with, SolvedData};
use helicoid_core::surface_domain::Params;
use helicoid_core::verify::{
    random_parameter_points, run_claim_suite, run_lemma_suite, run_structure_suite, CheckReport, VerifyGrids,
};
use helicoid_core::Error;

const EXIT_NONCONVERGENT: u8 = 2;
const EXIT_CHECK_FAILED: u8 = 3;
const EXIT_USAGE: u8 = 64;

#[derive(Debug, Parser)]
#[command(name = "helicoid", version, about = "Minimal surfaces with helicoidal ends: period problem, scans, meshes, checks")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Args)]
struct Common {
    /// Flat TOML file with defaults for any flag (flags take precedence).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Angle parameter β ∈ (0, 1] (comma-separated list for `verify`).
    #[arg(long, global = true)]
    beta: Option<String>,
    /// Residual tolerance.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for randomized spot checks.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve h = d = 0 and write the solution record.
    Solve {
        /// Samples along the curve h = 0.
        #[arg(long)]
        points: Option<usize>,
    },
    /// Tabulate b, a₃, h, d on a cell-centred (a, ρ) grid as CSV.
    Scan {
        #[arg(long)]
        a_points: Option<usize>,
        #[arg(long)]
        rho_points: Option<usize>,
    },
    /// Mesh the fundamental piece (or an assembly of copies) of a solution.
    Mesh {
        /// Solution file written by `solve`; without it the problem is solved for --beta.
        #[arg(long)]
        solution: Option<PathBuf>,
        #[arg(long)]
        radial: Option<usize>,
        #[arg(long)]
        angular: Option<usize>,
        /// Number of copies to assemble by Schwarz reflection.
        #[arg(long)]
        copies: Option<usize>,
        /// obj or ply.
        #[arg(long)]
        format: Option<String>,
    },
    /// Run verification suites and write a JSON report.
    Verify {
        #[arg(long, value_enum)]
        suite: Option<SuiteSel>,
        /// Use reduced grids.
        #[arg(long)]
        coarse: bool,
        /// Random parameter points added to the structure suite.
        #[arg(long)]
        random: Option<usize>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
enum SuiteSel {
    Claims,
    Lemmas,
    Structure,
    All,
}

/// Flat key/value configuration; every key is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config {
    beta: Option<toml::Value>,
    tol: Option<f64>,
    out: Option<PathBuf>,
    seed: Option<u64>,
    threads: Option<usize>,
    points: Option<usize>,
    a_points: Option<usize>,
    rho_points: Option<usize>,
    solution: Option<PathBuf>,
    radial: Option<usize>,
    angular: Option<usize>,
    copies: Option<usize>,
    format: Option<String>,
    suite: Option<SuiteSel>,
    random: Option<usize>,
}

/// Solution file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub beta: f64,
    pub a: f64,
    pub rho: f64,
    pub b: f64,
    pub a3: f64,
    pub lambda: f64,
    pub c1: f64,
    pub c2: f64,
    pub a1: f64,
    pub a2: f64,
    #[serde(rename = "R")]
    pub r: f64,
    pub t_period: f64,
    pub residual_h: f64,
    pub residual_d: f64,
    #[serde(rename = "residual_F")]
    pub residual_f: f64,
    pub residual_a3_cross: f64,
    pub root_count: usize,
}

impl SolutionRecord {
    fn from_solved(s: &SolvedData) -> Self {
        SolutionRecord {
            beta: s.params.beta,
            a: s.params.a,
            rho: s.params.rho,
            b: s.b,
            a3: s.a3,
            lambda: s.params.lambda,
            c1: s.consts.c1,
            c2: s.consts.c2,
            a1: s.consts.a1,
            a2: s.consts.a2,
            r: s.r,
            t_period: s.t_period,
            residual_h: s.residual_h,
            residual_d: s.residual_d,
            residual_f: s.residual_f,
            residual_a3_cross: s.residual_a3_cross,
            root_count: s.root_count,
        }
    }

    fn to_solved(&self) -> helicoid_core::Result<SolvedData> {
        let params = Params::with_lambda(self.a, self.rho, self.beta, self.lambda)?;
        let consts = DerivedConstants::new(self.a, self.rho, self.beta, self.b, self.a3)?;
        Ok(SolvedData {
            params,
            b: self.b,
            a3: self.a3,
            consts,
            r: self.r,
            t_period: self.t_period,
            residual_f: self.residual_f,
            residual_h: self.residual_h,
            residual_d: self.residual_d,
            residual_a3_cross: self.residual_a3_cross,
            root_count: self.root_count,
        })
    }
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, err: anyhow!(msg.into()) }
}

fn check_failed(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_CHECK_FAILED, err: anyhow!(msg.into()) }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::NonConvergent { .. } | Error::Unsolved | Error::NoSignChange(_) | Error::LiftNotConverged { .. } => {
                EXIT_NONCONVERGENT
            }
            Error::InvalidInput(_) => EXIT_USAGE,
            Error::WeldMismatch { .. } | Error::Mesh(_) => EXIT_CHECK_FAILED,
            _ => 1,
        };
        Failure { code, err: e.into() }
    }
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure { code: 1, err }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(path: Option<&Path>) -> CliResult<Config> {
    let Some(path) = path else { return Ok(Config::default()) };
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    toml::from_str(&text).map_err(|e| usage(format!("config {}: {e}", path.display())))
}

/// β values from a flag (comma-separated) or the config (number or array).
fn beta_list(flag: Option<&str>, cfg: Option<&toml::Value>) -> CliResult<Option<Vec<f64>>> {
    let vals: Vec<f64> = if let Some(s) = flag {
        s.split(',')
            .map(|t| t.trim().parse::<f64>().map_err(|_| usage(format!("invalid --beta value {t:?}"))))
            .collect::<CliResult<_>>()?
    } else if let Some(v) = cfg {
        match v {
            toml::Value::Float(x) => vec![*x],
            toml::Value::Integer(i) => vec![*i as f64],
            toml::Value::Array(items) => items
                .iter()
                .map(|x| x.as_float().or_else(|| x.as_integer().map(|i| i as f64)).ok_or_else(|| usage("config beta must be numeric")))
                .collect::<CliResult<_>>()?,
            _ => return Err(usage("config beta must be a number or an array of numbers")),
        }
    } else {
        return Ok(None);
    };
    if vals.is_empty() || vals.iter().any(|b| !(*b > 0.0 && *b <= 1.0)) {
        return Err(usage(format!("beta must lie in (0, 1], got {vals:?}")));
    }
    Ok(Some(vals))
}

fn single_beta(list: Option<Vec<f64>>) -> CliResult<f64> {
    match list.as_deref() {
        Some([b]) => Ok(*b),
        Some(_) => Err(usage("this command takes a single --beta")),
        None => Err(usage("--beta is required")),
    }
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> CliResult<()> {
    match out {
        Some(p) => fs::write(p, bytes).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(bytes).context("writing stdout")?,
    }
    Ok(())
}

fn run(cli: Cli) -> CliResult<u8> {
    let cfg = load_config(cli.common.config.as_deref())?;
    if let Some(n) = cli.common.threads.or(cfg.threads) {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring thread pool")?;
    }
    let betas = beta_list(cli.common.beta.as_deref(), cfg.beta.as_ref())?;
    let tol = cli.common.tol.or(cfg.tol).unwrap_or(1e-8);
    if !(tol > 0.0) {
        return Err(usage("--tol must be positive"));
    }
    let out = cli.common.out.clone().or(cfg.out.clone());
    let seed = cli.common.seed.or(cfg.seed).unwrap_or(0);
    match cli.command {
        Command::Solve { points } => cmd_solve(single_beta(betas)?, tol, points.or(cfg.points).unwrap_or(64), out.as_deref()),
        Command::Scan { a_points, rho_points } => cmd_scan(
            single_beta(betas)?,
            a_points.or(cfg.a_points).unwrap_or(10),
            rho_points.or(cfg.rho_points).unwrap_or(10),
            out.as_deref(),
        ),
        Command::Mesh { solution, radial, angular, copies, format } => {
            let format_name = format.or(cfg.format.clone()).unwrap_or_else(|| "obj".into());
            let format: MeshFormat = format_name.parse().map_err(|_| usage(format!("unknown mesh format {format_name:?}")))?;
            let solution = solution.or(cfg.solution.clone());
            let solved = match solution {
                Some(path) => read_solution(&path)?,
                None => solve(single_beta(betas)?, tol, 64)?,
            };
            let base = MeshConfig::for_a(solved.params.a);
            let cfg_mesh = MeshConfig {
                radial_res: radial.or(cfg.radial).unwrap_or(base.radial_res),
                angular_res: angular.or(cfg.angular).unwrap_or(base.angular_res),
                copies: copies.or(cfg.copies).unwrap_or(1),
                ..base
            };
            cmd_mesh(&solved, &cfg_mesh, format, out.as_deref())
        }
        Command::Verify { suite, coarse, random } => cmd_verify(
            suite.or(cfg.suite).unwrap_or(SuiteSel::All),
            betas,
            coarse,
            random.or(cfg.random).unwrap_or(4),
            seed,
            out.as_deref(),
        ),
    }
}

fn solve(beta: f64, tol: f64, points: usize) -> CliResult<SolvedData> {
    let sol = solve_period_problem_with(beta, points)?;
    let s = sol.solved;
    if s.residual_h.abs() > tol || s.residual_d.abs() > tol {
        return Err(Failure {
            code: EXIT_NONCONVERGENT,
            err: anyhow!("residuals |h| = {:e}, |d| = {:e} exceed tolerance {tol:e}", s.residual_h.abs(), s.residual_d.abs()),
        });
    }
    Ok(s)
}

fn cmd_solve(beta: f64, tol: f64, points: usize, out: Option<&Path>) -> CliResult<u8> {
    if points < 2 {
        return Err(usage("--points must be at least 2"));
    }
    let s = solve(beta, tol, points)?;
    let record = SolutionRecord::from_solved(&s);
    let mut text = serde_json::to_string_pretty(&record).context("serializing solution")?;
    text.push('\n');
    write_output(out, text.as_bytes())?;
    eprintln!("beta = {beta}: a = {}, rho = {}, roots = {}", s.params.a, s.params.rho, s.root_count);
    Ok(0)
}

fn read_solution(path: &Path) -> CliResult<SolvedData> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let record: SolutionRecord =
        serde_json::from_str(&text).map_err(|e| usage(format!("solution file {}: {e}", path.display())))?;
    Ok(record.to_solved()?)
}

/// One row of the scan table.
#[derive(Debug, Clone, Copy, Serialize)]
struct ScanRow {
    a: f64,
    rho: f64,
    b: f64,
    a3: f64,
    h: f64,
    d: f64,
}

fn scan_cell(a: f64, rho: f64, beta: f64) -> (ScanRow, usize) {
    let mut failures = 0;
    let mut ok = |r: helicoid_core::Result<f64>| {
        r.unwrap_or_else(|_| {
            failures += 1;
            f64::NAN
        })
    };
    let b = ok(solve_b(a, rho, beta));
    let a3 = if b.is_nan() { f64::NAN } else { ok(compute_a3(a, rho, beta, b).map(|v| v.inner)) };
    let h = ok(h_func(a, rho, beta));
    let d = ok(d_func(a, rho, beta));
    (ScanRow { a, rho, b, a3, h, d }, failures)
}

fn cmd_scan(beta: f64, na: usize, nr: usize, out: Option<&Path>) -> CliResult<u8> {
    if na == 0 || nr == 0 {
        return Err(usage("grid sizes must be positive"));
    }
    let cells: Vec<(f64, f64)> = (0..na)
        .flat_map(|i| {
            let a = (i as f64 + 0.5) / na as f64;
            (0..nr).map(move |j| (a, std::f64::consts::PI * (j as f64 + 0.5) / nr as f64))
        })
        .collect();
    let rows: Vec<(ScanRow, usize)> = cells.par_iter().map(|&(a, rho)| scan_cell(a, rho, beta)).collect();
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let mut failures = 0;
    for (row, f) in &rows {
        w.serialize(row).context("writing csv row")?;
        failures += f;
    }
    let bytes = w.into_inner().map_err(|e| anyhow!("flushing csv: {e}"))?;
    write_output(out, &bytes)?;
    if failures > 0 {
        eprintln!("warning: {failures} cell value(s) failed to evaluate and were written as NaN");
    }
    Ok(0)
}

fn print_geometry(g: &BoundaryGeometry, mesh: &Mesh) {
    eprintln!("boundary lines (tag, residual, relative residual, points):");
    for tag in BoundaryTag::LINES {
        let l = g.line(tag);
        eprintln!("  {:<4} {:>10.3e} {:>10.3e} {:>5}", tag.label(), l.residual, l.relative_residual(), l.count);
    }
    let (zmin, zmax) = mesh.vertical_range();
    eprintln!("plane angle {:.12} (l2: {:.12})", g.plane_angle, g.plane_angle_l2);
    eprintln!("d_geo {:.3e}  h_geo {:.3e}  t_geo {:.12}", g.d_geo, g.h_geo, g.t_geo);
    eprintln!("corner gap {:.3e}  diameter {:.6}  vertical range [{:.6}, {:.6}]", g.corner_gap(), mesh.diameter(), zmin, zmax);
    eprintln!("vertices {}  faces {}  closure defect {:.3e}", mesh.vertices.len(), mesh.faces.len(), mesh.closure_defect);
}

/// Relative line-fit residual above which the boundary is rejected.
const LINE_FIT_LIMIT: f64 = 1e-5;

fn cmd_mesh(solved: &SolvedData, cfg: &MeshConfig, format: MeshFormat, out: Option<&Path>) -> CliResult<u8> {
    cfg.validate(solved.params.a)?;
    let mesh = mesh_fundamental(solved, cfg)?;
    let geometry = fit_boundary(&mesh)?;
    print_geometry(&geometry, &mesh);
    let worst = geometry.worst_relative_residual();
    if !(worst < LINE_FIT_LIMIT) {
        return Err(check_failed(format!("boundary line fit residual {worst:e} exceeds {LINE_FIT_LIMIT:e}")));
    }
    let result = if cfg.copies > 1 {
        let assembly = assemble_complete(&mesh, &geometry, cfg.copies)?;
        let (zmin, zmax) = assembly.mesh.vertical_range();
        eprintln!(
            "assembled {} copies: vertices {}, faces {}, vertical extent {:.9}",
            cfg.copies,
            assembly.mesh.vertices.len(),
            assembly.mesh.faces.len(),
            zmax - zmin
        );
        assembly.mesh
    } else {
        mesh
    };
    let mut bytes = Vec::new();
    write_mesh(&result, format, &mut bytes)?;
    write_output(out, &bytes)?;
    Ok(0)
}

fn cmd_verify(suite: SuiteSel, betas: Option<Vec<f64>>, coarse: bool, random: usize, seed: u64, out: Option<&Path>) -> CliResult<u8> {
    let mut grids = if coarse { VerifyGrids::coarse() } else { VerifyGrids::default() };
    if let Some(b) = &betas {
        grids.betas = b.clone();
    }
    let mut reports: Vec<CheckReport> = Vec::new();
    if matches!(suite, SuiteSel::Claims | SuiteSel::All) {
        reports.extend(run_claim_suite(&grids)?);
    }
    if matches!(suite, SuiteSel::Lemmas | SuiteSel::All) {
        reports.extend(run_lemma_suite(&grids)?);
    }
    if matches!(suite, SuiteSel::Structure | SuiteSel::All) {
        let mut list = Vec::new();
        for &beta in betas.as_deref().unwrap_or(&[1.0]) {
            list.push(solve_period_problem_with(beta, 64)?.solved);
        }
        list.extend(random_parameter_points(random, seed)?);
        reports.extend(run_structure_suite(&list, seed)?);
    }
    let mut text = serde_json::to_string_pretty(&reports).context("serializing report")?;
    text.push('\n');
    write_output(out, text.as_bytes())?;
    let failed: Vec<&str> = reports.iter().filter(|r| !r.passed()).map(|r| r.check_id.as_str()).collect();
    for r in &reports {
        let margin = r.worst_case.as_ref().map_or(f64::NAN, |w| w.margin);
        eprintln!("{:<32} {:<4} {:>5} pass {:>4} fail  worst margin {:.3e}", r.check_id, if r.passed() { "ok" } else { "FAIL" }, r.pass_count, r.fail_count, margin);
    }
    if failed.is_empty() {
        Ok(0)
    } else {
        Err(check_failed(format!("{} check(s) failed: {}", failed.len(), failed.join(", "))))
    }
}
