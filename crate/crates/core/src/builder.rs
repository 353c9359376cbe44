//! Gauss map and immersion by path integration, meshing of the fundamental piece,
//! boundary-line fitting, assembly by Schwarz reflection, total curvature and export.
//!
//! The fundamental piece is covered by two charts. The inner chart is the closed right
//! half of the unit disk in `z` on the sheet [`inner_sheet`]; the outer chart is its
//! image under `S`, i.e. the same half disk in `ζ = 1/z` with `ω = inner_sheet(ζ)`. The
//! two charts share the unit-circle arc between the branch points `e^{±iρ/2}` (the
//! point with `z = e^{iθ}` in the inner chart is the point with `ζ = e^{−iθ}` in the
//! outer chart). Each chart carries one end at `ia` (in its own coordinate) and is
//! meshed with a log-polar grid around it.

use std::collections::{BTreeMap, HashMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use nalgebra::{Matrix2, Matrix3, Vector3};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::FormContext;
use crate::period_solver::SolvedData;
use crate::quadrature::{integrate, integrate_joint, QuadSpec};
use crate::surface_domain::{inner_sheet, lift_path, w_values, Chart, LiftedPath, SurfacePoint};

type C64 = Complex64;

/// Label of a boundary edge of the fundamental piece.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum BoundaryTag {
    L0Plus,
    L0Minus,
    L1Plus,
    L1Minus,
    L2Plus,
    L2Minus,
    Cut,
}

impl BoundaryTag {
    /// The six straight boundary lines in generator order.
    pub const LINES: [BoundaryTag; 6] = [
        BoundaryTag::L0Plus,
        BoundaryTag::L0Minus,
        BoundaryTag::L1Plus,
        BoundaryTag::L1Minus,
        BoundaryTag::L2Plus,
        BoundaryTag::L2Minus,
    ];

    pub fn label(self) -> &'static str {
        match self {
            BoundaryTag::L0Plus => "l0+",
            BoundaryTag::L0Minus => "l0-",
            BoundaryTag::L1Plus => "l1+",
            BoundaryTag::L1Minus => "l1-",
            BoundaryTag::L2Plus => "l2+",
            BoundaryTag::L2Minus => "l2-",
            BoundaryTag::Cut => "cut",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "l0+" => Some(BoundaryTag::L0Plus),
            "l0-" | "l0−" => Some(BoundaryTag::L0Minus),
            "l1+" => Some(BoundaryTag::L1Plus),
            "l1-" | "l1−" => Some(BoundaryTag::L1Minus),
            "l2+" => Some(BoundaryTag::L2Plus),
            "l2-" | "l2−" => Some(BoundaryTag::L2Minus),
            "cut" => Some(BoundaryTag::Cut),
            _ => None,
        }
    }

    fn is_vertical(self) -> bool {
        matches!(self, BoundaryTag::L0Plus | BoundaryTag::L0Minus)
    }
}

impl fmt::Display for BoundaryTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A boundary edge between two vertex indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BoundaryEdge {
    pub a: usize,
    pub b: usize,
    pub tag: BoundaryTag,
}

/// Triangulated surface piece.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub boundary: Vec<BoundaryEdge>,
    /// Gauss map at each vertex (empty for meshes read from files or assembled).
    #[serde(skip)]
    pub gauss: Vec<C64>,
    /// Named vertices: `1+`, `q1+`, `q1-`, `q2+`, `q2-` and the truncated line tips
    /// `tip1+`, `tip1-`, `tip2+`, `tip2-`.
    pub markers: BTreeMap<String, usize>,
    /// Largest cycle-closure defect of the spanning-tree integration (absolute).
    pub closure_defect: f64,
}

impl Mesh {
    /// Diagonal of the bounding box.
    pub fn diameter(&self) -> f64 {
        if self.vertices.is_empty() {
            return 0.0;
        }
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for v in &self.vertices {
            for i in 0..3 {
                lo[i] = lo[i].min(v[i]);
                hi[i] = hi[i].max(v[i]);
            }
        }
        ((hi[0] - lo[0]).powi(2) + (hi[1] - lo[1]).powi(2) + (hi[2] - lo[2]).powi(2)).sqrt()
    }

    /// `(min x₃, max x₃)`.
    pub fn vertical_range(&self) -> (f64, f64) {
        self.vertices
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v[2]), hi.max(v[2])))
    }

    /// Vertex indices of a boundary chain, in first-seen order.
    pub fn chain(&self, tag: BoundaryTag) -> Vec<usize> {
        let mut seen = Vec::new();
        let mut mark = vec![false; self.vertices.len()];
        for e in self.boundary.iter().filter(|e| e.tag == tag) {
            for v in [e.a, e.b] {
                if !mark[v] {
                    mark[v] = true;
                    seen.push(v);
                }
            }
        }
        seen
    }

    /// Check the structural invariants: finite coordinates and valid face indices.
    pub fn validate(&self) -> Result<()> {
        if self.vertices.iter().any(|v| v.iter().any(|c| !c.is_finite())) {
            return Err(Error::Mesh("non-finite vertex coordinate".into()));
        }
        let n = self.vertices.len();
        if self.faces.iter().any(|f| f.iter().any(|&i| i >= n)) || self.boundary.iter().any(|e| e.a >= n || e.b >= n) {
            return Err(Error::Mesh("index out of range".into()));
        }
        Ok(())
    }
}

/// Mesh resolution and truncation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub radial_res: usize,
    pub angular_res: usize,
    /// Outer truncation radius in z. The outer chart reaches `z = ∞` through `ζ = 0`, so
    /// this only has to be consistent; the region `|z| > 1` is always meshed in full.
    pub r_max: f64,
    /// Radius of the excluded disk around each end, in the chart coordinate.
    pub eps_end: f64,
    /// Number of fundamental pieces laid out by [`assemble_complete`].
    pub copies: usize,
}

impl MeshConfig {
    /// Defaults for end parameter `a`: 64×64, `eps_end = 0.05a`, `r_max = 4/a`.
    pub fn for_a(a: f64) -> Self {
        MeshConfig { radial_res: 64, angular_res: 64, r_max: 4.0 / a, eps_end: 0.05 * a, copies: 1 }
    }

    pub fn with_resolution(mut self, radial: usize, angular: usize) -> Self {
        self.radial_res = radial;
        self.angular_res = angular;
        self
    }

    pub fn validate(&self, a: f64) -> Result<()> {
        if self.radial_res < 8 || self.angular_res < 8 {
            return Err(Error::InvalidInput("mesh resolutions must be at least 8".into()));
        }
        if !(self.eps_end > 0.0 && self.eps_end < a / 4.0) {
            return Err(Error::InvalidInput(format!("eps_end must lie in (0, a/4), got {}", self.eps_end)));
        }
        if self.eps_end >= 0.5 * (1.0 - a) {
            return Err(Error::InvalidInput("eps_end must be below (1 - a)/2".into()));
        }
        if !(self.r_max > 1.0 / a) {
            return Err(Error::InvalidInput(format!("r_max must exceed 1/a = {}", 1.0 / a)));
        }
        if self.copies == 0 {
            return Err(Error::InvalidInput("copies must be positive".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------------
// Path integration of the Weierstrass data
// ---------------------------------------------------------------------------------

/// Running values of the Weierstrass integration: `log g` and `X`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassState {
    pub log_g: C64,
    pub x: [f64; 3],
}

impl WeierstrassState {
    /// State at the base point `1₊`: `g = 1`, `X = 0`.
    pub fn base() -> Self {
        WeierstrassState { log_g: C64::new(0.0, 0.0), x: [0.0; 3] }
    }

    pub fn gauss(&self) -> C64 {
        self.log_g.exp()
    }
}

fn edge_spec() -> QuadSpec {
    QuadSpec::with_tol(1e-13, 1e-11)
}

/// Integrate `(log g, X)` along the straight segment `z0 → z1` in `chart`, with the sheet
/// given by `sheet(z)`. Flags mark endpoints that are branch points.
fn segment<W: Fn(C64, f64) -> C64>(
    ctx: &FormContext,
    chart: Chart,
    z0: C64,
    z1: C64,
    sheet: W,
    state: WeierstrassState,
    sing: (bool, bool),
    spec: &QuadSpec,
    immersion: bool,
) -> Result<WeierstrassState> {
    let dz = z1 - z0;
    let point = |s: f64| SurfacePoint { z: z0 + dz * s, w: sheet(z0 + dz * s, s), chart };
    if !immersion {
        let dl = integrate(|s| Ok(ctx.dlogg_phi3(&point(s)).0 * dz), 0.0, 1.0, &spec.singular(sing.0, sing.1))?;
        return Ok(WeierstrassState { log_g: state.log_g + dl, x: state.x });
    }
    let r = integrate_joint::<3, _, _>(
        |s| Ok(ctx.dlogg_phi3(&point(s)).0 * dz),
        |s, l| {
            let (_, phi3) = ctx.dlogg_phi3(&point(s));
            let g = l.exp();
            let f3 = phi3 * dz;
            Ok([0.5 * (g.inv() - g) * f3, 0.5 * C64::i() * (g.inv() + g) * f3, f3])
        },
        0.0,
        1.0,
        state.log_g,
        &spec.singular(sing.0, sing.1),
    )?;
    let mut x = state.x;
    for i in 0..3 {
        x[i] += r.values[i].re;
    }
    Ok(WeierstrassState { log_g: r.l_end, x })
}

/// Integrate along a lifted polyline starting from `state`.
pub fn integrate_lifted(ctx: &FormContext, path: &LiftedPath, state: WeierstrassState) -> Result<WeierstrassState> {
    let spec = edge_spec();
    let zero = C64::new(0.0, 0.0);
    let mut st = state;
    for k in 0..path.samples.len().saturating_sub(1) {
        let (p0, p1) = (path.samples[k], path.samples[k + 1]);
        let rho = path.rho;
        let sheet = |z: C64, s: f64| {
            let guess = p0.w + (p1.w - p0.w) * s;
            let (r, _) = w_values(z, rho);
            if (r - guess).norm() <= (-r - guess).norm() {
                r
            } else {
                -r
            }
        };
        st = segment(ctx, p0.chart, p0.z, p1.z, sheet, st, (p0.w == zero, p1.w == zero), &spec, true)?;
    }
    Ok(st)
}

/// The point of the fundamental piece over `z` (`Re z ≥ 0`): inner chart for `|z| ≤ 1`,
/// outer chart (coordinate `ζ = 1/z`) otherwise.
pub fn domain_point(z: C64, rho: f64) -> SurfacePoint {
    if z.norm() <= 1.0 {
        SurfacePoint::finite(z, inner_sheet(z, rho))
    } else {
        let zeta = z.inv();
        SurfacePoint::inverted(zeta, inner_sheet(zeta, rho))
    }
}

/// Chart and chart coordinate of a point of the fundamental piece.
fn locate(p: &SurfacePoint, rho: f64) -> Result<(Chart, C64)> {
    let q = p.canonical();
    let (chart, c) = (q.chart, q.z);
    if c.re < -1e-12 || c.norm() > 1.0 + 1e-12 {
        return Err(Error::InvalidInput(format!("point {:?} is outside the fundamental piece", p.z_value())));
    }
    let expected = inner_sheet(c, rho);
    if (q.w - expected).norm() > 1e-8 * (1.0 + expected.norm()) {
        return Err(Error::InvalidInput(format!(
            "point {:?} lies on the other sheet of the fundamental piece",
            p.z_value()
        )));
    }
    Ok((chart, c))
}

fn is_branch(c: C64, rho: f64) -> bool {
    inner_sheet(c, rho) == C64::new(0.0, 0.0) || (c * c - C64::from_polar(1.0, rho)).norm() < 1e-14 || (c * c - C64::from_polar(1.0, -rho)).norm() < 1e-14
}

/// `(log g, X)` at a point of the fundamental piece, integrated along the straight path
/// from `1₊` in the point's chart.
pub fn weierstrass_at(p: &SurfacePoint, solved: &SolvedData) -> Result<WeierstrassState> {
    let rho = solved.params.rho;
    let (chart, c) = locate(p, rho)?;
    let one = C64::new(1.0, 0.0);
    if (c - one).norm() == 0.0 {
        return Ok(WeierstrassState::base());
    }
    let ctx = solved.context();
    let sheet = |z: C64, _s: f64| inner_sheet(z, rho);
    segment(&ctx, chart, one, c, sheet, WeierstrassState::base(), (false, is_branch(c, rho)), &edge_spec(), true)
}

/// Gauss map `g(p) = exp ∫_{1₊}^p dg/g` on the fundamental piece.
pub fn gauss_map(p: &SurfacePoint, solved: &SolvedData) -> Result<C64> {
    Ok(weierstrass_at(p, solved)?.gauss())
}

/// Immersion `X(p) = Re ∫_{1₊}^p (Φ₁, Φ₂, Φ₃)` with `X(1₊) = 0`.
pub fn immerse(p: &SurfacePoint, solved: &SolvedData) -> Result<[f64; 3]> {
    Ok(weierstrass_at(p, solved)?.x)
}

/// `(log g, X)` at the end of a polyline in the chart of `start_chart`, continued
/// analytically from `1₊` (the path may leave the fundamental piece).
pub fn continue_along(z_path: &[C64], chart: Chart, solved: &SolvedData) -> Result<WeierstrassState> {
    let rho = solved.params.rho;
    let one = C64::new(1.0, 0.0);
    if z_path.first().map(|z| (z - one).norm() > 1e-14) != Some(false) {
        return Err(Error::InvalidInput("continuation paths start at z = 1".into()));
    }
    let w1 = inner_sheet(one, rho);
    let start = SurfacePoint { z: one, w: w1, chart };
    let lifted = lift_path(z_path, start, rho)?;
    integrate_lifted(&solved.context(), &lifted, WeierstrassState::base())
}

// ---------------------------------------------------------------------------------
// Fundamental mesh
// ---------------------------------------------------------------------------------

/// Angles on the unit circle used for the rays, ascending from −π/2 to π/2. The gap
/// `|θ| ≤ ρ/2` is sampled symmetrically (so the two charts share vertices there) and
/// always contains `0` and `±ρ/2`.
fn circle_angles(rho: f64, angular_res: usize) -> Vec<f64> {
    let half = rho / 2.0;
    let share = (angular_res as f64 * rho / PI / 2.0).round() as usize;
    let n_gap_half = share.max(2);
    let n_slit = ((angular_res.saturating_sub(2 * n_gap_half)) / 2).max(2);
    let mut out = Vec::with_capacity(2 * (n_gap_half + n_slit) + 1);
    for k in 0..n_slit {
        out.push(-FRAC_PI_2 + (FRAC_PI_2 - half) * k as f64 / n_slit as f64);
    }
    for k in 0..2 * n_gap_half {
        out.push(-half + rho * k as f64 / (2 * n_gap_half) as f64);
    }
    out[n_slit + n_gap_half] = 0.0;
    for k in 0..=n_slit {
        out.push(half + (FRAC_PI_2 - half) * k as f64 / n_slit as f64);
    }
    out[0] = -FRAC_PI_2;
    let last = out.len() - 1;
    out[last] = FRAC_PI_2;
    out
}

/// Log-polar grid point around `ia` at circle angle `θ` (ray direction) and level `σ`.
fn grid_point(a: f64, theta: f64, sigma: f64, eps: f64, edge: i8) -> C64 {
    let ia = C64::new(0.0, a);
    let target = C64::from_polar(1.0, theta);
    if sigma >= 1.0 {
        return match edge {
            -1 => C64::new(0.0, -1.0),
            1 => C64::new(0.0, 1.0),
            _ => target,
        };
    }
    let dir = target - ia;
    let big_r = dir.norm();
    let r = eps * (big_r / eps).powf(sigma);
    match edge {
        -1 => C64::new(0.0, a - r),
        1 => C64::new(0.0, a + r),
        _ => ia + dir * (r / big_r),
    }
}

#[derive(Debug, Clone, Copy)]
struct VertexInfo {
    inner: Option<C64>,
    outer: Option<C64>,
    branch: bool,
}

impl VertexInfo {
    fn coord(&self, chart: Chart) -> C64 {
        match chart {
            Chart::Finite => self.inner.expect("vertex has an inner coordinate"),
            Chart::Inverted => self.outer.expect("vertex has an outer coordinate"),
        }
    }
}

struct Topology {
    info: Vec<VertexInfo>,
    faces: Vec<[usize; 3]>,
    /// Undirected edges with the chart they are integrated in.
    edges: Vec<(usize, usize, Chart)>,
    boundary: Vec<BoundaryEdge>,
    markers: BTreeMap<String, usize>,
    root: usize,
}

fn build_topology(a: f64, rho: f64, cfg: &MeshConfig) -> Topology {
    let thetas = circle_angles(rho, cfg.angular_res);
    let nj = thetas.len();
    let nk = cfg.radial_res + 1;
    let half = rho / 2.0;
    let in_gap = |t: f64| t.abs() <= half + 1e-15;
    let mut info: Vec<VertexInfo> = Vec::with_capacity(2 * nj * nk);
    let mut inner_id = vec![0usize; nj * nk];
    let mut outer_id = vec![0usize; nj * nk];
    let edge_of = |j: usize| -> i8 {
        if j == 0 {
            -1
        } else if j == nj - 1 {
            1
        } else {
            0
        }
    };
    for j in 0..nj {
        for k in 0..nk {
            let sigma = k as f64 / (nk - 1) as f64;
            let z = grid_point(a, thetas[j], sigma, cfg.eps_end, edge_of(j));
            let on_circle = k == nk - 1;
            let branch = on_circle && (thetas[j].abs() - half).abs() < 1e-15;
            let outer = if on_circle && in_gap(thetas[j]) { Some(z.conj()) } else { None };
            inner_id[j * nk + k] = info.len();
            info.push(VertexInfo { inner: Some(z), outer, branch });
        }
    }
    for j in 0..nj {
        for k in 0..nk {
            if k == nk - 1 && in_gap(thetas[j]) {
                // shared with the inner vertex at −θ
                outer_id[j * nk + k] = inner_id[(nj - 1 - j) * nk + k];
            } else {
                let sigma = k as f64 / (nk - 1) as f64;
                let zeta = grid_point(a, thetas[j], sigma, cfg.eps_end, edge_of(j));
                outer_id[j * nk + k] = info.len();
                info.push(VertexInfo { inner: None, outer: Some(zeta), branch: false });
            }
        }
    }
    let mut faces = Vec::new();
    let mut edge_set: HashMap<(usize, usize), Chart> = HashMap::new();
    let mut edges = Vec::new();
    let mut add_edge = |u: usize, v: usize, chart: Chart, edges: &mut Vec<(usize, usize, Chart)>| {
        let key = (u.min(v), u.max(v));
        if let std::collections::hash_map::Entry::Vacant(e) = edge_set.entry(key) {
            e.insert(chart);
            edges.push((u, v, chart));
        }
    };
    for (ids, chart) in [(&inner_id, Chart::Finite), (&outer_id, Chart::Inverted)] {
        for j in 0..nj - 1 {
            for k in 0..nk - 1 {
                let v00 = ids[j * nk + k];
                let v01 = ids[j * nk + k + 1];
                let v10 = ids[(j + 1) * nk + k];
                let v11 = ids[(j + 1) * nk + k + 1];
                faces.push([v00, v01, v11]);
                faces.push([v00, v11, v10]);
                add_edge(v00, v01, chart, &mut edges);
                add_edge(v01, v11, chart, &mut edges);
                add_edge(v00, v11, chart, &mut edges);
                add_edge(v11, v10, chart, &mut edges);
                add_edge(v00, v10, chart, &mut edges);
            }
        }
    }
    // Boundary chains.
    let mut boundary = Vec::new();
    for (ids, inner) in [(&inner_id, true), (&outer_id, false)] {
        for j in 0..nj - 1 {
            boundary.push(BoundaryEdge { a: ids[j * nk], b: ids[(j + 1) * nk], tag: BoundaryTag::Cut });
            let mid = 0.5 * (thetas[j] + thetas[j + 1]);
            if !in_gap(mid) {
                let upper = mid > 0.0;
                let tag = match (inner, upper) {
                    (true, true) | (false, false) => BoundaryTag::L0Plus,
                    _ => BoundaryTag::L0Minus,
                };
                boundary.push(BoundaryEdge { a: ids[j * nk + nk - 1], b: ids[(j + 1) * nk + nk - 1], tag });
            }
        }
        let (low, high) = if inner {
            (BoundaryTag::L1Minus, BoundaryTag::L1Plus)
        } else {
            (BoundaryTag::L2Plus, BoundaryTag::L2Minus)
        };
        for k in 0..nk - 1 {
            boundary.push(BoundaryEdge { a: ids[k], b: ids[k + 1], tag: low });
            boundary.push(BoundaryEdge { a: ids[(nj - 1) * nk + k], b: ids[(nj - 1) * nk + k + 1], tag: high });
        }
    }
    let mut markers = BTreeMap::new();
    let j0 = thetas.iter().position(|&t| t == 0.0).expect("θ = 0 is a grid angle");
    let root = inner_id[j0 * nk + nk - 1];
    markers.insert("1+".to_string(), root);
    markers.insert("q1+".to_string(), inner_id[(nj - 1) * nk + nk - 1]);
    markers.insert("q1-".to_string(), inner_id[nk - 1]);
    markers.insert("q2-".to_string(), outer_id[(nj - 1) * nk + nk - 1]);
    markers.insert("q2+".to_string(), outer_id[nk - 1]);
    markers.insert("tip1+".to_string(), inner_id[(nj - 1) * nk]);
    markers.insert("tip1-".to_string(), inner_id[0]);
    markers.insert("tip2-".to_string(), outer_id[(nj - 1) * nk]);
    markers.insert("tip2+".to_string(), outer_id[0]);
    Topology { info, faces, edges, boundary, markers, root }
}

fn edge_state(
    ctx: &FormContext,
    rho: f64,
    info: &[VertexInfo],
    from: usize,
    to: usize,
    chart: Chart,
    state: WeierstrassState,
    immersion: bool,
) -> Result<WeierstrassState> {
    let (z0, z1) = (info[from].coord(chart), info[to].coord(chart));
    let sheet = |z: C64, _s: f64| inner_sheet(z, rho);
    // The Gauss image only needs g to plotting accuracy; near the punctures the pole
    // terms lose digits to cancellation, so a tight tolerance would not converge.
    let spec = if immersion { edge_spec() } else { QuadSpec::with_tol(1e-12, 1e-9) };
    let flags = (info[from].branch, info[to].branch);
    let b = ctx.consts.b;
    let wrap = |e: Error| Error::Mesh(format!("edge integration {z0} -> {z1} failed: {e}"));
    // An axis edge across the zero/pole of g at −ib is replaced by a two-segment path
    // that passes it inside the domain, where the values are defined by continuity.
    if z0.re == 0.0 && z1.re == 0.0 && (z0.im + b) * (z1.im + b) < 0.0 {
        let delta = 0.5 * (z0.im + b).abs().min((z1.im + b).abs());
        let mid = C64::new(delta, -b);
        let s = segment(ctx, chart, z0, mid, sheet, state, (flags.0, false), &spec, immersion).map_err(wrap)?;
        return segment(ctx, chart, mid, z1, sheet, s, (false, flags.1), &spec, immersion).map_err(wrap);
    }
    segment(ctx, chart, z0, z1, sheet, state, flags, &spec, immersion).map_err(wrap)
}

/// Mesh the fundamental piece: log-polar grids around the ends of both charts, values
/// accumulated along a breadth-first spanning tree rooted at `1₊` (branch-point vertices
/// are leaves), closure defects measured on the remaining edges.
pub fn mesh_fundamental(solved: &SolvedData, cfg: &MeshConfig) -> Result<Mesh> {
    mesh_domain(solved, cfg, true)
}

/// Mesh of the Gauss image of the fundamental piece: same grid and boundary tags as
/// [`mesh_fundamental`], but only `log g` is integrated and the vertices are the unit
/// normals. Cheap and well-conditioned even with ends truncated extremely close to the
/// punctures, where the immersion itself grows without bound.
pub fn mesh_gauss_image(solved: &SolvedData, cfg: &MeshConfig) -> Result<Mesh> {
    mesh_domain(solved, cfg, false)
}

fn mesh_domain(solved: &SolvedData, cfg: &MeshConfig, immersion: bool) -> Result<Mesh> {
    let a = solved.params.a;
    let rho = solved.params.rho;
    cfg.validate(a)?;
    let topo = build_topology(a, rho, cfg);
    let ctx = solved.context();
    let n = topo.info.len();
    let mut adj: Vec<Vec<(usize, Chart)>> = vec![Vec::new(); n];
    for &(u, v, c) in &topo.edges {
        adj[u].push((v, c));
        adj[v].push((u, c));
    }
    let mut state: Vec<Option<WeierstrassState>> = vec![None; n];
    let mut in_tree = vec![false; n];
    state[topo.root] = Some(WeierstrassState::base());
    in_tree[topo.root] = true;
    let mut tree_edges: HashMap<(usize, usize), ()> = HashMap::new();
    let mut frontier = vec![topo.root];
    while !frontier.is_empty() {
        let mut next: Vec<(usize, usize, Chart)> = Vec::new();
        for &u in &frontier {
            if topo.info[u].branch && u != topo.root {
                continue;
            }
            for &(v, c) in &adj[u] {
                if !in_tree[v] {
                    in_tree[v] = true;
                    next.push((u, v, c));
                    tree_edges.insert((u.min(v), u.max(v)), ());
                }
            }
        }
        let results: Vec<Result<(usize, WeierstrassState)>> = next
            .par_iter()
            .map(|&(u, v, c)| {
                let s0 = state[u].expect("parent is computed");
                edge_state(&ctx, rho, &topo.info, u, v, c, s0, immersion).map(|s| (v, s))
            })
            .collect();
        frontier.clear();
        for r in results {
            let (v, s) = r?;
            state[v] = Some(s);
            frontier.push(v);
        }
    }
    if state.iter().any(|s| s.is_none()) {
        return Err(Error::Mesh("spanning tree does not reach every vertex".into()));
    }
    let state: Vec<WeierstrassState> = state.into_iter().map(|s| s.unwrap()).collect();
    let defects: Vec<Result<f64>> = topo
        .edges
        .par_iter()
        .filter(|(u, v, _)| !tree_edges.contains_key(&((*u).min(*v), (*u).max(*v))))
        .map(|&(u, v, c)| {
            // integrate away from a branch point if one end is a branch point
            let (from, to) = if topo.info[u].branch { (v, u) } else { (u, v) };
            let s = edge_state(&ctx, rho, &topo.info, from, to, c, state[from], immersion)?;
            let t = state[to];
            if immersion {
                Ok((0..3).map(|i| (s.x[i] - t.x[i]).abs()).fold(0.0, f64::max))
            } else {
                Ok((s.log_g - t.log_g).norm())
            }
        })
        .collect();
    let mut closure = 0.0f64;
    for d in defects {
        closure = closure.max(d?);
    }
    let mesh = Mesh {
        vertices: state
            .iter()
            .map(|s| if immersion { s.x } else { a3(&gauss_to_sphere(s.gauss())) })
            .collect(),
        faces: topo.faces,
        boundary: topo.boundary,
        gauss: state.iter().map(|s| s.gauss()).collect(),
        markers: topo.markers,
        closure_defect: closure,
    };
    mesh.validate()?;
    Ok(mesh)
}

// ---------------------------------------------------------------------------------
// Boundary geometry
// ---------------------------------------------------------------------------------

/// Least-squares line through one boundary chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FittedLine {
    pub tag: BoundaryTag,
    pub point: [f64; 3],
    /// Unit direction; for the horizontal lines it points from the corner towards the end.
    pub direction: [f64; 3],
    /// Largest distance of a chain vertex from the line.
    pub residual: f64,
    /// Largest distance between two chain vertices.
    pub length: f64,
    pub count: usize,
}

impl FittedLine {
    pub fn relative_residual(&self) -> f64 {
        if self.length > 0.0 {
            self.residual / self.length
        } else {
            0.0
        }
    }

    /// The 180° rotation about this line.
    pub fn half_turn(&self) -> Motion {
        Motion::half_turn(v3(self.point), v3(self.direction))
    }
}

/// Fitted boundary configuration of a fundamental mesh.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryGeometry {
    /// Lines in the order `l0+, l0−, l1+, l1−, l2+, l2−`.
    pub lines: Vec<FittedLine>,
    /// Angle between the half-lines `ℓ₁⁻` and `ℓ₁⁺` (the angle between `Π⁻` and `Π⁺`).
    pub plane_angle: f64,
    /// Same angle measured with `ℓ₂^±`.
    pub plane_angle_l2: f64,
    /// Horizontal distance between the vertical lines `ℓ₀⁺` and `ℓ₀⁻`.
    pub d_geo: f64,
    /// `⟨q₁⁻q₂⁺, n⟩` with `n` the unit vector from `q₂⁻` to `q₁⁻`.
    pub h_geo: f64,
    /// Screw translation `⟨q₂⁻q₂⁺, n⟩`.
    pub t_geo: f64,
    pub q1_plus: [f64; 3],
    pub q1_minus: [f64; 3],
    pub q2_plus: [f64; 3],
    pub q2_minus: [f64; 3],
    pub diameter: f64,
    /// Heights of the horizontal lines (`l1+, l1−, l2+, l2−`).
    pub heights: [f64; 4],
    /// Largest excursion of the mesh outside the slab between the extreme line heights.
    pub slab_excess: f64,
}

impl BoundaryGeometry {
    pub fn line(&self, tag: BoundaryTag) -> &FittedLine {
        self.lines.iter().find(|l| l.tag == tag).expect("all six lines are fitted")
    }

    /// Largest relative fit residual over the six lines.
    pub fn worst_relative_residual(&self) -> f64 {
        self.lines.iter().map(|l| l.relative_residual()).fold(0.0, f64::max)
    }

    /// `|q₁⁻ − q₂⁺|` relative to the mesh diameter.
    pub fn corner_gap(&self) -> f64 {
        norm3(sub3(self.q1_minus, self.q2_plus)) / self.diameter.max(f64::MIN_POSITIVE)
    }
}

fn v3(p: [f64; 3]) -> Vector3<f64> {
    Vector3::new(p[0], p[1], p[2])
}

fn a3(v: &Vector3<f64>) -> [f64; 3] {
    [v[0], v[1], v[2]]
}

fn sub3(p: [f64; 3], q: [f64; 3]) -> [f64; 3] {
    [p[0] - q[0], p[1] - q[1], p[2] - q[2]]
}

fn norm3(p: [f64; 3]) -> f64 {
    (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt()
}

fn chain_length(pts: &[[f64; 3]]) -> f64 {
    // extent along the principal direction is enough for a near-straight chain
    let mut best = 0.0f64;
    let first = pts[0];
    let far = pts.iter().copied().fold(first, |acc, p| if norm3(sub3(p, first)) > norm3(sub3(acc, first)) { p } else { acc });
    for p in pts {
        best = best.max(norm3(sub3(*p, far)));
    }
    best
}

fn fit_line(tag: BoundaryTag, pts: &[[f64; 3]], corner: [f64; 3]) -> Result<FittedLine> {
    if pts.len() < 2 {
        return Err(Error::Mesh(format!("chain {tag} has fewer than two vertices")));
    }
    let n = pts.len() as f64;
    let mean = pts.iter().fold([0.0; 3], |acc, p| [acc[0] + p[0] / n, acc[1] + p[1] / n, acc[2] + p[2] / n]);
    let length = chain_length(pts);
    let (point, direction) = if tag.is_vertical() {
        ([mean[0], mean[1], mean[2]], [0.0, 0.0, 1.0])
    } else {
        let mut cov = Matrix2::zeros();
        for p in pts {
            let d = [p[0] - mean[0], p[1] - mean[1]];
            cov[(0, 0)] += d[0] * d[0];
            cov[(0, 1)] += d[0] * d[1];
            cov[(1, 0)] += d[1] * d[0];
            cov[(1, 1)] += d[1] * d[1];
        }
        let eig = cov.symmetric_eigen();
        let k = if eig.eigenvalues[0] >= eig.eigenvalues[1] { 0 } else { 1 };
        let mut u = [eig.eigenvectors[(0, k)], eig.eigenvectors[(1, k)], 0.0];
        // orient from the corner towards the far end
        let far = pts.iter().copied().fold(corner, |acc, p| if norm3(sub3(p, corner)) > norm3(sub3(acc, corner)) { p } else { acc });
        let dir = sub3(far, corner);
        if u[0] * dir[0] + u[1] * dir[1] < 0.0 {
            u = [-u[0], -u[1], 0.0];
        }
        (mean, u)
    };
    let residual = pts
        .iter()
        .map(|p| {
            let d = sub3(*p, point);
            let t = d[0] * direction[0] + d[1] * direction[1] + d[2] * direction[2];
            norm3([d[0] - t * direction[0], d[1] - t * direction[1], d[2] - t * direction[2]])
        })
        .fold(0.0, f64::max);
    Ok(FittedLine { tag, point, direction, residual, length, count: pts.len() })
}

fn marker(mesh: &Mesh, name: &str) -> Result<[f64; 3]> {
    mesh.markers
        .get(name)
        .map(|&i| mesh.vertices[i])
        .ok_or_else(|| Error::Mesh(format!("mesh has no marker {name}")))
}

/// Fit the six boundary lines of a fundamental mesh and derive the configuration
/// offsets `d`, `h`, `t`.
pub fn fit_boundary(mesh: &Mesh) -> Result<BoundaryGeometry> {
    let q1p = marker(mesh, "q1+")?;
    let q1m = marker(mesh, "q1-")?;
    let q2p = marker(mesh, "q2+")?;
    let q2m = marker(mesh, "q2-")?;
    let corner_of = |tag: BoundaryTag| match tag {
        BoundaryTag::L0Plus | BoundaryTag::L1Plus => q1p,
        BoundaryTag::L0Minus | BoundaryTag::L1Minus => q1m,
        BoundaryTag::L2Plus => q2p,
        _ => q2m,
    };
    let mut lines = Vec::with_capacity(6);
    for tag in BoundaryTag::LINES {
        let pts: Vec<[f64; 3]> = mesh.chain(tag).into_iter().map(|i| mesh.vertices[i]).collect();
        lines.push(fit_line(tag, &pts, corner_of(tag))?);
    }
    let get = |t: BoundaryTag| lines.iter().find(|l| l.tag == t).copied().unwrap();
    let angle = |u: [f64; 3], v: [f64; 3]| (u[0] * v[0] + u[1] * v[1] + u[2] * v[2]).clamp(-1.0, 1.0).acos();
    let plane_angle = angle(get(BoundaryTag::L1Minus).direction, get(BoundaryTag::L1Plus).direction);
    let plane_angle_l2 = angle(get(BoundaryTag::L2Minus).direction, get(BoundaryTag::L2Plus).direction);
    let (p0, m0) = (get(BoundaryTag::L0Plus).point, get(BoundaryTag::L0Minus).point);
    let d_geo = ((p0[0] - m0[0]).powi(2) + (p0[1] - m0[1]).powi(2)).sqrt();
    let nvec = sub3(q1m, q2m);
    let nn = norm3(nvec).max(f64::MIN_POSITIVE);
    let n = [nvec[0] / nn, nvec[1] / nn, nvec[2] / nn];
    let dot = |p: [f64; 3]| p[0] * n[0] + p[1] * n[1] + p[2] * n[2];
    let h_geo = dot(sub3(q2p, q1m));
    let t_geo = dot(sub3(q2p, q2m));
    let heights = [
        get(BoundaryTag::L1Plus).point[2],
        get(BoundaryTag::L1Minus).point[2],
        get(BoundaryTag::L2Plus).point[2],
        get(BoundaryTag::L2Minus).point[2],
    ];
    let lo = heights.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slab_excess = mesh.vertices.iter().map(|v| (lo - v[2]).max(v[2] - hi).max(0.0)).fold(0.0, f64::max);
    Ok(BoundaryGeometry {
        lines,
        plane_angle,
        plane_angle_l2,
        d_geo,
        h_geo,
        t_geo,
        q1_plus: q1p,
        q1_minus: q1m,
        q2_plus: q2p,
        q2_minus: q2m,
        diameter: mesh.diameter(),
        heights,
        slab_excess,
    })
}

// ---------------------------------------------------------------------------------
// Rigid motions and assembly
// ---------------------------------------------------------------------------------

/// Rigid motion `x ↦ R x + c`, with the parity of the number of reflections used to
/// build it (each Schwarz reflection reverses the orientation of the parameter domain).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Motion {
    pub rot: Matrix3<f64>,
    pub trans: Vector3<f64>,
    pub flipped: bool,
}

impl Motion {
    pub fn identity() -> Self {
        Motion { rot: Matrix3::identity(), trans: Vector3::zeros(), flipped: false }
    }

    /// Half-turn about the line through `p` with unit direction `u`.
    pub fn half_turn(p: Vector3<f64>, u: Vector3<f64>) -> Self {
        let u = u.normalize();
        let rot = 2.0 * u * u.transpose() - Matrix3::identity();
        Motion { rot, trans: p - rot * p, flipped: true }
    }

    pub fn apply(&self, x: [f64; 3]) -> [f64; 3] {
        a3(&(self.rot * v3(x) + self.trans))
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Motion) -> Motion {
        Motion { rot: self.rot * other.rot, trans: self.rot * other.trans + self.trans, flipped: self.flipped ^ other.flipped }
    }

    pub fn is_translation(&self, tol: f64) -> bool {
        (self.rot - Matrix3::identity()).abs().max() < tol
    }
}

/// `τ₁ = 𝒮₁⁺ ∘ 𝒮₂⁺` from the fitted lines.
pub fn tau1(geometry: &BoundaryGeometry) -> Motion {
    let s1 = geometry.line(BoundaryTag::L1Plus).half_turn();
    let s2 = geometry.line(BoundaryTag::L2Plus).half_turn();
    s1.compose(&s2)
}

/// Points that identify a copy of the fundamental piece as a set.
fn signature_points(mesh: &Mesh) -> Result<Vec<[f64; 3]>> {
    ["q1+", "q1-", "q2+", "q2-", "tip1+", "tip1-", "tip2+", "tip2-"].iter().map(|m| marker(mesh, m)).collect()
}

fn same_point_set(a: &[[f64; 3]], b: &[[f64; 3]], tol: f64) -> bool {
    let mut used = vec![false; b.len()];
    a.iter().all(|p| {
        if let Some(k) = (0..b.len()).find(|&k| !used[k] && norm3(sub3(*p, b[k])) <= tol) {
            used[k] = true;
            true
        } else {
            false
        }
    })
}

struct SpatialHash {
    cell: f64,
    map: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl SpatialHash {
    fn new(cell: f64) -> Self {
        SpatialHash { cell, map: HashMap::new() }
    }

    fn key(&self, p: [f64; 3]) -> (i64, i64, i64) {
        ((p[0] / self.cell).floor() as i64, (p[1] / self.cell).floor() as i64, (p[2] / self.cell).floor() as i64)
    }

    fn insert(&mut self, p: [f64; 3], id: usize) {
        let k = self.key(p);
        self.map.entry(k).or_default().push(id);
    }

    fn nearest(&self, p: [f64; 3], pts: &[[f64; 3]], tol: f64) -> Option<(usize, f64)> {
        let (x, y, z) = self.key(p);
        let mut best: Option<(usize, f64)> = None;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(ids) = self.map.get(&(x + dx, y + dy, z + dz)) {
                        for &i in ids {
                            let d = norm3(sub3(pts[i], p));
                            if d <= tol && best.map_or(true, |(_, bd)| d < bd) {
                                best = Some((i, d));
                            }
                        }
                    }
                }
            }
        }
        best
    }
}

/// Several copies of the fundamental piece welded along shared boundary lines.
#[derive(Debug, Clone, PartialEq)]
pub struct Assembly {
    pub mesh: Mesh,
    /// For each copy, how many of its vertices were identified with earlier vertices.
    pub welded: Vec<usize>,
}

/// Lay out `copies` fundamental pieces by successive half-turns about the fitted boundary
/// lines (breadth first, generators in the order `l0+, l0−, l1+, l1−, l2+, l2−`), skipping
/// copies that coincide with one already placed, and weld boundary vertices that agree
/// within `1e−7·max(1, diameter)`.
pub fn assemble_complete(mesh: &Mesh, geometry: &BoundaryGeometry, copies: usize) -> Result<Assembly> {
    if copies == 0 {
        return Err(Error::InvalidInput("copies must be positive".into()));
    }
    let diam = geometry.diameter.max(1.0);
    let tol = 1e-7 * diam;
    let period_residual = geometry.d_geo.abs().max(geometry.h_geo.abs());
    if period_residual > 1e-6 * diam {
        return Err(Error::WeldMismatch { mismatch: period_residual });
    }
    let sig = signature_points(mesh)?;
    let gens: Vec<Motion> = geometry.lines.iter().map(|l| l.half_turn()).collect();
    let mut placed: Vec<(Motion, Vec<[f64; 3]>, Option<BoundaryTag>)> = vec![(Motion::identity(), sig.clone(), None)];
    let mut queue: VecDeque<usize> = VecDeque::from([0]);
    'bfs: while placed.len() < copies {
        let Some(i) = queue.pop_front() else { break };
        for (g, line) in gens.iter().zip(BoundaryTag::LINES) {
            let m = placed[i].0.compose(g);
            let s: Vec<[f64; 3]> = sig.iter().map(|p| m.apply(*p)).collect();
            if placed.iter().any(|(_, t, _)| same_point_set(&s, t, 1e-6 * diam)) {
                continue;
            }
            placed.push((m, s, Some(line)));
            queue.push_back(placed.len() - 1);
            if placed.len() == copies {
                break 'bfs;
            }
        }
    }
    if placed.len() < copies {
        return Err(Error::Mesh(format!("only {} distinct copies are reachable", placed.len())));
    }
    let plan: Vec<(Motion, Option<BoundaryTag>)> = placed.into_iter().map(|(m, _, t)| (m, t)).collect();
    weld_copies(mesh, &plan, tol)
}

/// The fundamental piece together with its Schwarz-reflection image across one line.
pub fn assemble_pair(mesh: &Mesh, geometry: &BoundaryGeometry, across: BoundaryTag) -> Result<Assembly> {
    if across == BoundaryTag::Cut {
        return Err(Error::InvalidInput("cannot reflect across a truncation cut".into()));
    }
    let tol = 1e-7 * geometry.diameter.max(1.0);
    let plan = [(Motion::identity(), None), (geometry.line(across).half_turn(), Some(across))];
    weld_copies(mesh, &plan, tol)
}

fn weld_copies(mesh: &Mesh, placed: &[(Motion, Option<BoundaryTag>)], tol: f64) -> Result<Assembly> {
    let on_boundary: Vec<bool> = {
        let mut b = vec![false; mesh.vertices.len()];
        for e in &mesh.boundary {
            if e.tag != BoundaryTag::Cut {
                b[e.a] = true;
                b[e.b] = true;
            }
        }
        b
    };
    let mut out = Mesh::default();
    let mut hash = SpatialHash::new(4.0 * tol);
    let mut welded_boundary = Vec::new();
    let mut welded = Vec::with_capacity(placed.len());
    for (m, across) in placed {
        let mut map = vec![0usize; mesh.vertices.len()];
        let mut worst = 0.0f64;
        let n_before = out.vertices.len();
        for (i, v) in mesh.vertices.iter().enumerate() {
            let p = m.apply(*v);
            if on_boundary[i] {
                if let Some((j, _)) = hash.nearest(p, &out.vertices, tol) {
                    map[i] = j;
                    continue;
                }
            }
            map[i] = out.vertices.len();
            out.vertices.push(p);
            if on_boundary[i] {
                hash.insert(p, map[i]);
            }
        }
        // the chain across which this copy was attached must weld completely
        if let Some(tag) = across {
            for i in mesh.chain(*tag) {
                if map[i] >= n_before {
                    let p = out.vertices[map[i]];
                    let nearest = out.vertices[..n_before].iter().map(|q| norm3(sub3(*q, p))).fold(f64::INFINITY, f64::min);
                    worst = worst.max(nearest);
                }
            }
        }
        if worst > 0.0 {
            return Err(Error::WeldMismatch { mismatch: worst });
        }
        welded.push((0..mesh.vertices.len()).filter(|&i| map[i] < n_before).count());
        for f in &mesh.faces {
            let t = [map[f[0]], map[f[1]], map[f[2]]];
            out.faces.push(if m.flipped { [t[0], t[2], t[1]] } else { t });
        }
        for e in &mesh.boundary {
            welded_boundary.push(BoundaryEdge { a: map[e.a], b: map[e.b], tag: e.tag });
        }
    }
    // keep boundary edges that still bound exactly one face
    let mut count: HashMap<(usize, usize), usize> = HashMap::new();
    for f in &out.faces {
        for (u, v) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            *count.entry((u.min(v), u.max(v))).or_default() += 1;
        }
    }
    let mut seen = HashMap::new();
    for e in welded_boundary {
        let key = (e.a.min(e.b), e.a.max(e.b));
        if count.get(&key) == Some(&1) && seen.insert(key, ()).is_none() {
            out.boundary.push(e);
        }
    }
    out.validate()?;
    Ok(Assembly { mesh: out, welded })
}

// ---------------------------------------------------------------------------------
// Total curvature
// ---------------------------------------------------------------------------------

/// Signed area of the spherical triangle with unit-vector vertices.
fn spherical_triangle_area(a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> f64 {
    let num = a.dot(&b.cross(&c));
    let den = 1.0 + a.dot(&b) + b.dot(&c) + c.dot(&a);
    2.0 * num.atan2(den)
}

/// Unit normal direction from the Gauss map (inverse stereographic projection).
pub fn gauss_to_sphere(g: C64) -> Vector3<f64> {
    let m = g.norm_sqr();
    Vector3::new(2.0 * g.re, 2.0 * g.im, m - 1.0) / (m + 1.0)
}

/// Spherical area of the Gauss image of a mesh carrying Gauss-map values.
pub fn gauss_image_area(mesh: &Mesh) -> Result<f64> {
    if mesh.gauss.len() != mesh.vertices.len() {
        return Err(Error::Mesh("mesh carries no Gauss-map values".into()));
    }
    let n: Vec<Vector3<f64>> = mesh.gauss.iter().map(|g| gauss_to_sphere(*g)).collect();
    let s: f64 = mesh.faces.par_iter().map(|f| spherical_triangle_area(n[f[0]], n[f[1]], n[f[2]])).sum();
    Ok(s.abs())
}

/// Number of copies of the fundamental piece in the quotient of the complete surface by
/// the vertical translation `τ₁`: the orbit of the piece under the group generated by
/// the half-turns about its boundary lines, counted modulo `τ₁`.
///
/// With `oriented` set, two copies that coincide as point sets but carry opposite unit
/// normals count separately (this is the count on the oriented quotient, where the Gauss
/// map is defined); the mesh must then carry Gauss-map values.
pub fn quotient_copy_count(mesh: &Mesh, geometry: &BoundaryGeometry, max_copies: usize, oriented: bool) -> Result<usize> {
    let t1 = tau1(geometry);
    let diam = geometry.diameter.max(1.0);
    if !t1.is_translation(1e-7) || t1.trans.xy().norm() > 1e-6 * diam {
        return Err(Error::Mesh("τ₁ from the fitted lines is not a vertical translation".into()));
    }
    let period = t1.trans[2].abs();
    if period < 1e-9 * diam {
        return Err(Error::Mesh("vertical period vanishes".into()));
    }
    let names = ["1+", "q1+", "q1-", "q2+", "q2-", "tip1+", "tip1-", "tip2+", "tip2-"];
    let mut sig: Vec<([f64; 3], Vector3<f64>)> = Vec::with_capacity(names.len());
    for name in names {
        let &i = mesh.markers.get(name).ok_or_else(|| Error::Mesh(format!("mesh has no marker {name}")))?;
        let normal = if oriented {
            let g = mesh.gauss.get(i).ok_or(Error::MissingGaussMap("orientation needs Gauss-map values"))?;
            gauss_to_sphere(*g)
        } else {
            Vector3::zeros()
        };
        sig.push((mesh.vertices[i], normal));
    }
    // Position plus a scaled normal: copies differing only in orientation are far apart.
    let image = |m: &Motion| -> Vec<[f64; 6]> {
        let pts: Vec<([f64; 3], Vector3<f64>)> = sig
            .iter()
            .map(|(p, n)| {
                let s = if m.flipped { -1.0 } else { 1.0 };
                (m.apply(*p), s * (m.rot * n))
            })
            .collect();
        let c = pts.iter().map(|(p, _)| p[2]).sum::<f64>() / pts.len() as f64;
        let k = (c / period).floor();
        pts.into_iter()
            .map(|(p, n)| [p[0], p[1], p[2] - k * period, diam * n[0], diam * n[1], diam * n[2]])
            .collect()
    };
    let tol = 1e-5 * diam;
    let same_set = |a: &[[f64; 6]], b: &[[f64; 6]]| {
        let mut used = vec![false; b.len()];
        a.iter().all(|p| {
            let hit = (0..b.len()).find(|&k| !used[k] && p.iter().zip(&b[k]).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt() <= tol);
            hit.map(|k| used[k] = true).is_some()
        })
    };
    let same_mod = |a: &[[f64; 6]], b: &[[f64; 6]]| {
        // allow one extra period shift either way (normalisation boundary)
        [-1.0, 0.0, 1.0].iter().any(|&k| {
            let shifted: Vec<[f64; 6]> = a.iter().map(|p| [p[0], p[1], p[2] + k * period, p[3], p[4], p[5]]).collect();
            same_set(&shifted, b)
        })
    };
    let gens: Vec<Motion> = geometry.lines.iter().map(|l| l.half_turn()).collect();
    let mut orbit: Vec<(Motion, Vec<[f64; 6]>)> = vec![(Motion::identity(), image(&Motion::identity()))];
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        for g in &gens {
            let m = orbit[i].0.compose(g);
            let s = image(&m);
            if orbit.iter().any(|(_, t)| same_mod(&s, t)) {
                continue;
            }
            orbit.push((m, s));
            if orbit.len() > max_copies {
                return Err(Error::Mesh(format!("orbit exceeds {max_copies} copies (is β rational?)")));
            }
            queue.push_back(orbit.len() - 1);
        }
    }
    Ok(orbit.len())
}

/// Rational approximation `β = q/p` with `p ≤ max_den`.
pub fn rational_beta(beta: f64, max_den: u64) -> Option<(u64, u64)> {
    (1..=max_den).find_map(|p| {
        let q = (beta * p as f64).round();
        ((beta - q / p as f64).abs() < 1e-9 && q >= 1.0).then_some((q as u64, p))
    })
}

/// Total curvature of the quotient by `τ₁` predicted for `β = q/p`:
/// `−8π(p+q)` if `p` is even or `q` is even, `−4π(p+q)` if both are odd.
pub fn predicted_total_curvature(beta: f64) -> Option<f64> {
    let (q, p) = rational_beta(beta, 64)?;
    let s = (p + q) as f64;
    Some(if p % 2 == 0 || q % 2 == 0 { -8.0 * PI * s } else { -4.0 * PI * s })
}

/// Outcome of the curvature computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Spherical area of the Gauss image of one fundamental piece.
    pub gauss_area: f64,
    /// Same area from the half-resolution mesh (difference is the error estimate).
    pub gauss_area_coarse: f64,
    /// Copies of the piece in the oriented quotient by `τ₁`.
    pub copies: usize,
    /// Copies counted as point sets (differs from `copies` when the quotient by `τ₁`
    /// alone is not orientable).
    pub unoriented_copies: usize,
    /// `−copies · gauss_area`.
    pub total_curvature: f64,
    pub error_estimate: f64,
    /// Closed-form prediction when β is rational with small denominator.
    pub predicted: Option<f64>,
}

/// End truncation used for the Gauss image: the omitted caps shrink like `ε^{2β}`, and
/// below about `1e−7·a` the pole terms of `dg/g` lose too many digits to cancellation.
pub const CURVATURE_EPS_END: f64 = 1e-6;

/// Total curvature of the quotient surface, from the Gauss image of a fine mesh with
/// nearly untruncated ends (`eps_end = 1e−6·a`) and the orbit count of the piece. The
/// error estimate adds the change under halving the resolution and the change under a
/// ten times larger truncation radius.
pub fn total_curvature(solved: &SolvedData, refinement: usize) -> Result<CurvatureReport> {
    let a = solved.params.a;
    let base = MeshConfig::for_a(a);
    let geo_mesh = mesh_fundamental(solved, &base.with_resolution(32, 32))?;
    let geometry = fit_boundary(&geo_mesh)?;
    let copies = quotient_copy_count(&geo_mesh, &geometry, 4096, true)?;
    let unoriented_copies = quotient_copy_count(&geo_mesh, &geometry, 4096, false)?;
    let half = (refinement / 2).max(8);
    let eps = CURVATURE_EPS_END * a;
    let area = |res: usize, eps_end: f64| -> Result<f64> {
        let cfg = MeshConfig { eps_end, ..base.with_resolution(res, res) };
        gauss_image_area(&mesh_gauss_image(solved, &cfg)?)
    };
    let fine = area(refinement, eps)?;
    let coarse = area(half, eps)?;
    let truncated = area(refinement, 10.0 * eps)?;
    let n = copies as f64;
    Ok(CurvatureReport {
        gauss_area: fine,
        gauss_area_coarse: coarse,
        copies,
        unoriented_copies,
        total_curvature: -n * fine,
        error_estimate: n * ((fine - coarse).abs() + (fine - truncated).abs()),
        predicted: predicted_total_curvature(solved.params.beta),
    })
}

// ---------------------------------------------------------------------------------
// Symmetry consistency of the immersion
// ---------------------------------------------------------------------------------

/// Deviation `|X(S₂⁺p) − rot_ℓ(X(p))|` for one sample, where `ℓ` is the fitted line of the
/// imaginary-axis chain that the straight continuation from `p` to `S₂⁺p` crosses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSample {
    pub chart: Chart,
    pub z: C64,
    pub line: BoundaryTag,
    pub deviation: f64,
}

/// Check the Schwarz-reflection consistency `X(S₂⁺p) = rot_ℓ X(p)` at `n` random points
/// near the imaginary-axis chains of both charts.
pub fn reflection_consistency(solved: &SolvedData, geometry: &BoundaryGeometry, n: usize, seed: u64) -> Result<Vec<ReflectionSample>> {
    let a = solved.params.a;
    let b = solved.b;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut jobs = Vec::with_capacity(n);
    for k in 0..n {
        let chart = if k % 2 == 0 { Chart::Finite } else { Chart::Inverted };
        let upper = (k / 2) % 2 == 0;
        let y = loop {
            let y = if upper { rng.gen_range(a + 0.1 * (1.0 - a)..0.9) } else { rng.gen_range(-0.9..a - 0.1 * a) };
            if (y + b).abs() > 0.03 {
                break y;
            }
        };
        let x = rng.gen_range(0.02..0.3) * (1.0 - y * y).sqrt();
        let line = match (chart, upper) {
            (Chart::Finite, true) => BoundaryTag::L1Plus,
            (Chart::Finite, false) => BoundaryTag::L1Minus,
            (Chart::Inverted, true) => BoundaryTag::L2Minus,
            (Chart::Inverted, false) => BoundaryTag::L2Plus,
        };
        jobs.push((chart, C64::new(x, y), line));
    }
    jobs.par_iter()
        .map(|&(chart, z, line)| {
            let one = C64::new(1.0, 0.0);
            let axis = C64::new(0.0, z.im);
            let mirror = C64::new(-z.re, z.im);
            let direct = continue_along(&[one, z], chart, solved)?;
            let across = continue_along(&[one, axis, mirror], chart, solved)?;
            let rotated = geometry.line(line).half_turn().apply(direct.x);
            Ok(ReflectionSample { chart, z, line, deviation: norm3(sub3(across.x, rotated)) })
        })
        .collect()
}

// ---------------------------------------------------------------------------------
// Monodromy of the Gauss map
// ---------------------------------------------------------------------------------

/// Periods of `dg/g` on the two homology cycles and on a circle around the ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    /// `∮ dg/g` over the cycle around the unit-circle arc between `e^{±iρ/2}`.
    pub gamma1: C64,
    /// `∮ dg/g` over the cycle around the arc between `e^{iρ/2}` and `−e^{−iρ/2}`.
    pub gamma2: C64,
    /// `∮ dg/g` over `|z| = (1+a)/2` on the inner sheet; encloses `ia₊` and `(−ib)₊`,
    /// so equals `2πi(β+1)`.
    pub end_circle: C64,
}

fn arc_points(radius: f64, t0: f64, t1: f64, n: usize) -> Vec<C64> {
    (0..=n).map(|k| C64::from_polar(radius, t0 + (t1 - t0) * k as f64 / n as f64)).collect()
}

/// Closed annular sector `{r₀ ≤ |z| ≤ r₁, φ₀ ≤ arg z ≤ φ₁}` traversed counter-clockwise
/// from `r₀e^{iφ₀}`.
pub(crate) fn sector_loop(r0: f64, r1: f64, phi0: f64, phi1: f64, n: usize) -> Vec<C64> {
    let mut pts = vec![C64::from_polar(r0, phi0)];
    pts.extend(arc_points(r1, phi0, phi1, n));
    pts.extend(arc_points(r0, phi1, phi0, n));
    pts
}

fn loop_period(solved: &SolvedData, lead_in: &[C64], cycle: &[C64]) -> Result<C64> {
    let rho = solved.params.rho;
    let ctx = solved.context();
    let one = C64::new(1.0, 0.0);
    let start = SurfacePoint::finite(one, inner_sheet(one, rho));
    let lead = lift_path(lead_in, start, rho)?;
    let p0 = *lead.samples.last().expect("non-empty lift");
    let lifted = lift_path(cycle, p0, rho)?;
    let end = lifted.samples.last().expect("non-empty lift");
    if (end.w - p0.w).norm() > 1e-8 * (1.0 + p0.w.norm()) {
        return Err(Error::Mesh("cycle does not close on the curve".into()));
    }
    crate::quadrature::integrate_form(crate::forms::FormKind::DLogG, &lifted, &ctx, &QuadSpec::with_tol(1e-13, 1e-12))
}

/// Periods of `dg/g` at a solution (or at any `(a, ρ, β, b, a₃)`).
pub fn gauss_monodromy(solved: &SolvedData) -> Result<Monodromy> {
    let a = solved.params.a;
    let rho = solved.params.rho;
    let one = C64::new(1.0, 0.0);
    let delta = 0.5 * (1.0 - a);
    let n = 256;
    let d1 = 0.25 * (PI - rho);
    let phi1 = 0.5 * rho + d1;
    let g1 = sector_loop(1.0 - delta, 1.0 + delta, -phi1, phi1, n);
    let gamma1 = loop_period(solved, &[one, g1[0]], &g1)?;
    let d2 = (0.25 * (PI - rho)).min(0.5 * rho);
    let g2 = sector_loop(1.0 - delta, 1.0 + delta, 0.5 * rho - d2, PI - 0.5 * rho + d2, n);
    let gamma2 = loop_period(solved, &[one, g2[0]], &g2)?;
    let r = 0.5 * (1.0 + a);
    let circle = arc_points(r, 0.0, 2.0 * PI, 2 * n);
    let end_circle = loop_period(solved, &[one, circle[0]], &circle)?;
    Ok(Monodromy { gamma1, gamma2, end_circle })
}

/// `g(i₊)`, the Gauss map at the corner where `ℓ₀⁺` meets `ℓ₁⁺`.
pub fn gauss_at_i_plus(solved: &SolvedData) -> Result<C64> {
    gauss_map(&domain_point(C64::new(0.0, 1.0), solved.params.rho), solved)
}

// ---------------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MeshFormat {
    Obj,
    Ply,
}

impl std::str::FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "ply" => Ok(MeshFormat::Ply),
            other => Err(Error::InvalidInput(format!("unknown mesh format {other}"))),
        }
    }
}

/// Write the mesh as ASCII OBJ (boundary tags as comments) or ASCII PLY.
pub fn write_mesh<W: Write>(mesh: &Mesh, format: MeshFormat, out: W) -> Result<()> {
    mesh.validate()?;
    let mut w = BufWriter::new(out);
    match format {
        MeshFormat::Obj => {
            writeln!(w, "# helicoid mesh: {} vertices, {} faces", mesh.vertices.len(), mesh.faces.len())?;
            for v in &mesh.vertices {
                writeln!(w, "v {:.8e} {:.8e} {:.8e}", v[0], v[1], v[2])?;
            }
            for f in &mesh.faces {
                writeln!(w, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1)?;
            }
            let mut by_tag: BTreeMap<BoundaryTag, Vec<String>> = BTreeMap::new();
            for e in &mesh.boundary {
                by_tag.entry(e.tag).or_default().push(format!("{}-{}", e.a + 1, e.b + 1));
            }
            for (tag, edges) in by_tag {
                writeln!(w, "# boundary {} {}", tag, edges.join(" "))?;
            }
        }
        MeshFormat::Ply => {
            writeln!(w, "ply")?;
            writeln!(w, "format ascii 1.0")?;
            writeln!(w, "element vertex {}", mesh.vertices.len())?;
            writeln!(w, "property double x")?;
            writeln!(w, "property double y")?;
            writeln!(w, "property double z")?;
            writeln!(w, "element face {}", mesh.faces.len())?;
            writeln!(w, "property list uchar int vertex_indices")?;
            writeln!(w, "end_header")?;
            for v in &mesh.vertices {
                writeln!(w, "{:.8e} {:.8e} {:.8e}", v[0], v[1], v[2])?;
            }
            for f in &mesh.faces {
                writeln!(w, "3 {} {} {}", f[0], f[1], f[2])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn export_mesh(mesh: &Mesh, format: MeshFormat, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_mesh(mesh, format, file)
}

/// Read an OBJ file written by [`export_mesh`] (vertices, triangles, boundary comments).
pub fn read_obj(path: &Path) -> Result<Mesh> {
    let file = std::fs::File::open(path)?;
    let mut mesh = Mesh::default();
    for line in BufReader::new(file).lines() {
        let line = line?;
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let c: Vec<f64> = it.map(|s| s.parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|e| Error::Io(e.to_string()))?;
                if c.len() < 3 {
                    return Err(Error::Io(format!("bad vertex line: {line}")));
                }
                mesh.vertices.push([c[0], c[1], c[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = it
                    .map(|s| s.split('/').next().unwrap_or("").parse::<usize>())
                    .collect::<std::result::Result<_, _>>()
                    .map_err(|e| Error::Io(e.to_string()))?;
                if idx.len() != 3 || idx.iter().any(|&i| i == 0) {
                    return Err(Error::Io(format!("bad face line: {line}")));
                }
                mesh.faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            Some("#") => {
                if it.next() == Some("boundary") {
                    let tag = it.next().and_then(BoundaryTag::parse).ok_or_else(|| Error::Io(format!("bad boundary line: {line}")))?;
                    for pair in it {
                        let (a, b) = pair.split_once('-').ok_or_else(|| Error::Io(format!("bad edge {pair}")))?;
                        let a: usize = a.parse().map_err(|_| Error::Io(format!("bad edge {pair}")))?;
                        let b: usize = b.parse().map_err(|_| Error::Io(format!("bad edge {pair}")))?;
                        mesh.boundary.push(BoundaryEdge { a: a - 1, b: b - 1, tag });
                    }
                }
            }
            _ => {}
        }
    }
    mesh.validate()?;
    Ok(mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_angles_are_symmetric_and_contain_marks() {
        let rho = 1.3;
        let t = circle_angles(rho, 64);
        assert_eq!(t[0], -FRAC_PI_2);
        assert_eq!(*t.last().unwrap(), FRAC_PI_2);
        assert!(t.windows(2).all(|w| w[0] < w[1]));
        assert!(t.contains(&0.0));
        let gap: Vec<f64> = t.iter().copied().filter(|x| x.abs() <= rho / 2.0 + 1e-15).collect();
        for (x, y) in gap.iter().zip(gap.iter().rev()) {
            assert!((x + y).abs() < 1e-15);
        }
        assert!(gap.iter().any(|x| (x - rho / 2.0).abs() < 1e-15));
    }

    #[test]
    fn half_turn_is_involution() {
        let m = Motion::half_turn(Vector3::new(1.0, 2.0, 3.0), Vector3::new(0.3, -0.4, 0.0));
        let x = [0.7, -1.1, 2.5];
        let y = m.apply(m.apply(x));
        assert!(norm3(sub3(x, y)) < 1e-14);
        assert!(!m.compose(&m).flipped);
    }

    #[test]
    fn spherical_octant_area() {
        let s = spherical_triangle_area(Vector3::x(), Vector3::y(), Vector3::z());
        assert!((s - PI / 2.0).abs() < 1e-14);
    }

    #[test]
    fn remark_two_values() {
        assert!((predicted_total_curvature(1.0).unwrap() + 8.0 * PI).abs() < 1e-12);
        assert!((predicted_total_curvature(0.5).unwrap() + 24.0 * PI).abs() < 1e-12);
        assert!((predicted_total_curvature(1.0 / 3.0).unwrap() + 16.0 * PI).abs() < 1e-12);
    }
}
