//! The genus-one spinor curve `w² = z⁴ + 1 − 2z² cos ρ`, its marked points,
//! the three anti/holomorphic symmetries, and branch-tracked path lifting.
//!
//! Points near `z = ∞` are stored in the inverted chart `ζ = 1/z`, `ω = w/z²`.
//! Because the quartic is palindromic, `(ζ, ω)` satisfies the same equation, and the
//! symmetry `S` is literally the chart swap.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

type C64 = Complex64;

/// Curve invariant tolerance.
pub const EPS_CURVE: f64 = 1e-12;
/// Exclusion radius around branch points for generic paths.
pub const DELTA_BRANCH: f64 = 1e-8;

/// Surface parameters `(a, ρ, β, λ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    pub a: f64,
    pub rho: f64,
    pub beta: f64,
    pub lambda: f64,
}

impl Params {
    pub fn new(a: f64, rho: f64, beta: f64) -> Result<Self> {
        Self::with_lambda(a, rho, beta, 1.0)
    }

    pub fn with_lambda(a: f64, rho: f64, beta: f64, lambda: f64) -> Result<Self> {
        let p = Params { a, rho, beta, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.a) {
            return Err(Error::InvalidInput(format!("a = {} outside [0,1)", self.a)));
        }
        if !(self.rho > 0.0 && self.rho < PI) {
            return Err(Error::InvalidInput(format!("rho = {} outside (0,pi)", self.rho)));
        }
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::InvalidInput(format!("beta = {} outside (0,1]", self.beta)));
        }
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidInput(format!("lambda = {} must be positive", self.lambda)));
        }
        Ok(())
    }

    /// Radius beyond which points are stored in the inverted chart.
    pub fn chart_radius(&self) -> f64 {
        if self.a > 0.0 {
            2.0 / self.a
        } else {
            f64::INFINITY
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Chart {
    /// Coordinates `(z, w)`.
    Finite,
    /// Coordinates `(ζ, ω) = (1/z, w/z²)`.
    Inverted,
}

/// A point on the curve with an explicit sheet value. In the inverted chart the
/// fields hold `(ζ, ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub z: C64,
    pub w: C64,
    pub chart: Chart,
}

impl SurfacePoint {
    pub fn finite(z: C64, w: C64) -> Self {
        SurfacePoint { z, w, chart: Chart::Finite }
    }

    pub fn inverted(zeta: C64, omega: C64) -> Self {
        SurfacePoint { z: zeta, w: omega, chart: Chart::Inverted }
    }

    /// z-coordinate in the finite chart (infinite at ζ = 0).
    pub fn z_value(&self) -> C64 {
        match self.chart {
            Chart::Finite => self.z,
            Chart::Inverted => self.z.inv(),
        }
    }

    /// w-coordinate in the finite chart.
    pub fn w_value(&self) -> C64 {
        match self.chart {
            Chart::Finite => self.w,
            Chart::Inverted => self.w / (self.z * self.z),
        }
    }

    /// Curve residual `|w² − quartic|` relative to `1 + |z|⁴` in the stored chart.
    pub fn curve_residual(&self, rho: f64) -> f64 {
        (self.w * self.w - quartic(self.z, rho)).norm() / (1.0 + self.z.norm_sqr() * self.z.norm_sqr())
    }

    pub fn on_curve(&self, rho: f64) -> bool {
        self.curve_residual(rho) <= EPS_CURVE
    }

    /// Re-express in the chart appropriate for `radius`: finite when |z| ≤ radius.
    pub fn in_chart_for(self, radius: f64) -> Self {
        match self.chart {
            Chart::Finite if self.z.norm() > radius => SurfacePoint::inverted(self.z.inv(), self.w / (self.z * self.z)),
            Chart::Inverted if self.z != C64::new(0.0, 0.0) && self.z.norm() > 1.0 / radius => {
                SurfacePoint::finite(self.z.inv(), self.w / (self.z * self.z))
            }
            _ => self,
        }
    }

    /// Canonical representative: finite chart inside the closed unit disk, inverted outside.
    pub fn canonical(self) -> Self {
        match self.chart {
            Chart::Finite if self.z.norm() > 1.0 => self.in_chart_for(1.0),
            Chart::Inverted if self.z.norm() > 1.0 => self.in_chart_for(1.0),
            _ => self,
        }
    }

    /// Distance between two points after bringing both to canonical charts.
    pub fn distance(&self, other: &SurfacePoint) -> f64 {
        let (p, q) = (self.canonical(), other.canonical());
        if p.chart != q.chart {
            // Both sit essentially on the unit circle; compare in the finite chart.
            let (p, q) = (p.in_chart_for(f64::INFINITY), q.in_chart_for(f64::INFINITY));
            return (p.z - q.z).norm().max((p.w - q.w).norm());
        }
        (p.z - q.z).norm().max((p.w - q.w).norm())
    }
}

/// The quartic `z⁴ + 1 − 2z² cos ρ` (same expression in the inverted chart).
pub fn quartic(z: C64, rho: f64) -> C64 {
    // Factored as (z² − e^{iρ})(z² − e^{−iρ}) for accuracy near the branch points.
    let z2 = z * z;
    let e = C64::from_polar(1.0, rho);
    (z2 - e) * (z2 - e.conj())
}

/// Both square roots of the quartic; the first has nonnegative real part (tie: nonnegative
/// imaginary part).
pub fn w_values(z: C64, rho: f64) -> (C64, C64) {
    let mut r = quartic(z, rho).sqrt();
    if r.re < 0.0 || (r.re == 0.0 && r.im < 0.0) {
        r = -r;
    }
    (r, -r)
}

/// The four branch points `±e^{±iρ/2}`.
pub fn branch_points(rho: f64) -> [C64; 4] {
    let e = C64::from_polar(1.0, rho / 2.0);
    [e, e.conj(), -e, -e.conj()]
}

/// Sheet of the fundamental domain over the closed right half of the unit disk.
///
/// In the interior this is `z·√(z² + z⁻² − 2cos ρ)` with the principal root. On the
/// boundary (imaginary axis, slit arcs) the value is the limit from inside the domain.
pub fn inner_sheet(z: C64, rho: f64) -> C64 {
    if z == C64::new(0.0, 0.0) {
        return C64::new(1.0, 0.0);
    }
    let v2 = z * z + (z * z).inv() - 2.0 * rho.cos();
    let v = if v2.re < 0.0 && v2.im.abs() <= 1e-12 * v2.norm() {
        let s = if z.im >= 0.0 { 1.0 } else { -1.0 };
        C64::new(0.0, -s * (-v2.re).sqrt())
    } else {
        v2.sqrt()
    };
    z * v
}

/// Sheet of the fundamental domain at any z with Re z ≥ 0, using the symmetry `S`
/// for |z| > 1. On the unit circle the inner side is returned.
pub fn domain_sheet(z: C64, rho: f64) -> C64 {
    if z.norm() <= 1.0 {
        inner_sheet(z, rho)
    } else {
        z * z * inner_sheet(z.inv(), rho)
    }
}

/// Base point `1₊ = (1, 2 sin(ρ/2))`.
pub fn one_plus(rho: f64) -> SurfacePoint {
    SurfacePoint::finite(C64::new(1.0, 0.0), C64::new(2.0 * (rho / 2.0).sin(), 0.0))
}

/// `i₊ = (i, 2cos(ρ/2))`, the inner-side corner of the upper slit.
pub fn i_plus(rho: f64) -> SurfacePoint {
    SurfacePoint::finite(C64::i(), C64::new(2.0 * (rho / 2.0).cos(), 0.0))
}

/// `i₋ = (i, −2cos(ρ/2))`, the outer-side corner.
pub fn i_minus(rho: f64) -> SurfacePoint {
    SurfacePoint::finite(C64::i(), C64::new(-2.0 * (rho / 2.0).cos(), 0.0))
}

/// Point over purely imaginary `z = iy` on the "+" sheet (positive real w).
pub fn imaginary_point(y: f64, rho: f64, plus: bool) -> SurfacePoint {
    let u = (1.0 - y) * (1.0 + y);
    let c = 2.0 * y * (rho / 2.0).cos();
    let w = (u * u + c * c).sqrt();
    SurfacePoint::finite(C64::new(0.0, y), C64::new(if plus { w } else { -w }, 0.0))
}

/// Ends, zeros of the Gauss map, and branch points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkedPoints {
    /// `ia₊, (−ia)₋, (i/a)₊, (−i/a)₋`
    pub ends: [SurfacePoint; 4],
    /// `(−ib)₊, (ib)₋, (−i/b)₊, (i/b)₋`
    pub zeros: [SurfacePoint; 4],
    pub branch: [C64; 4],
}

pub fn marked_points(a: f64, b: f64, rho: f64) -> Result<MarkedPoints> {
    if !(a > 0.0 && a < 1.0) {
        return Err(Error::InvalidInput(format!("marked points need 0 < a < 1, got {a}")));
    }
    if b == 0.0 {
        return Err(Error::DegenerateZeros);
    }
    if !(b > 0.0 && b <= a) {
        return Err(Error::InvalidInput(format!("marked points need 0 < b <= a, got b = {b}")));
    }
    let ends = [
        imaginary_point(a, rho, true),
        imaginary_point(-a, rho, false),
        imaginary_point(1.0 / a, rho, true),
        imaginary_point(-1.0 / a, rho, false),
    ];
    let zeros = [
        imaginary_point(-b, rho, true),
        imaginary_point(b, rho, false),
        imaginary_point(-1.0 / b, rho, true),
        imaginary_point(1.0 / b, rho, false),
    ];
    Ok(MarkedPoints { ends, zeros, branch: branch_points(rho) })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Symmetry {
    /// `(z, w) ↦ (1/z, w/z²)`
    S,
    /// `(z, w) ↦ (1/z̄, −w̄/z̄²)`
    S0p,
    /// `(z, w) ↦ (−z̄, w̄)`
    S2p,
}

impl Symmetry {
    pub const ALL: [Symmetry; 3] = [Symmetry::S, Symmetry::S0p, Symmetry::S2p];

    pub fn is_antiholomorphic(self) -> bool {
        !matches!(self, Symmetry::S)
    }
}

/// Apply a symmetry. The result is returned in the finite chart when |z| ≤ 2 and in the
/// inverted chart otherwise; z = 0 and z = ∞ are handled through the chart swap.
pub fn apply_symmetry(which: Symmetry, p: SurfacePoint) -> SurfacePoint {
    let out = match (which, p.chart) {
        (Symmetry::S, Chart::Finite) => SurfacePoint::inverted(p.z, p.w),
        (Symmetry::S, Chart::Inverted) => SurfacePoint::finite(p.z, p.w),
        (Symmetry::S0p, Chart::Finite) => SurfacePoint::inverted(p.z.conj(), -p.w.conj()),
        (Symmetry::S0p, Chart::Inverted) => SurfacePoint::finite(p.z.conj(), -p.w.conj()),
        (Symmetry::S2p, Chart::Finite) => SurfacePoint::finite(-p.z.conj(), p.w.conj()),
        (Symmetry::S2p, Chart::Inverted) => SurfacePoint::inverted(-p.z.conj(), p.w.conj()),
    };
    let out = match out.chart {
        Chart::Inverted if out.z == C64::new(0.0, 0.0) => out,
        _ => out.in_chart_for(2.0),
    };
    // A finite point at z = 0 coming from ∞ is already finite; make sure an inverted point
    // with small |ζ| stays inverted.
    out
}

/// How consecutive samples of a lifted path are joined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PathGeometry {
    /// Straight segments between samples.
    Polyline,
    /// Arc of the circle `center + radius·e^{it}`; the sample parameters are angles.
    Circle { center: C64, radius: f64 },
}

/// A sampled path on the curve with a continuously chosen sheet.
#[derive(Debug, Clone, PartialEq)]
pub struct LiftedPath {
    pub samples: Vec<SurfacePoint>,
    pub rho: f64,
    pub geometry: PathGeometry,
    /// Curve parameter of each sample (arc length index for polylines, angle for circles).
    pub params: Vec<f64>,
}

impl LiftedPath {
    pub fn start(&self) -> SurfacePoint {
        self.samples[0]
    }

    pub fn end(&self) -> SurfacePoint {
        *self.samples.last().expect("lifted path is never empty")
    }

    /// Check the branch-continuity invariant.
    pub fn is_continuous(&self) -> bool {
        self.samples.windows(2).all(|p| {
            let (a, b) = (p[0].w, p[1].w);
            a == C64::new(0.0, 0.0) || b == C64::new(0.0, 0.0) || (b - a).norm() < (b + a).norm()
        })
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> LiftedPath {
        let mut samples = self.samples.clone();
        samples.reverse();
        let mut params = self.params.clone();
        params.reverse();
        LiftedPath { samples, rho: self.rho, geometry: self.geometry, params }
    }
}

fn nearest_root(z: C64, rho: f64, guess: C64) -> C64 {
    let (r, _) = w_values(z, rho);
    if (r - guess).norm() <= (-r - guess).norm() {
        r
    } else {
        -r
    }
}

fn distance_to_segment(p: C64, a: C64, b: C64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

/// Core lifting loop over a parametrised curve `pos(t)` sampled at `ts`.
fn lift_curve<P: Fn(f64) -> C64>(
    pos: P,
    ts: &[f64],
    start: SurfacePoint,
    rho: f64,
    straight: bool,
) -> Result<(Vec<SurfacePoint>, Vec<f64>)> {
    if !start.on_curve(rho) {
        return Err(Error::InvalidInput("lift start is not on the curve".into()));
    }
    let chart = start.chart;
    let branches = branch_points(rho);
    let t_final = *ts.last().unwrap();
    let z_final = pos(t_final);
    let terminal_branch = branches.iter().position(|b| (z_final - b).norm() < DELTA_BRANCH);
    let separation = |k: usize| -> f64 {
        branches
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != k)
            .map(|(_, b)| (branches[k] - b).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let near_branch = |z: C64| branches.iter().position(|b| (z - b).norm() < DELTA_BRANCH);
    let mut samples = vec![start];
    let mut params = vec![ts[0]];
    if let Some(k) = near_branch(start.z) {
        if ts.len() > 1 {
            return Err(Error::BranchPointCollision { z: branches[k] });
        }
    }
    for win in ts.windows(2) {
        let target = win[1];
        let mut t = win[0];
        while t < target || t > target {
            let cur = *samples.last().unwrap();
            let mut t1 = target;
            loop {
                let z1 = pos(t1);
                if (z1 - cur.z).norm() < 1e-14 && t1 != target {
                    return Err(Error::LiftNotConverged { z: cur.z });
                }
                let at_terminal = t1 == t_final && target == t_final;
                if let Some(k) = near_branch(z1) {
                    if at_terminal && Some(k) == terminal_branch {
                        if (cur.z - z1).norm() <= 0.1 * separation(k) {
                            samples.push(SurfacePoint { z: z1, w: C64::new(0.0, 0.0), chart });
                            params.push(t1);
                            t = t1;
                            break;
                        }
                        t1 = 0.5 * (t + t1);
                        continue;
                    }
                    return Err(Error::BranchPointCollision { z: branches[k] });
                }
                if straight {
                    for (k, b) in branches.iter().enumerate() {
                        if Some(k) == terminal_branch && t1 == t_final {
                            continue;
                        }
                        if distance_to_segment(*b, cur.z, z1) < DELTA_BRANCH {
                            return Err(Error::BranchPointCollision { z: *b });
                        }
                    }
                }
                let w1 = nearest_root(z1, rho, cur.w);
                let dw = (w1 - cur.w).norm();
                if dw <= 0.1 * cur.w.norm().min(w1.norm()) {
                    samples.push(SurfacePoint { z: z1, w: w1, chart });
                    params.push(t1);
                    t = t1;
                    break;
                }
                t1 = 0.5 * (t + t1);
            }
        }
    }
    Ok((samples, params))
}

/// Lift a polyline through `z_samples` starting at `start` (whose z must equal the first
/// sample). Steps are bisected until consecutive sheet values differ by at most 10% of
/// their modulus. A path may end exactly at a branch point (w = 0 there).
pub fn lift_path(z_samples: &[C64], start: SurfacePoint, rho: f64) -> Result<LiftedPath> {
    if z_samples.is_empty() || (z_samples[0] - start.z).norm() > 1e-14 * (1.0 + start.z.norm()) {
        return Err(Error::InvalidInput("first z-sample must equal start.z".into()));
    }
    let ts: Vec<f64> = (0..z_samples.len()).map(|k| k as f64).collect();
    let pos = |t: f64| -> C64 {
        let k = (t.floor() as usize).min(z_samples.len().saturating_sub(2));
        let u = t - k as f64;
        if z_samples.len() == 1 {
            return z_samples[0];
        }
        if u == 0.0 {
            z_samples[k]
        } else if u == 1.0 {
            z_samples[k + 1]
        } else {
            z_samples[k] + (z_samples[k + 1] - z_samples[k]) * u
        }
    };
    let (samples, params) = lift_curve(pos, &ts, start, rho, true)?;
    Ok(LiftedPath { samples, rho, geometry: PathGeometry::Polyline, params })
}

/// Lift the circular arc `center + radius·e^{it}`, `t` from `t0` to `t1`, starting on the
/// sheet of `start` (which must sit at angle `t0`).
pub fn lift_arc(center: C64, radius: f64, t0: f64, t1: f64, start: SurfacePoint, rho: f64) -> Result<LiftedPath> {
    let n = ((t1 - t0).abs() / 0.05).ceil().max(1.0) as usize;
    let ts: Vec<f64> = (0..=n).map(|k| t0 + (t1 - t0) * k as f64 / n as f64).collect();
    let pos = |t: f64| center + C64::from_polar(radius, t);
    if (pos(t0) - start.z).norm() > 1e-12 * (1.0 + start.z.norm()) {
        return Err(Error::InvalidInput("arc start does not match start point".into()));
    }
    let (samples, params) = lift_curve(pos, &ts, start, rho, false)?;
    Ok(LiftedPath { samples, rho, geometry: PathGeometry::Circle { center, radius }, params })
}

/// Sheet value on the lift δ of the unit-circle arc `z = e^{it/2}` through `1₊`.
pub fn arc_sheet(t: f64, rho: f64) -> C64 {
    C64::from_polar(1.0, t / 2.0) * (2.0 * (t.cos() - rho.cos())).max(0.0).sqrt()
}
