//! Scalar period machinery: the period function `F`, the implicit function `b`, the
//! coefficient `a₃`, the period functions `h` and `d`, and the two-dimensional solve.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{m_root, q_root, r_constant, DerivedConstants, FormContext};
use crate::quadrature::{integrate_joint, integrate_real, integrate_real_breaks, QuadSpec};
use crate::surface_domain::{Params, SurfacePoint};

type C64 = Complex64;

/// One-sided offset used for the open ends of the parameter ranges.
pub const BOUNDARY_OFFSET: f64 = 1e-6;

fn tight() -> QuadSpec {
    QuadSpec::with_tol(1e-14, 1e-13)
}

/// `∫₀^x dt / √(t⁴ + 1 + 2t² cos ρ)`.
pub fn period_integral(x: f64, rho: f64) -> Result<f64> {
    // Near ρ = π the integrand peaks at t = 1 with width ~cos(ρ/2); grade breakpoints there.
    let width = (rho / 2.0).cos();
    let mut breaks = vec![x];
    let mut off = (1.0 - x).max(0.0) + width;
    while off < 0.5 && 1.0 - off > 0.0 {
        if 1.0 - off < x {
            breaks.push(1.0 - off);
        }
        off *= 8.0;
    }
    breaks.push(0.0);
    breaks.reverse();
    integrate_real_breaks(|t| 1.0 / q_root(t, rho), &breaks, &tight())
}

/// `F(a, b, ρ, β) = β∫₀^a f − ∫₀^b f` with `f = 1/√(t⁴ + 1 + 2t² cos ρ)`.
pub fn f_func(a: f64, b: f64, rho: f64, beta: f64) -> Result<f64> {
    Ok(beta * period_integral(a, rho)? - period_integral(b, rho)?)
}

/// `∂F/∂b = −1/√(b⁴ + 1 + 2b² cos ρ)`.
pub fn df_db(b: f64, rho: f64) -> f64 {
    -1.0 / q_root(b, rho)
}

/// The same derivative written as `−∫₀¹ (1 − b⁴t⁴)/(b⁴t⁴ + 1 + 2b²t² cos ρ)^{3/2} dt`.
pub fn df_db_integral(b: f64, rho: f64) -> Result<f64> {
    let c = rho.cos();
    let v = integrate_real(
        |t| {
            let bt2 = b * b * t * t;
            (1.0 - bt2 * bt2) / (bt2 * bt2 + 1.0 + 2.0 * bt2 * c).powf(1.5)
        },
        0.0,
        1.0,
        &tight(),
    )?;
    Ok(-v)
}

/// The unique `b ∈ [0, a]` with `F(a, b, ρ, β) = 0`, for `a ∈ [0, 1]`.
///
/// Bracketed bisection (F(a,0) ≥ 0 ≥ F(a,a)) followed by Newton steps with the exact
/// derivative; `|F| ≤ 1e−12` on return.
pub fn solve_b(a: f64, rho: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(beta > 0.0 && beta <= 1.0) || !(rho > 0.0 && rho < PI) {
        return Err(Error::InvalidInput(format!("solve_b out of range: a={a}, rho={rho}, beta={beta}")));
    }
    if a == 0.0 {
        return Ok(0.0);
    }
    if beta == 1.0 {
        return Ok(a);
    }
    let target = beta * period_integral(a, rho)?;
    let (mut lo, mut hi) = (0.0, a);
    // G(b) = I(b) − target is increasing; G(0) < 0 ≤ G(a).
    for _ in 0..30 {
        let mid = 0.5 * (lo + hi);
        if period_integral(mid, rho)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut b = 0.5 * (lo + hi);
    let mut g = period_integral(b, rho)? - target;
    for _ in 0..50 {
        let step = g * q_root(b, rho);
        let mut next = b - step;
        if next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let g_next = g + integrate_real(|t| 1.0 / q_root(t, rho), b, next, &tight())?;
        if g_next < 0.0 {
            lo = next;
        } else {
            hi = next;
        }
        let moved = (next - b).abs();
        b = next;
        g = g_next;
        if g.abs() <= 1e-13 || moved <= 1e-16 * b.max(1e-300) {
            break;
        }
    }
    // Final residual from scratch so the contract does not rely on accumulated increments.
    // Near (a, ρ) = (1, π) the integral grows logarithmically and |∂F/∂b| = 1/q(b) is
    // large, so the attainable residual is bounded below by a few ulps of b times 1/q(b).
    let g = period_integral(b, rho)? - target;
    let floor = 8.0 * f64::EPSILON * b / q_root(b, rho);
    if g.abs() > (1e-12 * target.max(1.0)).max(floor) {
        return Err(Error::NonConvergent { estimate: b, error: g.abs() });
    }
    Ok(b)
}

/// `∂b/∂ρ = sin ρ √(b⁴+1+2b² cos ρ) (β∫₀^a t²/q³ − ∫₀^b t²/q³)` with `q = √(t⁴+1+2t² cos ρ)`.
pub fn db_drho(a: f64, rho: f64, beta: f64) -> Result<f64> {
    let b = solve_b(a, rho, beta)?;
    let k = |t: f64| t * t / q_root(t, rho).powi(3);
    let ia = integrate_real(k, 0.0, a, &tight())?;
    let ib = integrate_real(k, 0.0, b, &tight())?;
    Ok(rho.sin() * q_root(b, rho) * (beta * ia - ib))
}

/// `∂b/∂β = √(b⁴+1+2b² cos ρ) ∫₀^a dt/√(t⁴+1+2t² cos ρ)`.
pub fn db_dbeta(a: f64, rho: f64, beta: f64) -> Result<f64> {
    let b = solve_b(a, rho, beta)?;
    Ok(q_root(b, rho) * period_integral(a, rho)?)
}

/// Both closed formulas for `a₃` (substituted to smooth integrands) and their difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct A3Values {
    /// From the integrals over `t ∈ [0, ρ]` (substitution `sin(t/2) = sin(ρ/2) sin φ`).
    pub inner: f64,
    /// From the integrals over `t ∈ [ρ, π]` (substitution `cos(t/2) = cos(ρ/2) cos ψ`).
    pub outer: f64,
    pub cross_residual: f64,
}

/// `a₃` from both formulas; `b` must be the solved value.
pub fn compute_a3(a: f64, rho: f64, beta: f64, b: f64) -> Result<A3Values> {
    if b <= 0.0 {
        return Err(Error::DegenerateZeros);
    }
    let consts = DerivedConstants::new(a, rho, beta, b, 0.0)?;
    let (k1, k2) = (consts.beta_over_a1, consts.inv_a2);
    // Kernel as a function of cos²(t/2), using x² + x⁻² + 2cos t = (x − 1/x)² + 4cos²(t/2)
    // so the near-singular a → 1 term stays accurate around t = π.
    let kernel = |ch2: f64| -> f64 {
        let mut v = k2 / ((b - 1.0 / b).powi(2) + 4.0 * ch2);
        if k1 != 0.0 {
            v += k1 / ((a - 1.0 / a).powi(2) + 4.0 * ch2);
        }
        v
    };
    let s = (rho / 2.0).sin();
    let c = (rho / 2.0).cos();
    let spec = tight();
    let num_in = integrate_real(
        |p| {
            let ch2 = c * c + (s * p.cos()).powi(2);
            let wt = 2.0 * s * p.cos();
            kernel(ch2) * wt * wt / ch2.sqrt()
        },
        0.0,
        FRAC_PI_2,
        &spec,
    )?;
    // cos(t/2) = √(c² + s²cos²φ), written without cancellation for ρ near π.
    let den_in = integrate_real(|p| 1.0 / (c * c + (s * p.cos()).powi(2)).sqrt(), 0.0, FRAC_PI_2, &spec)?;
    // The a-term peaks at ψ = π/2 (t = π) with width ~ (1 − a)/cos(ρ/2); grade breakpoints there.
    let width = ((1.0 - a) / c.max(1e-300)).max(1e-300);
    let mut breaks = vec![FRAC_PI_2];
    let mut x = width;
    while x < 0.5 {
        breaks.push(FRAC_PI_2 - x);
        x *= 8.0;
    }
    breaks.push(0.0);
    breaks.reverse();
    let num_out = integrate_real_breaks(
        |p| {
            let ch = c * p.cos();
            let wt = 2.0 * c * p.sin();
            kernel(ch * ch) * wt * wt / (s * s + (c * p.sin()).powi(2)).sqrt()
        },
        &breaks,
        &spec,
    )?;
    let den_out = integrate_real(|p| 1.0 / (s * s + (c * p.sin()).powi(2)).sqrt(), 0.0, FRAC_PI_2, &spec)?;
    let inner = -num_in / den_in;
    let outer = num_out / den_out;
    Ok(A3Values { inner, outer, cross_residual: inner - outer })
}

/// `A₀` of the a = 1 limit, defined by `a₃(1, ρ, β) = −A₀/a₂`.
pub fn a0_aux(rho: f64, beta: f64) -> Result<f64> {
    let b = solve_b(1.0, rho, beta)?;
    if b == 1.0 {
        // β = 1: a₃ = 0 and a₂ = −∞; A₀ is the limit of −a₃a₂, i.e. the a₃ quotient with
        // the 1/a₂ factor removed from its kernel.
        return a0_limit(rho, b);
    }
    let a3 = compute_a3(1.0, rho, beta, b)?.inner;
    let c = DerivedConstants::new(1.0, rho, beta, b, a3)?;
    Ok(-a3 * c.a2)
}

fn a0_limit(rho: f64, b: f64) -> Result<f64> {
    let s = (rho / 2.0).sin();
    let c = (rho / 2.0).cos();
    let ch2 = |p: f64| c * c + (s * p.cos()).powi(2);
    let num = integrate_real(
        |p| {
            let wt = 2.0 * s * p.cos();
            wt * wt / (((b - 1.0 / b).powi(2) + 4.0 * ch2(p)) * ch2(p).sqrt())
        },
        0.0,
        FRAC_PI_2,
        &tight(),
    )?;
    let den = integrate_real(|p| 1.0 / ch2(p).sqrt(), 0.0, FRAC_PI_2, &tight())?;
    Ok(num / den)
}

/// The height function
/// `h = ∫₀¹ [t⁴ + 1 + (c₁c₂ − 2cos ρ)t²] / [(t² + a²)(t² + a⁻²)√(t⁴ + 1 − 2t² cos ρ)] dt`,
/// evaluated in the form scaled by `a²` so that `a → 0` is regular (`a = 0` is the limit).
pub fn h_func(a: f64, rho: f64, beta: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&a) || !(rho > 0.0 && rho < PI) || !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("h out of range: a={a}, rho={rho}, beta={beta}")));
    }
    // a²c₁c₂ and the a² weight of the first term.
    let a2c1c2 = if a == 0.0 {
        -1.0 / beta
    } else {
        let b = solve_b(a, rho, beta)?;
        -a * q_root(a, rho) * q_root(b, rho) / b
    };
    let a2 = a * a;
    let f = |t: f64| {
        let t2 = t * t;
        let m = m_root(t, rho);
        (a2 * m * m + a2c1c2 * t2) / ((t2 + a2) * (a2 * t2 + 1.0) * m)
    };
    let mut breaks = vec![0.0];
    for x in [a, 3.0 * a, 10.0 * a] {
        if x > 0.0 && x < 1.0 && x > *breaks.last().unwrap() {
            breaks.push(x);
        }
    }
    breaks.push(1.0);
    integrate_real_breaks(f, &breaks, &tight())
}

/// Constants and form context for `(a, ρ, β)` with `a ∈ (0, 1]`, λ = 1.
pub fn solved_context(a: f64, rho: f64, beta: f64) -> Result<(FormContext, A3Values)> {
    let b = solve_b(a, rho, beta)?;
    let a3 = compute_a3(a, rho, beta, b)?;
    let consts = DerivedConstants::new(a, rho, beta, b, a3.inner)?;
    Ok((FormContext::raw(a, rho, beta, 1.0, consts), a3))
}

/// Point on the lift of the unit-circle arc through `1₊` at pendulum angle `φ`, with
/// `dz/dφ`.
pub fn arc_point(phi: f64, rho: f64) -> (SurfacePoint, C64) {
    let s = (rho / 2.0).sin();
    let c = (rho / 2.0).cos();
    // z = e^{it/2} with sin(t/2) = s sin φ; cos(t/2) = √(c² + s²cos²φ) avoids cancellation.
    let cos_half = (c * c + (s * phi.cos()).powi(2)).sqrt();
    let z = C64::new(cos_half, s * phi.sin());
    let w = z * (2.0 * s * phi.cos());
    let dt = 2.0 * s * phi.cos() / cos_half;
    (SurfacePoint::finite(z, w), 0.5 * C64::i() * z * dt)
}

/// Integrals along the arc `φ ∈ [0, φ₁]` from `1₊`: returns `(log g(φ₁), ∫ gΦ₃)`.
pub fn arc_integrals(ctx: &FormContext, phi1: f64, spec: &QuadSpec) -> Result<(C64, C64)> {
    let rho = ctx.rho;
    let r = integrate_joint::<1, _, _>(
        |phi| {
            let (p, dz) = arc_point(phi, rho);
            Ok(ctx.dlogg_phi3(&p).0 * dz)
        },
        |phi, l| {
            let (p, dz) = arc_point(phi, rho);
            Ok([l.exp() * ctx.dlogg_phi3(&p).1 * dz])
        },
        0.0,
        phi1,
        C64::new(0.0, 0.0),
        spec,
    )?;
    Ok((r.l_end, r.values[0]))
}

/// The distance function `d = −Im ∫ gΦ₃` (λ = 1) over the lifted arc from `e^{−iρ/2}` to
/// `e^{iρ/2}` through `1₊`, for `a ∈ (0, 1]`.
pub fn d_func(a: f64, rho: f64, beta: f64) -> Result<f64> {
    if !(a > 0.0 && a <= 1.0) || !(rho > 0.0 && rho < PI) || !(beta > 0.0 && beta <= 1.0) {
        return Err(Error::InvalidInput(format!("d out of range: a={a}, rho={rho}, beta={beta}")));
    }
    let (ctx, _) = solved_context(a, rho, beta)?;
    d_with_context(&ctx)
}

pub(crate) fn d_with_context(ctx: &FormContext) -> Result<f64> {
    let spec = QuadSpec::with_tol(1e-13, 1e-12);
    let (_, up) = arc_integrals(ctx, FRAC_PI_2, &spec)?;
    let (_, down) = arc_integrals(ctx, -FRAC_PI_2, &spec)?;
    Ok(-(up - down).im / ctx.lambda)
}

/// Bracketed root of a continuous function (Brent's method); `f(lo)` and `f(hi)` must
/// have opposite signs.
pub fn brent<F: FnMut(f64) -> Result<f64>>(mut f: F, lo: f64, hi: f64, xtol: f64, ftol: f64) -> Result<f64> {
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a)?, f(b)?);
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange(format!("[{lo}, {hi}] -> ({fa}, {fb})")));
    }
    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..200 {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * xtol;
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb.abs() <= ftol {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qq = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qq * (qq - r) - (b - a) * (r - 1.0));
                q = (qq - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol * m.signum() };
        fb = f(b)?;
    }
    Err(Error::NonConvergent { estimate: b, error: fb.abs() })
}

/// A point of the curve `C₁ = {h = 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub a: f64,
    pub rho: f64,
    pub h_val: f64,
    pub d_val: f64,
}

/// `ρ` with `h(a, ρ, β) = 0` (h increases in ρ).
pub fn rho_on_c1(a: f64, beta: f64) -> Result<f64> {
    brent(|r| h_func(a, r, beta), 1e-4, PI - BOUNDARY_OFFSET, 1e-15, 1e-13)
}

/// `a₀(β)`: the root of `h(·, π − offset, β)`.
pub fn a0_of(beta: f64) -> Result<f64> {
    brent(|a| h_func(a, PI - BOUNDARY_OFFSET, beta), 0.0, 1.0, 1e-15, 1e-13)
}

/// `ρ₀(β)`: the root of `h(1, ·, β)`.
pub fn rho0_of(beta: f64) -> Result<f64> {
    rho_on_c1(1.0, beta)
}

/// Trace of `C₁` with endpoints `a₀` and `ρ₀`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct C1Trace {
    pub beta: f64,
    pub a0: f64,
    pub rho0: f64,
    pub points: Vec<CurvePoint>,
}

/// Trace `C₁` on `n_points` values of `a` in `(a₀(β), 1)`, recording `d` along it.
pub fn trace_c1(beta: f64, n_points: usize) -> Result<C1Trace> {
    if !(beta > 0.0 && beta <= 1.0) || n_points < 2 {
        return Err(Error::InvalidInput(format!("trace_c1: beta={beta}, n={n_points}")));
    }
    let a0 = a0_of(beta)?;
    let rho0 = rho0_of(beta)?;
    // Interior grid plus two points hugging the endpoints, where h = 0 is only reached
    // in the one-sided limit.
    let span = 1.0 - a0;
    let mut grid = vec![a0 + 1e-4 * span];
    grid.extend((1..n_points - 1).map(|k| a0 + span * k as f64 / (n_points - 1) as f64));
    grid.push(1.0 - BOUNDARY_OFFSET);
    let points: Vec<Result<CurvePoint>> = grid.par_iter().map(|&a| curve_point(a, beta)).collect();
    let points = points.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(C1Trace { beta, a0, rho0, points })
}

fn curve_point(a: f64, beta: f64) -> Result<CurvePoint> {
    let rho = rho_on_c1(a, beta)?;
    let h_val = h_func(a, rho, beta)?;
    let d_val = d_func(a, rho, beta)?;
    Ok(CurvePoint { a, rho, h_val, d_val })
}

/// Solution of the period problem with all derived data and residuals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolvedData {
    pub params: Params,
    pub b: f64,
    pub a3: f64,
    pub consts: DerivedConstants,
    #[serde(rename = "R")]
    pub r: f64,
    pub t_period: f64,
    pub residual_f: f64,
    pub residual_h: f64,
    pub residual_d: f64,
    pub residual_a3_cross: f64,
    pub root_count: usize,
}

impl SolvedData {
    /// Derived data at arbitrary parameters (not necessarily a period-problem solution).
    pub fn at(params: Params) -> Result<Self> {
        params.validate()?;
        let (a, rho, beta) = (params.a, params.rho, params.beta);
        if a == 0.0 {
            return Err(Error::InvalidInput("surface data needs a > 0".into()));
        }
        let b = solve_b(a, rho, beta)?;
        let a3 = compute_a3(a, rho, beta, b)?;
        let consts = DerivedConstants::new(a, rho, beta, b, a3.inner)?;
        let r = r_constant(a, b, rho);
        let ctx = FormContext::raw(a, rho, beta, 1.0, consts);
        Ok(SolvedData {
            params,
            b,
            a3: a3.inner,
            consts,
            r,
            t_period: PI * params.lambda * r,
            residual_f: f_func(a, b, rho, beta)?,
            residual_h: h_func(a, rho, beta)?,
            residual_d: d_with_context(&ctx)?,
            residual_a3_cross: a3.cross_residual,
            root_count: 0,
        })
    }

    pub fn context(&self) -> FormContext {
        FormContext::new(&self.params, self.consts)
    }
}

/// Outcome of the two-dimensional solve, including every root found on `C₁`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSolution {
    pub solved: SolvedData,
    pub roots: Vec<(f64, f64)>,
    pub trace: C1Trace,
    /// For β = 1: `(a, ρ)` from the independent route (ρ₁ first, then a on C₁).
    pub dual_route: Option<(f64, f64)>,
}

/// Bisect `d` along `C₁` between `a_lo` and `a_hi` (sign change bracket).
fn refine_root(beta: f64, a_lo: f64, a_hi: f64) -> Result<(f64, f64)> {
    let a = brent(
        |a| {
            let rho = rho_on_c1(a, beta)?;
            d_func(a, rho, beta)
        },
        a_lo,
        a_hi,
        1e-15,
        1e-11,
    )?;
    Ok((a, rho_on_c1(a, beta)?))
}

/// Solve `h = d = 0`: trace `C₁` (64 points), refine 4× around every sign change of `d`,
/// and bisect each. The smallest-`a` root is returned as canonical.
pub fn solve_period_problem(beta: f64) -> Result<PeriodSolution> {
    solve_period_problem_with(beta, 64)
}

pub fn solve_period_problem_with(beta: f64, n_points: usize) -> Result<PeriodSolution> {
    let trace = trace_c1(beta, n_points)?;
    let mut brackets = Vec::new();
    for w in trace.points.windows(2) {
        if w[0].d_val.signum() != w[1].d_val.signum() {
            // Refine the cell 4× in case it hides more than one change.
            let sub: Vec<f64> = (0..=4).map(|k| w[0].a + (w[1].a - w[0].a) * k as f64 / 4.0).collect();
            let vals: Vec<Result<f64>> = sub
                .par_iter()
                .map(|&a| {
                    if a == w[0].a {
                        Ok(w[0].d_val)
                    } else if a == w[1].a {
                        Ok(w[1].d_val)
                    } else {
                        let rho = rho_on_c1(a, beta)?;
                        d_func(a, rho, beta)
                    }
                })
                .collect();
            let vals = vals.into_iter().collect::<Result<Vec<_>>>()?;
            for k in 0..4 {
                if vals[k].signum() != vals[k + 1].signum() {
                    brackets.push((sub[k], sub[k + 1]));
                }
            }
        }
    }
    if brackets.is_empty() {
        return Err(Error::Unsolved);
    }
    let roots: Vec<Result<(f64, f64)>> = brackets.par_iter().map(|&(lo, hi)| refine_root(beta, lo, hi)).collect();
    let roots = roots.into_iter().collect::<Result<Vec<_>>>()?;
    let (a, rho) = roots[0];
    let mut solved = SolvedData::at(Params::new(a, rho, beta)?)?;
    solved.root_count = roots.len();
    let dual_route = if beta == 1.0 { Some(beta_one_dual_route()?) } else { None };
    Ok(PeriodSolution { solved, roots, trace, dual_route })
}

/// β = 1 route: `d(·, ρ, 1)` does not depend on `a`, so find `ρ₁` first, then `a` on `C₁`.
pub fn beta_one_dual_route() -> Result<(f64, f64)> {
    let rho1 = brent(|r| d_func(0.5, r, 1.0), 1e-3, PI - 1e-3, 1e-15, 1e-12)?;
    let a = brent(|a| h_func(a, rho1, 1.0), 0.0, 1.0 - BOUNDARY_OFFSET, 1e-15, 1e-13)?;
    Ok((a, rho1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn b_equals_a_when_beta_one() {
        assert_eq!(solve_b(0.4, 1.0, 1.0).unwrap(), 0.4);
        assert_eq!(solve_b(0.0, 1.0, 0.3).unwrap(), 0.0);
    }

    #[test]
    fn b_solves_f() {
        let b = solve_b(0.7, 1.2, 0.4).unwrap();
        assert!(b > 0.0 && b < 0.7);
        assert!(f_func(0.7, b, 1.2, 0.4).unwrap().abs() < 1e-12);
    }

    #[test]
    fn derivative_forms_agree() {
        for &(b, rho) in &[(0.3, 0.5), (0.9, 2.5), (0.6, 1.5)] {
            assert!((df_db(b, rho) - df_db_integral(b, rho).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn a3_formulas_agree_at_solved_b() {
        let (a, rho, beta) = (0.5, 1.0, 0.5);
        let b = solve_b(a, rho, beta).unwrap();
        let v = compute_a3(a, rho, beta, b).unwrap();
        assert!(v.cross_residual.abs() < 1e-10, "{v:?}");
        let w = compute_a3(a, rho, beta, 0.9 * b).unwrap();
        assert!(w.cross_residual.abs() > 1e-3);
    }

    #[test]
    fn h_at_a_one_near_pi() {
        let v = h_func(1.0, PI - BOUNDARY_OFFSET, 0.5).unwrap();
        assert!((v - PI / 4.0).abs() < 1e-4);
    }

    #[test]
    fn brent_finds_cos_root() {
        let r = brent(|x| Ok(x.cos()), 1.0, 2.0, 1e-15, 0.0).unwrap();
        assert!((r - FRAC_PI_2).abs() < 1e-14);
    }
}
