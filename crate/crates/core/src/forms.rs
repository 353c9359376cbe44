//! Meromorphic 1-forms on the curve, exposed as coefficients against `dz`
//! (or against `dζ` for points stored in the inverted chart).
//!
//! * `Φ₃ = λ (w + c₂iz) / ((w + c₁iz) w) dz`
//! * `η₁ = (iβ/a₁)/(w + c₁iz) dz + (i/a₂)/(w + c₂iz) dz`
//! * `η₂ = i/w dz`
//! * `dg/g = η₁ + a₃ η₂`
//! * `Φ₁ = ½(1/g − g)Φ₃`, `Φ₂ = (i/2)(1/g + g)Φ₃`
//!
//! Under the chart swap `ζ = 1/z, ω = w/z²` every one of these coefficients becomes the
//! negative of the same expression evaluated at `(ζ, ω)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::{integrate_form, QuadSpec};
use crate::surface_domain::{
    apply_symmetry, branch_points, imaginary_point, lift_arc, lift_path, Chart, Params, SurfacePoint, Symmetry,
};

type C64 = Complex64;

/// Minimum z-distance from a pole at which forms are evaluated.
pub const DELTA_POLE: f64 = 1e-8;

/// `√(t⁴ + 1 + 2t² cos ρ)`, the modulus of `w` at `z = it`.
pub fn q_root(t: f64, rho: f64) -> f64 {
    // (1 − t²)² + 4t²cos²(ρ/2): no cancellation when ρ → π and t → 1.
    let u = (1.0 - t) * (1.0 + t);
    let c = 2.0 * t * (rho / 2.0).cos();
    (u * u + c * c).sqrt()
}

/// `√(t⁴ + 1 − 2t² cos ρ)`, the modulus of `w` at real `z = t`.
pub fn m_root(t: f64, rho: f64) -> f64 {
    let u = (1.0 - t) * (1.0 + t);
    let s = 2.0 * t * (rho / 2.0).sin();
    (u * u + s * s).sqrt()
}

/// Constants of the Weierstrass data derived from `(a, ρ, β, b, a₃)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedConstants {
    pub c1: f64,
    pub c2: f64,
    /// Residue of η₁ at `ia₊` (infinite at a = 1).
    pub a1: f64,
    /// Residue of η₁-part at `(−ib)₊`.
    pub a2: f64,
    pub b: f64,
    pub a3: f64,
    /// `β/a₁`, finite (zero) at a = 1.
    pub beta_over_a1: f64,
    /// `1/a₂`.
    pub inv_a2: f64,
}

impl DerivedConstants {
    /// Constants for `0 < b ≤ a ≤ 1`.
    pub fn new(a: f64, rho: f64, beta: f64, b: f64, a3: f64) -> Result<Self> {
        if !(a > 0.0 && a <= 1.0) || !(b > 0.0 && b <= a) {
            return Err(Error::InvalidInput(format!("constants need 0 < b <= a <= 1 (a = {a}, b = {b})")));
        }
        let qa = q_root(a, rho);
        let qb = q_root(b, rho);
        let c1 = qa / a;
        let c2 = -qb / b;
        let a1 = a * qa / (1.0 - a.powi(4));
        let a2 = -b * qb / (1.0 - b.powi(4));
        let beta_over_a1 = beta * (1.0 - a.powi(4)) / (a * qa);
        let inv_a2 = -(1.0 - b.powi(4)) / (b * qb);
        Ok(DerivedConstants { c1, c2, a1, a2, b, a3, beta_over_a1, inv_a2 })
    }
}

/// `R = a²/(1−a⁴)(√(a² + a⁻² + 2cos ρ) + √(b² + b⁻² + 2cos ρ))`.
pub fn r_constant(a: f64, b: f64, rho: f64) -> f64 {
    a * a / (1.0 - a.powi(4)) * (q_root(a, rho) / a + q_root(b, rho) / b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FormKind {
    Phi3,
    Eta1,
    Eta2,
    DLogG,
    GPhi3,
    Phi1,
    Phi2,
}

impl FormKind {
    pub fn name(self) -> &'static str {
        match self {
            FormKind::Phi3 => "Phi3",
            FormKind::Eta1 => "Eta1",
            FormKind::Eta2 => "Eta2",
            FormKind::DLogG => "DLogG",
            FormKind::GPhi3 => "GPhi3",
            FormKind::Phi1 => "Phi1",
            FormKind::Phi2 => "Phi2",
        }
    }

    fn needs_gauss(self) -> bool {
        matches!(self, FormKind::GPhi3 | FormKind::Phi1 | FormKind::Phi2)
    }

    fn poles_at_ends(self) -> bool {
        !matches!(self, FormKind::Eta2)
    }

    fn poles_at_zeros(self) -> bool {
        matches!(self, FormKind::Eta1 | FormKind::DLogG | FormKind::Phi1 | FormKind::Phi2)
    }
}

/// Everything needed to evaluate the forms at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FormContext {
    pub a: f64,
    pub rho: f64,
    pub beta: f64,
    pub lambda: f64,
    pub consts: DerivedConstants,
}

impl FormContext {
    pub fn new(params: &Params, consts: DerivedConstants) -> Self {
        FormContext { a: params.a, rho: params.rho, beta: params.beta, lambda: params.lambda, consts }
    }

    /// Context without the `a < 1` restriction of [`Params`] (used for the a = 1 limit).
    pub fn raw(a: f64, rho: f64, beta: f64, lambda: f64, consts: DerivedConstants) -> Self {
        FormContext { a, rho, beta, lambda, consts }
    }

    /// Pole candidates `(z, w)` in stored-chart coordinates. The chart swap maps E to E
    /// and V to V with identical coordinates, so one list serves both charts.
    fn pole_list(&self, kind: FormKind) -> Vec<(C64, C64)> {
        let mut out = Vec::with_capacity(8);
        let pt = |y: f64, plus: bool| {
            let p = imaginary_point(y, self.rho, plus);
            (p.z, p.w)
        };
        if kind.poles_at_ends() && self.a < 1.0 {
            let a = self.a;
            out.extend([pt(a, true), pt(-a, false), pt(1.0 / a, true), pt(-1.0 / a, false)]);
        }
        if kind.poles_at_zeros() {
            let b = self.consts.b;
            out.extend([pt(-b, true), pt(b, false), pt(-1.0 / b, true), pt(1.0 / b, false)]);
        }
        out
    }

    fn check_poles(&self, kind: FormKind, p: &SurfacePoint) -> Result<()> {
        for (zm, wm) in self.pole_list(kind) {
            if (p.z - zm).norm() < DELTA_POLE && (p.w - wm).norm() < (p.w + wm).norm() {
                return Err(Error::NearPole { form: kind.name(), z: p.z, marked: zm });
            }
        }
        if p.w == C64::new(0.0, 0.0) && kind != FormKind::Eta1 {
            return Err(Error::NearPole { form: kind.name(), z: p.z, marked: p.z });
        }
        Ok(())
    }

    fn phi3_raw(&self, z: C64, w: C64) -> C64 {
        let c = &self.consts;
        self.lambda * (w + C64::i() * c.c2 * z) / ((w + C64::i() * c.c1 * z) * w)
    }

    fn eta1_raw(&self, z: C64, w: C64) -> C64 {
        let c = &self.consts;
        let mut v = C64::i() * c.inv_a2 / (w + C64::i() * c.c2 * z);
        if c.beta_over_a1 != 0.0 {
            v += C64::i() * c.beta_over_a1 / (w + C64::i() * c.c1 * z);
        }
        v
    }

    /// Coefficient of the form at `p` in the chart `p` is stored in. `gauss` supplies
    /// `g(p)` for the forms built from the Gauss map.
    pub fn eval(&self, kind: FormKind, p: &SurfacePoint, gauss: Option<C64>) -> Result<C64> {
        self.check_poles(kind, p)?;
        let (z, w) = (p.z, p.w);
        let g = || gauss.ok_or(Error::MissingGaussMap(kind.name()));
        let v = match kind {
            FormKind::Phi3 => self.phi3_raw(z, w),
            FormKind::Eta1 => self.eta1_raw(z, w),
            FormKind::Eta2 => C64::i() / w,
            FormKind::DLogG => self.eta1_raw(z, w) + self.consts.a3 * C64::i() / w,
            FormKind::GPhi3 => g()? * self.phi3_raw(z, w),
            FormKind::Phi1 => {
                let g = g()?;
                0.5 * (g.inv() - g) * self.phi3_raw(z, w)
            }
            FormKind::Phi2 => {
                let g = g()?;
                0.5 * C64::i() * (g.inv() + g) * self.phi3_raw(z, w)
            }
        };
        Ok(match p.chart {
            Chart::Finite => v,
            Chart::Inverted => -v,
        })
    }

    /// The pair `(dg/g, Φ₃)` at a point without pole checks (hot loop of the integrators).
    pub fn dlogg_phi3(&self, p: &SurfacePoint) -> (C64, C64) {
        let (z, w) = (p.z, p.w);
        let dl = self.eta1_raw(z, w) + self.consts.a3 * C64::i() / w;
        let f = self.phi3_raw(z, w);
        match p.chart {
            Chart::Finite => (dl, f),
            Chart::Inverted => (-dl, -f),
        }
    }

    /// All marked z-values relevant for residue radii: ends, zeros and branch points.
    fn marked_zs(&self) -> Vec<C64> {
        let mut v: Vec<C64> = Vec::new();
        if self.a < 1.0 {
            let a = self.a;
            v.extend([C64::new(0.0, a), C64::new(0.0, -a), C64::new(0.0, 1.0 / a), C64::new(0.0, -1.0 / a)]);
        }
        let b = self.consts.b;
        v.extend([C64::new(0.0, -b), C64::new(0.0, b), C64::new(0.0, -1.0 / b), C64::new(0.0, 1.0 / b)]);
        v.extend(branch_points(self.rho));
        v
    }

    /// Default residue radius at `center`: min(1e−3, half the distance to the nearest
    /// other marked point).
    pub fn default_residue_radius(&self, center: &SurfacePoint) -> f64 {
        let nearest = self
            .marked_zs()
            .into_iter()
            .map(|z| (z - center.z).norm())
            .filter(|d| *d > 1e-12)
            .fold(f64::INFINITY, f64::min);
        (1e-3f64).min(0.5 * nearest)
    }
}

/// Numerical residue `(1/2πi)∮ form` on the lifted circle of the given z-radius around
/// `center` (same chart as `center`).
pub fn residue_at(kind: FormKind, center: &SurfacePoint, ctx: &FormContext, radius: Option<f64>) -> Result<C64> {
    let radius = radius.unwrap_or_else(|| ctx.default_residue_radius(center));
    if radius < 10.0 * DELTA_POLE {
        return Err(Error::InvalidInput(format!("residue radius {radius} too small")));
    }
    let z0 = center.z + radius;
    let radial = lift_path(&[center.z, z0], *center, ctx.rho)?;
    let start = radial.end();
    let circle = lift_arc(center.z, radius, 0.0, 2.0 * PI, start, ctx.rho)?;
    if (circle.end().w - start.w).norm() > 1e-6 * start.w.norm() {
        return Err(Error::InvalidInput("residue circle encloses a branch point".into()));
    }
    let spec = QuadSpec::with_tol(1e-14, 1e-12);
    let total = integrate_form(kind, &circle, ctx, &spec)?;
    Ok(total / (2.0 * PI * C64::i()))
}

/// Sign and conjugation of the pullback identity `σ* form = ±(conj) form`.
fn pullback_rule(sym: Symmetry, kind: FormKind) -> Result<f64> {
    let s = match (sym, kind) {
        (Symmetry::S, FormKind::Phi3) => -1.0,
        (Symmetry::S0p, FormKind::Phi3) => 1.0,
        (Symmetry::S2p, FormKind::Phi3) => -1.0,
        (Symmetry::S, FormKind::Eta1 | FormKind::Eta2 | FormKind::DLogG) => -1.0,
        (Symmetry::S0p, FormKind::Eta1 | FormKind::Eta2 | FormKind::DLogG) => -1.0,
        (Symmetry::S2p, FormKind::Eta1 | FormKind::Eta2 | FormKind::DLogG) => 1.0,
        _ => return Err(Error::Unsupported(format!("no pullback identity for {} under {sym:?}", kind.name()))),
    };
    Ok(s)
}

/// Both sides of the pullback identity at `p` (finite z, nonzero).
///
/// `lhs` is the coefficient of `σ*form` (against `dz` for `S`, against `dz̄` for the
/// antiholomorphic symmetries); `rhs` is `±form(p)` or `±conj(form(p))`.
pub fn pullback_check(sym: Symmetry, kind: FormKind, p: &SurfacePoint, ctx: &FormContext) -> Result<(C64, C64)> {
    if kind.needs_gauss() {
        return Err(Error::Unsupported(format!("pullback of {} needs the Gauss map", kind.name())));
    }
    let sign = pullback_rule(sym, kind)?;
    let (z, w) = (p.z_value(), p.w_value());
    if z == C64::new(0.0, 0.0) || !z.is_finite() {
        return Err(Error::InvalidInput("pullback check needs finite nonzero z".into()));
    }
    let fin = SurfacePoint::finite(z, w);
    let image = apply_symmetry(sym, fin);
    let img_fin = SurfacePoint::finite(image.z_value(), image.w_value());
    let f_img = ctx.eval(kind, &img_fin, None)?;
    let f_p = ctx.eval(kind, &fin, None)?;
    let lhs = match sym {
        Symmetry::S => f_img * (-(z * z).inv()),
        Symmetry::S0p => f_img * (-(z.conj() * z.conj()).inv()),
        Symmetry::S2p => -f_img,
    };
    let rhs = if sym.is_antiholomorphic() { f_p.conj() * sign } else { f_p * sign };
    Ok((lhs, rhs))
}
