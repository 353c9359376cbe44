//! Adaptive one-dimensional quadrature.
//!
//! Three tools live here:
//! * [`integrate_real`] / [`integrate_complex`]: globally adaptive Gauss–Kronrod (7/15)
//!   with optional removal of inverse-square-root endpoint singularities;
//! * [`integrate_joint`]: integration of an integrand that depends on a running
//!   antiderivative `L(x) = L0 + ∫ dl`, evaluated spectrally on each panel so the
//!   antiderivative carries no interpolation error (used for `g = exp ∫ dg/g`);
//! * [`integrate_form`]: line integrals of a form along a [`LiftedPath`].

use std::collections::BinaryHeap;
use std::cmp::Ordering;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::forms::{FormContext, FormKind};
use crate::surface_domain::{LiftedPath, PathGeometry, SurfacePoint};

type C64 = Complex64;

/// Tolerances and endpoint flags for the adaptive rules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadSpec {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_depth: u32,
    /// The integrand behaves like `(x - lo)^(-1/2)` at the left end.
    pub left_singular: bool,
    /// The integrand behaves like `(hi - x)^(-1/2)` at the right end.
    pub right_singular: bool,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { abs_tol: 1e-12, rel_tol: 1e-11, max_depth: 40, left_singular: false, right_singular: false }
    }
}

impl QuadSpec {
    pub fn with_tol(abs_tol: f64, rel_tol: f64) -> Self {
        QuadSpec { abs_tol, rel_tol, ..Default::default() }
    }

    pub fn singular(mut self, left: bool, right: bool) -> Self {
        self.left_singular = left;
        self.right_singular = right;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) || self.max_depth < 10 {
            return Err(Error::InvalidInput(format!("bad quadrature spec {self:?}")));
        }
        Ok(())
    }
}

/// Values the adaptive rules can accumulate.
pub trait QuadValue: Copy {
    fn zero() -> Self;
    fn add(self, other: Self) -> Self;
    fn scale(self, s: f64) -> Self;
    fn norm(self) -> f64;
    fn sub(self, other: Self) -> Self {
        self.add(other.scale(-1.0))
    }
}

impl QuadValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.abs()
    }
}

impl QuadValue for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn add(self, o: Self) -> Self {
        self + o
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn norm(self) -> f64 {
        self.norm()
    }
}

impl<const N: usize> QuadValue for [C64; N] {
    fn zero() -> Self {
        [C64::new(0.0, 0.0); N]
    }
    fn add(self, o: Self) -> Self {
        let mut r = self;
        for i in 0..N {
            r[i] += o[i];
        }
        r
    }
    fn scale(self, s: f64) -> Self {
        let mut r = self;
        for v in r.iter_mut() {
            *v *= s;
        }
        r
    }
    fn norm(self) -> f64 {
        self.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

// Gauss–Kronrod 7/15 abscissae and weights (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

fn gk15<V: QuadValue, F: FnMut(f64) -> Result<V>>(f: &mut F, lo: f64, hi: f64) -> Result<(V, f64)> {
    let c = 0.5 * (lo + hi);
    let h = 0.5 * (hi - lo);
    let fc = f(c)?;
    let mut kron = fc.scale(WGK[7]);
    let mut gauss = fc.scale(WG[3]);
    for j in 0..7 {
        let x = h * XGK[j];
        let f1 = f(c - x)?;
        let f2 = f(c + x)?;
        let s = f1.add(f2);
        kron = kron.add(s.scale(WGK[j]));
        if j % 2 == 1 {
            gauss = gauss.add(s.scale(WG[j / 2]));
        }
    }
    let val = kron.scale(h);
    let err = kron.sub(gauss).scale(h).norm();
    Ok((val, err))
}

struct Panel<V> {
    lo: f64,
    hi: f64,
    depth: u32,
    val: V,
    err: f64,
    order: usize,
}

impl<V> PartialEq for Panel<V> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl<V> Eq for Panel<V> {}
impl<V> PartialOrd for Panel<V> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<V> Ord for Panel<V> {
    fn cmp(&self, other: &Self) -> Ordering {
        // Largest error first; ties broken by creation order for determinism.
        self.err.total_cmp(&other.err).then_with(|| other.order.cmp(&self.order))
    }
}

const MAX_PANELS: usize = 20_000;

/// Globally adaptive GK15 on `[lo, hi]` with breakpoints; no endpoint substitution.
fn adaptive<V: QuadValue, F: FnMut(f64) -> Result<V>>(
    mut f: F,
    breaks: &[f64],
    spec: &QuadSpec,
) -> Result<V> {
    let mut heap = BinaryHeap::new();
    let mut order = 0usize;
    let mut total = V::zero();
    let mut total_err = 0.0;
    for w in breaks.windows(2) {
        if w[1] == w[0] {
            continue;
        }
        let (val, err) = gk15(&mut f, w[0], w[1])?;
        total = total.add(val);
        total_err += err;
        heap.push(Panel { lo: w[0], hi: w[1], depth: 0, val, err, order });
        order += 1;
    }
    let mut iter = 0usize;
    loop {
        iter += 1;
        if iter % 64 == 0 {
            // Running sums drift when large early estimates are subtracted away.
            total_err = heap.iter().map(|p| p.err).sum();
            total = heap.iter().fold(V::zero(), |acc, p| acc.add(p.val));
        }
        let tol = spec.abs_tol.max(spec.rel_tol * total.norm());
        if total_err <= tol {
            let exact: f64 = heap.iter().map(|p| p.err).sum();
            if exact <= tol {
                break;
            }
            total_err = exact;
        }
        let worst = match heap.pop() {
            Some(p) => p,
            None => break,
        };
        if worst.depth >= spec.max_depth || heap.len() > MAX_PANELS {
            return Err(Error::NonConvergent { estimate: total.norm(), error: total_err });
        }
        let mid = 0.5 * (worst.lo + worst.hi);
        let (v1, e1) = gk15(&mut f, worst.lo, mid)?;
        let (v2, e2) = gk15(&mut f, mid, worst.hi)?;
        total = total.sub(worst.val).add(v1).add(v2);
        total_err += e1 + e2 - worst.err;
        heap.push(Panel { lo: worst.lo, hi: mid, depth: worst.depth + 1, val: v1, err: e1, order });
        heap.push(Panel { lo: mid, hi: worst.hi, depth: worst.depth + 1, val: v2, err: e2, order: order + 1 });
        order += 2;
    }
    // Re-sum in panel order so the result does not depend on heap internals.
    let mut panels: Vec<Panel<V>> = heap.into_vec();
    panels.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    Ok(panels.into_iter().fold(V::zero(), |acc, p| acc.add(p.val)))
}

/// Map `s ∈ [0,1]` to `[lo,hi]` removing inverse-square-root singularities at flagged ends.
/// Returns `(x, dx/ds)`.
fn endpoint_map(lo: f64, hi: f64, left: bool, right: bool, s: f64) -> (f64, f64) {
    let len = hi - lo;
    match (left, right) {
        (false, false) => (lo + len * s, len),
        (true, false) => (lo + len * s * s, 2.0 * len * s),
        (false, true) => {
            let r = 1.0 - s;
            (hi - len * r * r, 2.0 * len * r)
        }
        (true, true) => {
            let th = std::f64::consts::PI * (s - 0.5);
            (lo + 0.5 * len * (1.0 + th.sin()), 0.5 * len * std::f64::consts::PI * th.cos())
        }
    }
}

/// Generic adaptive integral with optional singular-endpoint substitution.
pub fn integrate<V: QuadValue, F: FnMut(f64) -> Result<V>>(mut f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<V> {
    spec.validate()?;
    if lo == hi {
        return Ok(V::zero());
    }
    if !spec.left_singular && !spec.right_singular {
        return adaptive(f, &[lo, hi], spec);
    }
    let (l, r) = (spec.left_singular, spec.right_singular);
    adaptive(
        |s| {
            let (x, dx) = endpoint_map(lo, hi, l, r, s);
            Ok(f(x)?.scale(dx))
        },
        &[0.0, 0.5, 1.0],
        spec,
    )
}

/// Adaptive integral of a real function on `[lo, hi]`.
pub fn integrate_real<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<f64> {
    integrate(|x| Ok(f(x)), lo, hi, spec)
}

/// Adaptive integral of a real function with interior breakpoints (no endpoint substitution).
pub fn integrate_real_breaks<F: Fn(f64) -> f64>(f: F, breaks: &[f64], spec: &QuadSpec) -> Result<f64> {
    spec.validate()?;
    adaptive(|x| Ok(f(x)), breaks, spec)
}

/// Adaptive integral of a complex function on `[lo, hi]`.
pub fn integrate_complex<F: FnMut(f64) -> Result<C64>>(f: F, lo: f64, hi: f64, spec: &QuadSpec) -> Result<C64> {
    integrate(f, lo, hi, spec)
}

/// Gauss–Legendre nodes and weights on [-1, 1] (Newton iteration on P_n).
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[n - 1 - i] = z;
        w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
    }
    (x, w)
}

/// Gauss–Legendre rule together with its spectral integration matrix
/// `q[j][k] = ∫_{-1}^{x_j} ℓ_k(x) dx`, exact for polynomials of degree < n.
pub struct CumulativeRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub q: Vec<Vec<f64>>,
}

impl CumulativeRule {
    pub fn new(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let bary: Vec<f64> = (0..n)
            .map(|k| 1.0 / (0..n).filter(|&m| m != k).map(|m| x[k] - x[m]).product::<f64>())
            .collect();
        let lagrange = |k: usize, t: f64| -> f64 {
            let mut p = bary[k];
            for m in 0..n {
                if m != k {
                    p *= t - x[m];
                }
            }
            p
        };
        let mut q = vec![vec![0.0; n]; n];
        for j in 0..n {
            let half = 0.5 * (x[j] + 1.0);
            for k in 0..n {
                let mut s = 0.0;
                for m in 0..n {
                    let t = -1.0 + half * (x[m] + 1.0);
                    s += w[m] * lagrange(k, t);
                }
                q[j][k] = s * half;
            }
        }
        CumulativeRule { nodes: x, weights: w, q }
    }

    pub fn shared() -> &'static CumulativeRule {
        static RULE: OnceLock<CumulativeRule> = OnceLock::new();
        RULE.get_or_init(|| CumulativeRule::new(16))
    }
}

/// Result of a joint integration: final value of the running antiderivative and
/// the accumulated vector integral.
#[derive(Debug, Clone, Copy)]
pub struct JointResult<const K: usize> {
    pub l_end: C64,
    pub values: [C64; K],
}

/// One spectral panel of the joint integral on `[p, q]` starting from `l0`.
fn joint_panel<const K: usize, D, G>(dl: &mut D, f: &mut G, p: f64, q: f64, l0: C64) -> Result<JointResult<K>>
where
    D: FnMut(f64) -> Result<C64>,
    G: FnMut(f64, C64) -> Result<[C64; K]>,
{
    let rule = CumulativeRule::shared();
    let n = rule.nodes.len();
    let h = 0.5 * (q - p);
    let c = 0.5 * (q + p);
    let mut dvals = [C64::new(0.0, 0.0); 32];
    for j in 0..n {
        dvals[j] = dl(c + h * rule.nodes[j])?;
    }
    let mut values = [C64::new(0.0, 0.0); K];
    for j in 0..n {
        let mut lj = C64::new(0.0, 0.0);
        for k in 0..n {
            lj += dvals[k] * rule.q[j][k];
        }
        let fj = f(c + h * rule.nodes[j], l0 + lj * h)?;
        for i in 0..K {
            values[i] += fj[i] * (rule.weights[j] * h);
        }
    }
    let mut dl_total = C64::new(0.0, 0.0);
    for j in 0..n {
        dl_total += dvals[j] * rule.weights[j];
    }
    Ok(JointResult { l_end: l0 + dl_total * h, values })
}

fn joint_recurse<const K: usize, D, G>(
    dl: &mut D,
    f: &mut G,
    p: f64,
    q: f64,
    l0: C64,
    whole: JointResult<K>,
    spec: &QuadSpec,
    depth: u32,
    budget: f64,
    floor: f64,
) -> Result<JointResult<K>>
where
    D: FnMut(f64) -> Result<C64>,
    G: FnMut(f64, C64) -> Result<[C64; K]>,
{
    let m = 0.5 * (p + q);
    let left = joint_panel(dl, f, p, m, l0)?;
    let right = joint_panel(dl, f, m, q, left.l_end)?;
    let combined = JointResult { l_end: right.l_end, values: left.values.add(right.values) };
    let diff = (combined.l_end - whole.l_end).norm().max(combined.values.sub(whole.values).norm());
    // Halved budget, floored at a small fraction of the top-level budget and at the
    // rounding level of the running values so deep panels near singular points terminate.
    let round = 8.0 * f64::EPSILON * (combined.l_end.norm() + combined.values.norm());
    let tol = budget.max(floor).max(round);
    if diff <= tol {
        return Ok(combined);
    }
    if depth >= spec.max_depth {
        return Err(Error::NonConvergent { estimate: combined.values.norm(), error: diff });
    }
    let ls = joint_recurse(dl, f, p, m, l0, left, spec, depth + 1, budget * 0.5, floor)?;
    let right = joint_panel(dl, f, m, q, ls.l_end)?;
    let rs = joint_recurse(dl, f, m, q, ls.l_end, right, spec, depth + 1, budget * 0.5, floor)?;
    Ok(JointResult { l_end: rs.l_end, values: ls.values.add(rs.values) })
}

/// Integrate `∫ f(x, L(x)) dx` over `[lo, hi]` where `L(x) = l0 + ∫_lo^x dl`.
///
/// Both integrals are evaluated on the same panels with a 16-point spectral rule, so
/// `L` at the nodes is as accurate as the quadrature itself. Flagged endpoints are
/// treated with the same square-root substitution as [`integrate`]; both `dl` and `f`
/// are multiplied by the Jacobian.
pub fn integrate_joint<const K: usize, D, G>(
    mut dl: D,
    mut f: G,
    lo: f64,
    hi: f64,
    l0: C64,
    spec: &QuadSpec,
) -> Result<JointResult<K>>
where
    D: FnMut(f64) -> Result<C64>,
    G: FnMut(f64, C64) -> Result<[C64; K]>,
{
    spec.validate()?;
    if lo == hi {
        return Ok(JointResult { l_end: l0, values: [C64::new(0.0, 0.0); K] });
    }
    let (ls, rs) = (spec.left_singular, spec.right_singular);
    let mut dls = |s: f64| -> Result<C64> {
        let (x, dx) = endpoint_map(lo, hi, ls, rs, s);
        Ok(dl(x)? * dx)
    };
    let mut fs = |s: f64, l: C64| -> Result<[C64; K]> {
        let (x, dx) = endpoint_map(lo, hi, ls, rs, s);
        Ok(f(x, l)?.scale(dx))
    };
    let whole = joint_panel(&mut dls, &mut fs, 0.0, 1.0, l0)?;
    // Error budget relative to the size of the whole integral, halved per bisection.
    let size = whole.values.norm().max((whole.l_end - l0).norm()).max(1.0);
    let budget = spec.abs_tol.max(spec.rel_tol * size);
    joint_recurse(&mut dls, &mut fs, 0.0, 1.0, l0, whole, spec, 0, budget, budget * 1e-3)
}

/// Position, derivative and sheet value on one segment of a lifted path at local
/// parameter `u ∈ [0,1]`. The sheet is the root nearest to the linear interpolation of
/// the segment's end values, which is unambiguous under the lift invariant.
pub(crate) fn segment_point(path: &LiftedPath, k: usize, u: f64) -> (C64, C64, C64) {
    let p0 = &path.samples[k];
    let p1 = &path.samples[k + 1];
    let (z, dz) = match path.geometry {
        PathGeometry::Polyline => (p0.z + (p1.z - p0.z) * u, p1.z - p0.z),
        PathGeometry::Circle { center, radius } => {
            let (t0, t1) = (path.params[k], path.params[k + 1]);
            let t = t0 + (t1 - t0) * u;
            let e = C64::from_polar(radius, t);
            (center + e, e * C64::i() * (t1 - t0))
        }
    };
    let guess = p0.w + (p1.w - p0.w) * u;
    let (r, _) = crate::surface_domain::w_values(z, path.rho);
    let w = if (r - guess).norm() <= (-r - guess).norm() { r } else { -r };
    (z, dz, w)
}

/// Line integral of a form along a lifted path.
///
/// Each segment between consecutive samples is integrated with the adaptive rule; a
/// segment ending (or starting) at a branch point (w = 0) uses the square-root
/// substitution at that end. The path must live in a single chart.
pub fn integrate_form(kind: FormKind, path: &LiftedPath, ctx: &FormContext, spec: &QuadSpec) -> Result<C64> {
    let mut total = C64::new(0.0, 0.0);
    for k in 0..path.samples.len().saturating_sub(1) {
        let chart = path.samples[k].chart;
        let left = path.samples[k].w == C64::new(0.0, 0.0);
        let right = path.samples[k + 1].w == C64::new(0.0, 0.0);
        let seg_spec = QuadSpec { left_singular: left, right_singular: right, ..*spec };
        total += integrate_complex(
            |u| {
                let (z, dz, w) = segment_point(path, k, u);
                let p = SurfacePoint { z, w, chart };
                Ok(ctx.eval(kind, &p, None)? * dz)
            },
            0.0,
            1.0,
            &seg_spec,
        )?;
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_weights_sum_to_two() {
        let (x, w) = gauss_legendre(16);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn arcsine_with_singular_end() {
        let spec = QuadSpec::default().singular(false, true);
        let v = integrate_real(|t| 1.0 / (1.0 - t * t).sqrt(), 0.0, 1.0, &spec).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_2).abs() < 1e-11);
    }

    #[test]
    fn arctan_integral() {
        let v = integrate_real(|t| 1.0 / (1.0 + t * t), 0.0, 1.0, &QuadSpec::default()).unwrap();
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-13);
    }

    #[test]
    fn both_ends_singular() {
        // ∫_{-1}^{1} dx / sqrt(1-x^2) = π
        let spec = QuadSpec::default().singular(true, true);
        let v = integrate_real(|t| 1.0 / (1.0 - t * t).sqrt(), -1.0, 1.0, &spec).unwrap();
        assert!((v - std::f64::consts::PI).abs() < 1e-11);
    }

    #[test]
    fn cumulative_matrix_integrates_polynomials() {
        let rule = CumulativeRule::new(16);
        for (j, &x) in rule.nodes.iter().enumerate() {
            let approx: f64 = (0..16).map(|k| rule.q[j][k] * rule.nodes[k].powi(5)).sum();
            let exact = (x.powi(6) - 1.0) / 6.0;
            assert!((approx - exact).abs() < 1e-14);
        }
    }

    #[test]
    fn joint_integration_of_exponential() {
        // L' = i, f = e^L  =>  ∫_0^1 e^{ix} dx = (e^i - 1)/i
        let r = integrate_joint::<1, _, _>(
            |_| Ok(C64::i()),
            |_, l| Ok([l.exp()]),
            0.0,
            1.0,
            C64::new(0.0, 0.0),
            &QuadSpec::default(),
        )
        .unwrap();
        let exact = (C64::i().exp() - 1.0) / C64::i();
        assert!((r.values[0] - exact).norm() < 1e-13);
        assert!((r.l_end - C64::i()).norm() < 1e-14);
    }

    #[test]
    fn depth_exhaustion_reports_nonconvergence() {
        let spec = QuadSpec { max_depth: 10, ..Default::default() };
        let r = integrate_real(|x| 1.0 / x, 0.0, 1.0, &spec);
        assert!(matches!(r, Err(Error::NonConvergent { .. })));
    }
}
