//! The geometric side of the pretrace identity on `PSL(2,Z)\H`.
//!
//! For a compactly supported `m` with vanishing moment and an automorphic weight `u`,
//! `∫_F M(z,z) u(z) dμ` equals the sum of hyperbolic, elliptic, parabolic and identity
//! contributions. Each term is computed here independently, and `verify_identity` compares
//! the totals.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geodesics::ConjugacyClassRecord;
use crate::geometry::{modular_covolume, Point};
use crate::kernels::{m_transform, TestFunction};
use crate::modular_group::enumerate_ball_arithmetic;
use crate::quadrature::{integrate, integrate_with_breaks, GaussLegendre, QuadOptions};
use crate::specfun::{g_lambda, riemann_zeta, SpectralParameter};

/// The cusp is summed up to this multiple of `Y_cap`.
const CUSP_FAR_FACTOR: f64 = 200.0;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Weight used when the caller supplies no eigenfunction: `u0 = vol(F)^{-1/2}`.
pub fn constant_weight_value() -> f64 {
    modular_covolume().recip().sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum WeightKind {
    Constant,
    External,
}

type ValueFn = Arc<dyn Fn(&Point<f64>) -> Complex64 + Send + Sync>;

/// An automorphic eigenfunction `u` together with the data each geometric term needs.
#[derive(Clone)]
pub struct AutomorphicWeight {
    kind: WeightKind,
    eigen_s: Complex64,
    value_at: ValueFn,
    b_u: Complex64,
    b_tilde_u: Complex64,
    /// Trace to the total of `∫_{C_gamma} u dS` over the classes of that trace.
    period_integrals: BTreeMap<i64, Complex64>,
    /// `u(i)` and `u(rho)`.
    elliptic_values: [Complex64; 2],
    /// `∫_F u dμ`, multiplying `m(0)` in the identity term.
    domain_integral: Complex64,
}

impl std::fmt::Debug for AutomorphicWeight {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("AutomorphicWeight")
            .field("kind", &self.kind)
            .field("eigen_s", &self.eigen_s)
            .field("b_u", &self.b_u)
            .field("b_tilde_u", &self.b_tilde_u)
            .finish_non_exhaustive()
    }
}

impl AutomorphicWeight {
    /// The normalized constant function, `s = 1`, `B_u = 0`, `B~_u = u0`.
    pub fn constant() -> Self {
        let u0 = Complex64::new(constant_weight_value(), 0.0);
        AutomorphicWeight {
            kind: WeightKind::Constant,
            eigen_s: Complex64::new(1.0, 0.0),
            value_at: Arc::new(move |_| u0),
            b_u: ZERO,
            b_tilde_u: u0,
            period_integrals: BTreeMap::new(),
            elliptic_values: [u0, u0],
            domain_integral: u0 * modular_covolume(),
        }
    }

    /// Caller-supplied eigenfunction data. Integrability of `u` over `F` is not checked.
    #[allow(clippy::too_many_arguments)]
    pub fn external(
        eigen_s: Complex64,
        value_at: impl Fn(&Point<f64>) -> Complex64 + Send + Sync + 'static,
        b_u: Complex64,
        b_tilde_u: Complex64,
        period_integrals: BTreeMap<i64, Complex64>,
        elliptic_values: [Complex64; 2],
        domain_integral: Complex64,
    ) -> Result<Self> {
        SpectralParameter::from_s(eigen_s)?;
        Ok(AutomorphicWeight {
            kind: WeightKind::External,
            eigen_s,
            value_at: Arc::new(value_at),
            b_u,
            b_tilde_u,
            period_integrals,
            elliptic_values,
            domain_integral,
        })
    }

    pub fn kind(&self) -> WeightKind {
        self.kind
    }

    pub fn eigen_s(&self) -> Complex64 {
        self.eigen_s
    }

    pub fn value_at(&self, z: &Point<f64>) -> Complex64 {
        (self.value_at)(z)
    }

    pub fn cusp_constants(&self) -> (Complex64, Complex64) {
        (self.b_u, self.b_tilde_u)
    }

    pub fn elliptic_values(&self) -> [Complex64; 2] {
        self.elliptic_values
    }

    pub fn domain_integral(&self) -> Complex64 {
        self.domain_integral
    }

    pub fn spectral_parameter(&self) -> Result<SpectralParameter<f64>> {
        if self.kind == WeightKind::Constant {
            return Ok(SpectralParameter::constant());
        }
        SpectralParameter::from_s(self.eigen_s)
    }

    fn is_constant_eigenvalue(&self) -> bool {
        (self.eigen_s - 1.0).norm() < 1e-12 || self.eigen_s.norm() < 1e-12
    }

    /// Total period integral over the classes of trace `t` present in `records`.
    fn period_for_trace(&self, t: i64, records: &[&ConjugacyClassRecord]) -> Result<Complex64> {
        match self.kind {
            WeightKind::Constant => {
                let total: f64 = records.iter().map(|r| r.class_count as f64 * r.primitive_length).sum();
                Ok(self.b_tilde_u * total)
            }
            WeightKind::External => self
                .period_integrals
                .get(&t)
                .copied()
                .ok_or_else(|| Error::invalid(format!("no period integral supplied for trace {t}"))),
        }
    }
}

/// `T(gamma) = (t^2 - 4)/4` at and below which classes contribute to `Σ_hyp`.
fn required_trace(support: f64) -> i64 {
    let mut t = 2;
    while (((t + 1) * (t + 1) - 4) as f64) / 4.0 < support {
        t += 1;
    }
    t
}

/// Number of hyperbolic classes with `T(gamma) < support_bound(m)`.
pub fn hyperbolic_term_count(m: &TestFunction, spectrum: &[ConjugacyClassRecord]) -> u64 {
    let v = m.support_bound();
    spectrum.iter().filter(|r| r.shifted_norm() < v).map(|r| r.class_count).sum()
}

/// `Σ_hyp = Σ_gamma (∫_{C_gamma} u dS) M_{m,lambda}(T(gamma))`.
pub fn sigma_hyp(m: &TestFunction, u: &AutomorphicWeight, spectrum: &[ConjugacyClassRecord]) -> Result<Complex64> {
    let v = m.support_bound();
    let needed = required_trace(v);
    if needed < 3 {
        return Ok(ZERO);
    }
    let covered = spectrum.iter().map(|r| r.trace).max().unwrap_or(2);
    if covered < needed {
        return Err(Error::CoverageInsufficient {
            covered: ((covered * covered - 4) as f64 / 4.0).max(0.0),
            needed: v,
        });
    }
    let mut by_trace: BTreeMap<i64, Vec<&ConjugacyClassRecord>> = BTreeMap::new();
    for r in spectrum.iter().filter(|r| r.shifted_norm() < v) {
        by_trace.entry(r.trace).or_default().push(r);
    }
    for t in 3..=needed {
        if !by_trace.contains_key(&t) {
            return Err(Error::CoverageInsufficient { covered: (t * t - 4) as f64 / 4.0, needed: v });
        }
    }
    let tp = u.spectral_parameter()?;
    by_trace
        .into_par_iter()
        .map(|(t, recs)| {
            let period = u.period_for_trace(t, &recs)?;
            Ok(period * m_transform(m, &tp, recs[0].shifted_norm())?)
        })
        .try_reduce(|| ZERO, |a, b| Ok(a + b))
}

fn tight_opts(scale: f64) -> QuadOptions {
    QuadOptions { abs_tol: 1e-13 * scale.max(1.0), rel_tol: 1e-12, max_intervals: 20_000 }
}

/// `∫_0^∞ m(a sinh^2 r) g_lambda(r) sinh r dr`.
pub fn elliptic_integral(m: &TestFunction, a: f64, t: &SpectralParameter<f64>) -> Result<Complex64> {
    if !(a > 0.0) {
        return Err(Error::invalid(format!("elliptic coefficient must be positive, got {a}")));
    }
    let v = m.support_bound();
    if v == 0.0 {
        return Ok(ZERO);
    }
    let top = (v / a).sqrt().asinh();
    let breaks: Vec<f64> = m
        .breakpoints()
        .into_iter()
        .filter(|&b| b > 0.0 && b < v)
        .map(|b| (b / a).sqrt().asinh())
        .collect();
    let trivial = (t.it() - 0.5).norm() < 1e-14;
    let failure = std::sync::Mutex::new(None);
    let res = integrate_with_breaks(
        |r: f64| {
            let sh = r.sinh();
            let mv = m.eval(a * sh * sh);
            if mv == 0.0 {
                return ZERO;
            }
            let g = if trivial {
                Complex64::new(1.0, 0.0)
            } else {
                match g_lambda(r, t) {
                    Ok(g) => g,
                    Err(e) => {
                        failure.lock().expect("poisoned").get_or_insert(e);
                        ZERO
                    }
                }
            };
            g * (mv * sh)
        },
        0.0,
        top,
        &breaks,
        &tight_opts(top),
    );
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(res.value)
}

/// `Σ_ell` over the elliptic points `i` (order 2) and `rho` (order 3).
pub fn sigma_ell(m: &TestFunction, u: &AutomorphicWeight) -> Result<Complex64> {
    let tp = u.spectral_parameter()?;
    let [u_i, u_rho] = u.elliptic_values();
    let mut total = ZERO;
    for (value, order) in [(u_i, 2u32), (u_rho, 3u32)] {
        let mut inner = ZERO;
        for l in 1..order {
            let a = (l as f64 * PI / order as f64).sin().powi(2);
            inner += elliptic_integral(m, a, &tp)?;
        }
        total += value * inner * (2.0 * PI / order as f64);
    }
    Ok(total)
}

/// `∫_0^V m(v) v^{-1/2} w(v) dv` with `v = sigma^2`, geometric breaks toward the origin.
fn moment_like<F: Fn(f64) -> Complex64>(m: &TestFunction, weight: F) -> Complex64 {
    let top = m.support_bound().sqrt();
    if top == 0.0 {
        return ZERO;
    }
    let mut breaks: Vec<f64> = m.breakpoints().into_iter().filter(|&b| b > 0.0).map(f64::sqrt).collect();
    breaks.extend((1..40).map(|k| top * 0.5f64.powi(k)));
    integrate_with_breaks(
        |s: f64| {
            let mv = m.eval(s * s);
            if mv == 0.0 || s == 0.0 {
                ZERO
            } else {
                weight(s) * (2.0 * mv)
            }
        },
        0.0,
        top,
        &breaks,
        &tight_opts(top),
    )
    .value
}

/// `∫_0^∞ m(v) v^{-1/2} dv`, the moment whose vanishing keeps `M(z,z)` bounded in the cusp.
pub fn moment(m: &TestFunction) -> f64 {
    moment_like(m, |_| Complex64::new(1.0, 0.0)).re
}

/// `Σ_par`. At `s = 1` this is `B~_u ∫ m(v) v^{-1/2} log v dv`; otherwise the two
/// zeta-weighted Mellin moments.
pub fn sigma_par(m: &TestFunction, u: &AutomorphicWeight) -> Result<Complex64> {
    let (b_u, b_tilde) = u.cusp_constants();
    if u.is_constant_eigenvalue() {
        let log_moment = moment_like(m, |s| Complex64::new(2.0 * s.ln(), 0.0));
        return Ok(b_tilde * log_moment);
    }
    let s = u.eigen_s();
    let one = Complex64::new(1.0, 0.0);
    let mut total = ZERO;
    if b_u != ZERO {
        if s.re >= 1.0 {
            return Err(Error::invalid("v^{-(1+s)/2} is not integrable at 0 for Re s >= 1"));
        }
        let z = riemann_zeta(one - s)?;
        let mellin = moment_like(m, |sig| Complex64::new(sig, 0.0).powc(one - s));
        total += b_u * Complex64::new(2.0, 0.0).powc(one - s) * z * mellin;
    }
    if b_tilde != ZERO {
        if s.re <= 0.0 {
            return Err(Error::Pole { function: "zeta", at: format!("{s}") });
        }
        let z = riemann_zeta(s)?;
        let mellin = moment_like(m, |sig| Complex64::new(sig, 0.0).powc(s));
        total += b_tilde * Complex64::new(2.0, 0.0).powc(s) * z * mellin;
    }
    Ok(total)
}

/// `m(0) ∫_F u dμ`, the contribution of the identity element.
pub fn sigma_id(m: &TestFunction, u: &AutomorphicWeight) -> Complex64 {
    u.domain_integral() * m.eval(0.0)
}

/// Resolution of the two-dimensional quadrature over the truncated fundamental domain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureSpec {
    /// Gauss–Legendre panels across the rectangle `1 <= y <= Y_cap` (in `1/y`).
    pub panels: usize,
    /// Nodes per panel.
    pub nodes: usize,
    /// Truncation height; raised automatically to the smallest height where only
    /// translations reach the support.
    pub y_cap: f64,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec { panels: 128, nodes: 8, y_cap: 10.0 }
    }
}

impl QuadratureSpec {
    pub fn new(panels: usize, nodes: usize, y_cap: f64) -> Result<Self> {
        if panels == 0 || nodes == 0 {
            return Err(Error::invalid("quadrature needs at least one panel and one node"));
        }
        if !(y_cap >= 1.0) || !y_cap.is_finite() {
            return Err(Error::invalid(format!("Y_cap must be finite and at least 1, got {y_cap}")));
        }
        Ok(QuadratureSpec { panels, nodes, y_cap })
    }

    /// Upper end of the explicitly summed cusp range.
    pub fn far_height(&self, y_cap: f64) -> f64 {
        CUSP_FAR_FACTOR * y_cap
    }

    /// Twice as many panels.
    pub fn refined(&self) -> Self {
        QuadratureSpec { panels: self.panels * 2, ..*self }
    }

    /// Height above which every non-translation moves `z` beyond `u = V`: `y - 1/y > 2 sqrt V`.
    pub fn effective_y_cap(&self, support: f64) -> f64 {
        let min = support.sqrt() + (support + 1.0).sqrt();
        if self.y_cap <= min {
            log::debug!("raising Y_cap from {} to {}", self.y_cap, min * 1.001);
            min * 1.001
        } else {
            self.y_cap
        }
    }
}

/// How the geometric side was assembled.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GeometricSide {
    pub value: Complex64,
    /// Integral over `F ∩ {y <= Y_cap}`.
    pub truncated: Complex64,
    /// Integral over `y > Y_cap`, where only translations contribute.
    pub tail: Complex64,
    pub y_cap: f64,
    pub rows: usize,
    /// Group elements tested across all rows.
    pub candidates: usize,
}

/// Evaluates `∫_F M(z,z) u(z) dμ` after checking the moment condition.
pub fn geometric_lhs(m: &TestFunction, u: &AutomorphicWeight, spec: &QuadratureSpec) -> Result<Complex64> {
    Ok(geometric_lhs_detailed(m, u, spec)?.value)
}

pub fn geometric_lhs_detailed(m: &TestFunction, u: &AutomorphicWeight, spec: &QuadratureSpec) -> Result<GeometricSide> {
    let v = m.support_bound();
    let mom = moment(m);
    let tolerance = 1e-9 * v.sqrt().max(1.0);
    if mom.abs() > tolerance {
        return Err(Error::MomentViolation { moment: mom.abs(), tolerance });
    }
    if u.kind() == WeightKind::External && (u.b_u != ZERO || u.b_tilde_u != ZERO) {
        return Err(Error::invalid(
            "the cusp tail is only available for the constant weight or weights without constant term",
        ));
    }
    let mut side = truncated_domain_integral(m, u, spec)?;
    if u.kind() == WeightKind::Constant {
        side.tail = u.b_tilde_u * cusp_tail(m, side.y_cap, spec.far_height(side.y_cap));
    }
    side.value = side.truncated + side.tail;
    Ok(side)
}

/// `∫_{Y}^{Y2} ∫_{-1/2}^{1/2} M(z,z) dx dy/y^2` when only translations contribute:
/// `m(0)(1/Y - 1/Y2) + 2 Σ_{n>=1} (phi(n^2/4Y^2) - phi(n^2/4Y2^2))/n` with
/// `phi(a) = ∫_0^a m(v) v^{-1/2} dv`. On a finite range the sum over `n` is finite and may be
/// exchanged with the integral. Beyond `Y2` the moment condition leaves `O(Y2^{-2})`.
fn cusp_tail(m: &TestFunction, y_cap: f64, y_far: f64) -> f64 {
    let v = m.support_bound();
    let root_v = v.sqrt();
    let phis = |y: f64| -> Vec<f64> {
        let n_max = (2.0 * y * root_v).ceil() as usize;
        let breaks: Vec<f64> = m.breakpoints().into_iter().filter(|&b| b > 0.0).map(f64::sqrt).collect();
        let opts = tight_opts(root_v);
        let (mut phi, mut prev) = (0.0, 0.0);
        (1..=n_max)
            .map(|n| {
                let s = (n as f64 / (2.0 * y)).min(root_v);
                let inner: Vec<f64> = breaks.iter().copied().filter(|&b| b > prev && b < s).collect();
                phi += integrate_with_breaks(|x: f64| 2.0 * m.eval(x * x), prev, s, &inner, &opts).value;
                prev = s;
                phi
            })
            .collect()
    };
    let near = phis(y_cap);
    let far = phis(y_far);
    // Past the support phi equals the moment for both heights and the difference vanishes.
    let full = near.last().copied().unwrap_or(0.0);
    let sum: f64 = far
        .iter()
        .enumerate()
        .map(|(k, f)| (near.get(k).copied().unwrap_or(full) - f) / (k + 1) as f64)
        .sum();
    m.eval(0.0) * (y_cap.recip() - y_far.recip()) + 2.0 * sum
}

/// `∫_{F, y <= Y_cap} M(z,z) u(z) dμ` without the moment check or cusp tail.
///
/// Rows of constant `y` are integrated exactly in `x`: on a row `u(z, gz)` is a quartic in
/// `x`, so its crossings of the breakpoints of `m` are located by root isolation and `m` is
/// integrated between them. The rows themselves are placed by composite Gauss–Legendre in
/// `1/y` above `y = 1` and in `sqrt(1 - y^2)` below, which removes the square-root edge at `i`.
pub fn truncated_domain_integral(
    m: &TestFunction,
    u: &AutomorphicWeight,
    spec: &QuadratureSpec,
) -> Result<GeometricSide> {
    let v = m.support_bound();
    let y_cap = spec.effective_y_cap(v);
    let gl = GaussLegendre::new(spec.nodes);
    let panels_a = spec.panels;
    let panels_b = spec.panels.div_ceil(2).max(1);

    // (y, x0, weight) for every row, with the Jacobian folded into the weight.
    let mut rows: Vec<(f64, f64, f64)> = Vec::new();
    let lo_t = y_cap.recip();
    let step_a = (1.0 - lo_t) / panels_a as f64;
    for p in 0..panels_a {
        let a = lo_t + step_a * p as f64;
        for (t, w) in gl.mapped(a, a + step_a) {
            rows.push((t.recip(), 0.0, w));
        }
    }
    let step_b = 0.5 / panels_b as f64;
    for p in 0..panels_b {
        let a = step_b * p as f64;
        for (s, w) in gl.mapped(a, a + step_b) {
            let c2 = 1.0 - s * s;
            rows.push((c2.sqrt(), s, w * s / (c2 * c2.sqrt())));
        }
    }

    let results: Vec<(Complex64, usize)> = rows
        .par_iter()
        .map(|&(y, x0, w)| {
            let (val, n) = row_integral(m, u, y, x0, 0.5)?;
            Ok((val * w, n))
        })
        .collect::<Result<_>>()?;
    let truncated: Complex64 = results.iter().map(|r| r.0).sum::<Complex64>() * 2.0;
    let candidates = results.iter().map(|r| r.1).sum();
    Ok(GeometricSide { value: truncated, truncated, tail: ZERO, y_cap, rows: rows.len(), candidates })
}

/// `∫_{x0}^{x1} M(x+iy, x+iy) u(x+iy) dx` and the number of group elements examined.
fn row_integral(m: &TestFunction, u: &AutomorphicWeight, y: f64, x0: f64, x1: f64) -> Result<(Complex64, usize)> {
    if x1 <= x0 {
        return Ok((ZERO, 0));
    }
    let v = m.support_bound();
    let center = Point::new(0.5 * (x0 + x1), y)?;
    let delta = 2.0 * (0.25 * (x1 - x0) / y).asinh();
    // Any g with u(z, gz) <= V for z on the row moves the center by at most rho_V + 2 delta.
    let rho = (2.0 * v + 1.0).acosh() + 2.0 * delta;
    let threshold = 2.0 * rho.cosh() * (1.0 + 1e-9) + 1e-9;
    let ball = enumerate_ball_arithmetic(&center, &center, threshold)?;
    let mut levels: Vec<f64> = m.breakpoints().into_iter().filter(|&b| b > 0.0 && b < v).collect();
    levels.push(v);
    let scale = 4.0 * y * y;
    let constant = u.kind() == WeightKind::Constant;
    let opts = QuadOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 2000 };
    let mut total = ZERO;
    let mut cuts = Vec::new();
    for g in &ball.elements {
        let [a, b, c, d] = g.entries();
        let (c, e, f) = (c as f64, (d - a) as f64, -(b as f64 + c as f64 * y * y));
        // 4y^2 u(x) = (c x^2 + e x + f)^2 + y^2 (2c x + e)^2.
        let quartic = [
            f * f + y * y * e * e,
            2.0 * e * f + 4.0 * y * y * c * e,
            e * e + 2.0 * c * f + 4.0 * y * y * c * c,
            2.0 * c * e,
            c * c,
        ];
        let u_at = |x: f64| horner(&quartic, x) / scale;
        cuts.clear();
        cuts.push(x0);
        cuts.push(x1);
        for &lvl in &levels {
            let mut shifted = quartic;
            shifted[0] -= scale * lvl;
            roots_in(&shifted, x0, x1, &mut cuts);
        }
        cuts.sort_by(f64::total_cmp);
        for win in cuts.windows(2) {
            let (l, r) = (win[0], win[1]);
            if r <= l || u_at(0.5 * (l + r)) > v {
                continue;
            }
            total += if constant {
                Complex64::new(integrate(|x: f64| m.eval(u_at(x)), l, r, &opts).value, 0.0)
            } else {
                integrate(
                    |x: f64| {
                        let z = Point::new(x, y).expect("row lies in the upper half-plane");
                        u.value_at(&z) * m.eval(u_at(x))
                    },
                    l,
                    r,
                    &opts,
                )
                .value
            };
        }
    }
    if constant {
        total *= u.b_tilde_u;
    }
    Ok((total, ball.elements.len()))
}

fn horner(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &k| acc * x + k)
}

/// Appends the real roots of the polynomial `c` (ascending coefficients) in `[lo, hi]`.
/// Monotone pieces are found from the roots of the derivative and bisected.
fn roots_in(c: &[f64], lo: f64, hi: f64, out: &mut Vec<f64>) {
    let Some(deg) = c.iter().rposition(|&k| k != 0.0) else { return };
    match deg {
        0 => {}
        1 => {
            let r = -c[0] / c[1];
            if r >= lo && r <= hi {
                out.push(r);
            }
        }
        _ => {
            let deriv: Vec<f64> = (1..=deg).map(|k| k as f64 * c[k]).collect();
            let mut pts = vec![lo];
            roots_in(&deriv, lo, hi, &mut pts);
            pts.push(hi);
            pts.sort_by(f64::total_cmp);
            for win in pts.windows(2) {
                let (mut a, mut b) = (win[0], win[1]);
                let (fa, fb) = (horner(&c[..=deg], a), horner(&c[..=deg], b));
                if fa == 0.0 {
                    out.push(a);
                    continue;
                }
                if fa * fb >= 0.0 {
                    continue;
                }
                for _ in 0..200 {
                    let mid = 0.5 * (a + b);
                    if mid <= a || mid >= b {
                        break;
                    }
                    if (horner(&c[..=deg], mid) > 0.0) == (fa > 0.0) {
                        a = mid;
                    } else {
                        b = mid;
                    }
                }
                out.push(0.5 * (a + b));
            }
            if horner(&c[..=deg], hi) == 0.0 {
                out.push(hi);
            }
        }
    }
}

/// All terms of the identity and the relative residual `|LHS - RHS| / (1 + |LHS|)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TraceFormulaReport {
    pub sigma_hyp: Complex64,
    pub sigma_ell: Complex64,
    pub sigma_par: Complex64,
    pub sigma_id: Complex64,
    pub geometric_lhs: Complex64,
    pub residual: f64,
    pub hyperbolic_terms: u64,
    pub quadrature: QuadratureSpec,
    pub geometric: GeometricSide,
}

impl TraceFormulaReport {
    pub fn rhs(&self) -> Complex64 {
        self.sigma_hyp + self.sigma_ell + self.sigma_par + self.sigma_id
    }
}

/// Computes both sides. A large residual is reported, not raised.
pub fn verify_identity(
    m: &TestFunction,
    u: &AutomorphicWeight,
    spectrum: &[ConjugacyClassRecord],
    spec: &QuadratureSpec,
) -> Result<TraceFormulaReport> {
    let sigma_hyp = sigma_hyp(m, u, spectrum)?;
    let sigma_ell = sigma_ell(m, u)?;
    let sigma_par = sigma_par(m, u)?;
    let sigma_id = sigma_id(m, u);
    let geometric = geometric_lhs_detailed(m, u, spec)?;
    let lhs = geometric.value;
    let rhs = sigma_hyp + sigma_ell + sigma_par + sigma_id;
    Ok(TraceFormulaReport {
        sigma_hyp,
        sigma_ell,
        sigma_par,
        sigma_id,
        geometric_lhs: lhs,
        residual: (lhs - rhs).norm() / (1.0 + lhs.norm()),
        hyperbolic_terms: hyperbolic_term_count(m, spectrum),
        quadrature: *spec,
        geometric,
    })
}
