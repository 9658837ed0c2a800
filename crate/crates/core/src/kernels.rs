//! The sharp cutoff `k`, its multiplicative smoothing `k*`, and the transforms
//! `m -> q_m -> g_m -> h_m` and `m -> M_{m,lambda}(T)`.
//!
//! The smoothing is `k*(y) = ∫ eta(tau) k(y e^tau) dtau` with
//! `eta(tau) = (x/d) psi0(x tau / d) / I_{d,x}` and `I_{d,x} = ∫ psi0(tau) e^{-tau d/(2x)} dtau`,
//! which makes `∫ (k* - k)(u) u^{-1/2} du` vanish.

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::quadrature::{integrate_with_breaks, GaussLegendre, QuadOptions};
use crate::specfun::{gauss_2f1, SpectralParameter};

const BUMP_PANELS: usize = 4096;
const BUMP_ORDER: usize = 8;

/// Unnormalized bump `exp(-1/(1 - tau^2))` on `(-1, 1)`.
#[inline]
fn raw_bump(tau: f64) -> f64 {
    if tau.abs() >= 1.0 {
        return 0.0;
    }
    (-1.0 / ((1.0 - tau) * (1.0 + tau))).exp()
}

/// Cumulative integrals of the raw bump at panel edges, with the rule used inside panels.
struct BumpTable {
    edges: Vec<f64>,
    rule: GaussLegendre<f64>,
    mass: f64,
}

fn bump_table() -> &'static BumpTable {
    static TABLE: OnceLock<BumpTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let rule = GaussLegendre::new(BUMP_ORDER);
        let h = 2.0 / BUMP_PANELS as f64;
        let mut edges = Vec::with_capacity(BUMP_PANELS + 1);
        let mut acc = 0.0;
        edges.push(0.0);
        for j in 0..BUMP_PANELS {
            let a = -1.0 + j as f64 * h;
            acc += rule.integrate(raw_bump, a, a + h);
            edges.push(acc);
        }
        BumpTable { edges, rule, mass: acc }
    })
}

/// Normalizing constant `C` with `∫ C exp(-1/(1 - tau^2)) dtau = 1`.
pub fn bump_constant() -> f64 {
    bump_table().mass.recip()
}

/// The bump `psi0(tau) = C exp(-1/(1 - tau^2))` for `|tau| < 1`, zero outside.
pub fn psi0(tau: f64) -> f64 {
    raw_bump(tau) * bump_constant()
}

/// `∫_{-1}^{tau} psi0`.
pub fn psi0_cdf(tau: f64) -> f64 {
    if tau <= -1.0 {
        return 0.0;
    }
    if tau >= 1.0 {
        return 1.0;
    }
    let t = bump_table();
    let h = 2.0 / BUMP_PANELS as f64;
    let j = (((tau + 1.0) / h).floor() as usize).min(BUMP_PANELS - 1);
    let a = -1.0 + j as f64 * h;
    let partial = if tau > a { t.rule.integrate(raw_bump, a, tau) } else { 0.0 };
    (t.edges[j] + partial) / t.mass
}

/// `I_{d,x} = ∫ psi0(tau) e^{-tau d/(2x)} dtau`.
pub fn normalization_i(d: f64, x: f64) -> Result<f64> {
    if !(x > 0.0 && d > 0.0 && d < x) {
        return Err(Error::invalid(format!("need 0 < d < x, got d = {d}, x = {x}")));
    }
    Ok(weighted_bump_mass(d / (2.0 * x), BUMP_PANELS))
}

fn weighted_bump_mass(rate: f64, panels: usize) -> f64 {
    let rule = &bump_table().rule;
    let h = 2.0 / panels as f64;
    // Pair tau with -tau: psi0 even, so the weight becomes cosh.
    let mut acc = 0.0;
    for j in 0..panels / 2 {
        let a = j as f64 * h;
        acc += rule.integrate(|tau| raw_bump(tau) * (rate * tau).cosh(), a, a + h);
    }
    2.0 * acc * bump_constant()
}

/// `k(y) = 1` for `0 <= y <= x`, zero beyond.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SharpCutoff {
    x: f64,
}

impl SharpCutoff {
    pub fn new(x: f64) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::invalid(format!("cutoff radius must be positive, got {x}")));
        }
        Ok(SharpCutoff { x })
    }

    /// From the orbit-count threshold, `x = (X - 2)/4`.
    pub fn from_threshold(big_x: f64) -> Result<Self> {
        Self::new((big_x - 2.0) / 4.0)
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn eval(&self, y: f64) -> f64 {
        if y <= self.x {
            1.0
        } else {
            0.0
        }
    }
}

/// The smoothed cutoff `k*` for the pair `(x, d)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SmoothedCutoff {
    x: f64,
    d: f64,
    i_dx: f64,
    resolution: usize,
}

impl SmoothedCutoff {
    pub const DEFAULT_RESOLUTION: usize = BUMP_PANELS;

    /// Requires `0 < d < x`; the range `1 < d < x / log x` of the asymptotic argument is
    /// reported by [`SmoothedCutoff::in_asymptotic_range`] but not enforced.
    pub fn new(x: f64, d: f64) -> Result<Self> {
        Self::with_resolution(x, d, Self::DEFAULT_RESOLUTION)
    }

    /// `resolution` is the number of Gauss–Legendre panels used for `I_{d,x}`.
    pub fn with_resolution(x: f64, d: f64, resolution: usize) -> Result<Self> {
        if !(x > 0.0) || !x.is_finite() || !(d > 0.0) || !(d < x) {
            return Err(Error::invalid(format!("need 0 < d < x, got d = {d}, x = {x}")));
        }
        if resolution < 2 {
            return Err(Error::invalid("quadrature resolution must be at least 2"));
        }
        let i_dx = weighted_bump_mass(d / (2.0 * x), resolution + resolution % 2);
        if !(0.5 < i_dx && i_dx < 2.0) {
            return Err(Error::invalid(format!("I_(d,x) = {i_dx} outside (1/2, 2); d/x too large")));
        }
        Ok(SmoothedCutoff { x, d, i_dx, resolution })
    }

    /// The customary choice `d = x^(3/4)`.
    pub fn with_default_d(x: f64) -> Result<Self> {
        Self::new(x, x.powf(0.75))
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn i_dx(&self) -> f64 {
        self.i_dx
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn in_asymptotic_range(&self) -> bool {
        self.d > 1.0 && self.d < self.x / self.x.ln()
    }

    /// Below this `k* = 1/I`.
    pub fn plateau_end(&self) -> f64 {
        self.x * (-self.d / self.x).exp()
    }

    /// At and beyond this `k* = 0`.
    pub fn support_end(&self) -> f64 {
        self.x * (self.d / self.x).exp()
    }

    /// `eta(tau) = (x/d) psi0(x tau / d) / I`.
    pub fn eta(&self, tau: f64) -> f64 {
        let r = self.x / self.d;
        r * psi0(r * tau) / self.i_dx
    }

    /// `k*(y)`, an incomplete integral of `eta` up to `log(x/y)`.
    pub fn eval(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return self.i_dx.recip();
        }
        // log(x/y) = log1p((x - y)/y) keeps accuracy near y = x.
        let s = ((self.x - y) / y).ln_1p() * (self.x / self.d);
        psi0_cdf(s) / self.i_dx
    }

    /// `∫_0^∞ (k*(u) - k(u)) u^{-1/2} du`, evaluated by quadrature on `k*` itself.
    pub fn moment(&self) -> f64 {
        let opts = QuadOptions::default().with_abs_tol(1e-15 * self.x.sqrt()).with_rel_tol(1e-15);
        let lo = self.plateau_end().sqrt();
        let mid = self.x.sqrt();
        let hi = self.support_end().sqrt();
        // u = v^2: the integrand becomes 2 (k* - k)(v^2).
        let below = integrate_with_breaks(|v: f64| 2.0 * (self.eval(v * v) - 1.0), lo, mid, &[], &opts);
        let above = integrate_with_breaks(|v: f64| 2.0 * self.eval(v * v), mid, hi, &[], &opts);
        (self.i_dx.recip() - 1.0) * 2.0 * lo + below.value + above.value
    }
}

/// Free-function form of [`SmoothedCutoff::eval`].
pub fn k_star(y: f64, sc: &SmoothedCutoff) -> f64 {
    sc.eval(y)
}

type Evaluator = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Atom {
    Sharp(SharpCutoff),
    Smoothed(SmoothedCutoff),
    Custom { f: Evaluator, support: f64, variation: f64, breakpoints: Vec<f64> },
}

impl Atom {
    fn eval(&self, v: f64) -> f64 {
        match self {
            Atom::Sharp(k) => k.eval(v),
            Atom::Smoothed(k) => k.eval(v),
            Atom::Custom { f, support, .. } => {
                if v > *support {
                    0.0
                } else {
                    f(v)
                }
            }
        }
    }

    fn support(&self) -> f64 {
        match self {
            Atom::Sharp(k) => k.x(),
            Atom::Smoothed(k) => k.support_end(),
            Atom::Custom { support, .. } => *support,
        }
    }

    fn variation(&self) -> f64 {
        match self {
            Atom::Sharp(_) => 1.0,
            Atom::Smoothed(k) => k.i_dx().recip(),
            Atom::Custom { variation, .. } => *variation,
        }
    }

    fn breakpoints(&self) -> Vec<f64> {
        match self {
            Atom::Sharp(k) => vec![k.x()],
            Atom::Smoothed(k) => vec![k.plateau_end(), k.x(), k.support_end()],
            Atom::Custom { breakpoints, support, .. } => {
                let mut b = breakpoints.clone();
                b.push(*support);
                b
            }
        }
    }
}

/// A compactly supported function of bounded variation on `[0, ∞)`, kept as a linear
/// combination of known pieces so that transforms can use closed forms where they exist.
#[derive(Clone)]
pub struct TestFunction {
    atoms: Vec<(f64, Atom)>,
}

impl fmt::Debug for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<String> = self
            .atoms
            .iter()
            .map(|(c, a)| match a {
                Atom::Sharp(k) => format!("{c}*k[x={}]", k.x()),
                Atom::Smoothed(k) => format!("{c}*k*[x={}, d={}]", k.x(), k.d()),
                Atom::Custom { support, .. } => format!("{c}*custom[support={support}]"),
            })
            .collect();
        write!(f, "TestFunction({})", names.join(" + "))
    }
}

impl TestFunction {
    pub fn zero() -> Self {
        TestFunction { atoms: Vec::new() }
    }

    pub fn sharp(k: SharpCutoff) -> Self {
        TestFunction { atoms: vec![(1.0, Atom::Sharp(k))] }
    }

    pub fn smoothed(k: SmoothedCutoff) -> Self {
        TestFunction { atoms: vec![(1.0, Atom::Smoothed(k))] }
    }

    /// `k - k*` for the same `x`.
    pub fn difference(k: &SmoothedCutoff) -> Self {
        let sharp = SharpCutoff::new(k.x()).expect("validated by SmoothedCutoff");
        Self::sharp(sharp).add(&Self::smoothed(*k).scale(-1.0))
    }

    /// A caller-supplied function, treated as zero beyond `support`. `breakpoints` lists
    /// points where it is not smooth.
    pub fn custom(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        support: f64,
        variation: f64,
        breakpoints: Vec<f64>,
    ) -> Result<Self> {
        if !(support >= 0.0) || !support.is_finite() {
            return Err(Error::invalid("support bound must be finite and nonnegative"));
        }
        if !(variation >= 0.0) || !variation.is_finite() {
            return Err(Error::invalid("variation bound must be finite and nonnegative"));
        }
        Ok(TestFunction {
            atoms: vec![(1.0, Atom::Custom { f: Arc::new(f), support, variation, breakpoints })],
        })
    }

    /// A smooth bump of height one on `[center - width, center + width]`.
    pub fn bump(center: f64, width: f64) -> Result<Self> {
        if !(width > 0.0) || !(center - width >= 0.0) {
            return Err(Error::invalid("bump must have positive width and lie in [0, ∞)"));
        }
        let peak = raw_bump(0.0);
        Self::custom(
            move |v| raw_bump((v - center) / width) / peak,
            center + width,
            2.0,
            vec![center - width],
        )
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        TestFunction { atoms }
    }

    pub fn scale(&self, c: f64) -> Self {
        TestFunction { atoms: self.atoms.iter().map(|(w, a)| (w * c, a.clone())).collect() }
    }

    pub fn eval(&self, v: f64) -> f64 {
        self.atoms.iter().map(|(c, a)| c * a.eval(v)).sum()
    }

    /// Smallest `V` known to satisfy `m = 0` on `(V, ∞)`.
    pub fn support_bound(&self) -> f64 {
        self.atoms.iter().map(|(_, a)| a.support()).fold(0.0, f64::max)
    }

    pub fn variation_bound(&self) -> f64 {
        self.atoms.iter().map(|(c, a)| c.abs() * a.variation()).sum()
    }

    /// Points where the function may fail to be smooth, sorted.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b: Vec<f64> = self.atoms.iter().flat_map(|(_, a)| a.breakpoints()).collect();
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    /// Samples the declared support and variation bounds; errors if either is contradicted.
    pub fn spot_check(&self, samples: usize) -> Result<()> {
        let v_max = self.support_bound();
        let n = samples.max(2);
        for j in 1..=n {
            let v = v_max * (1.0 + j as f64 / n as f64);
            if self.eval(v) != 0.0 {
                return Err(Error::invalid(format!("test function is nonzero at {v} beyond its support")));
            }
        }
        let mut prev = self.eval(0.0);
        let mut total = 0.0;
        for j in 1..=n {
            let cur = self.eval(v_max * j as f64 / n as f64);
            total += (cur - prev).abs();
            prev = cur;
        }
        if total > self.variation_bound() * (1.0 + 1e-9) + 1e-12 {
            return Err(Error::invalid(format!(
                "sampled variation {total} exceeds declared bound {}",
                self.variation_bound()
            )));
        }
        Ok(())
    }

    pub(crate) fn sharp_part(&self) -> impl Iterator<Item = (f64, SharpCutoff)> + '_ {
        self.atoms.iter().filter_map(|(c, a)| match a {
            Atom::Sharp(k) => Some((*c, *k)),
            _ => None,
        })
    }

    fn without_sharp(&self) -> TestFunction {
        TestFunction { atoms: self.atoms.iter().filter(|(_, a)| !matches!(a, Atom::Sharp(_))).cloned().collect() }
    }
}

fn transform_opts(scale: f64) -> QuadOptions {
    QuadOptions { abs_tol: 1e-13 * scale.max(1.0), rel_tol: 1e-13, max_intervals: 20_000 }
}

/// `q_m(v) = ∫_0^∞ m(v + tau) tau^{-1/2} dtau`. Sharp pieces use `2 sqrt(x - v)`.
pub fn q_transform(m: &TestFunction, v: f64) -> Result<f64> {
    if !(v >= 0.0) {
        return Err(Error::invalid(format!("q transform needs v >= 0, got {v}")));
    }
    let closed: f64 = m.sharp_part().map(|(c, k)| c * 2.0 * (k.x() - v).max(0.0).sqrt()).sum();
    Ok(closed + q_transform_quadrature(&m.without_sharp(), v)?)
}

/// `q_m(v)` by quadrature alone, with `tau = sigma^2` removing the endpoint singularity.
pub fn q_transform_quadrature(m: &TestFunction, v: f64) -> Result<f64> {
    let top = m.support_bound();
    if v >= top {
        return Ok(0.0);
    }
    let breaks: Vec<f64> = m.breakpoints().into_iter().filter(|&b| b > v).map(|b| (b - v).sqrt()).collect();
    let r = integrate_with_breaks(|s: f64| 2.0 * m.eval(v + s * s), 0.0, (top - v).sqrt(), &breaks, &transform_opts(top.sqrt()));
    Ok(r.value)
}

/// `g_m(a) = 2 q_m(sinh^2(a/2))`.
pub fn g_transform(m: &TestFunction, a: f64) -> Result<f64> {
    let s = (0.5 * a).sinh();
    Ok(2.0 * q_transform(m, s * s)?)
}

/// Largest `a` with `g_m(a) != 0`.
pub fn g_support(m: &TestFunction) -> f64 {
    2.0 * m.support_bound().sqrt().asinh()
}

/// `h_m(r) = ∫ g_m(a) e^{ira} da = 2 ∫_0^A g_m(a) cos(ra) da`.
pub fn h_transform(m: &TestFunction, r: Complex64) -> Result<Complex64> {
    if r.im.abs() > 0.5 + 1e-12 {
        log::debug!("h transform evaluated outside the strip |Im r| <= 1/2 at r = {r}");
    }
    let top = g_support(m);
    if top == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut breaks: Vec<f64> = m.breakpoints().into_iter().map(|b| 2.0 * b.max(0.0).sqrt().asinh()).collect();
    // Split into pieces of about one period so the adaptive rule sees the oscillation.
    let period = if r.re.abs() > 1e-12 { std::f64::consts::PI / r.re.abs() } else { top };
    let pieces = (top / period).ceil().min(4096.0) as usize;
    breaks.extend((1..pieces).map(|j| top * j as f64 / pieces as f64));
    let scale = integrate_with_breaks(
        |a: f64| g_transform(m, a).map(f64::abs).unwrap_or(f64::NAN),
        0.0,
        top,
        &breaks,
        &QuadOptions::default().with_rel_tol(1e-6),
    )
    .value;
    let opts = QuadOptions { abs_tol: 1e-13 * scale.max(1.0), rel_tol: 1e-12, max_intervals: 50_000 };
    let res = integrate_with_breaks(
        |a: f64| {
            let g = g_transform(m, a).unwrap_or(f64::NAN);
            (r * a).cos() * (2.0 * g)
        },
        0.0,
        top,
        &breaks,
        &opts,
    );
    if !res.value.re.is_finite() || !res.value.im.is_finite() {
        return Err(Error::NonConvergence { context: "h transform", terms: res.evaluations });
    }
    Ok(res.value)
}

/// `M_{m,lambda}(T) = ∫ m(T / cos^2 theta) f_lambda(theta) dtheta / cos^2 theta`,
/// computed with `s = tan theta` as `2 ∫_0^S m(T(1 + s^2)) f_lambda(atan s) ds`.
pub fn m_transform(m: &TestFunction, t: &SpectralParameter<f64>, big_t: f64) -> Result<Complex64> {
    if !(big_t > 0.0) {
        return Err(Error::invalid(format!("M transform needs T > 0, got {big_t}")));
    }
    let top = m.support_bound();
    if big_t >= top {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let s_max = (top / big_t - 1.0).sqrt();
    let breaks: Vec<f64> = m
        .breakpoints()
        .into_iter()
        .filter(|&b| b > big_t)
        .map(|b| (b / big_t - 1.0).sqrt())
        .collect();
    let (a, b, c) = f_parameters(t);
    let failure = std::sync::Mutex::new(None);
    let res = integrate_with_breaks(
        |s: f64| {
            let mv = m.eval(big_t * (1.0 + s * s));
            if mv == 0.0 {
                return Complex64::new(0.0, 0.0);
            }
            match gauss_2f1(a, b, c, -s * s) {
                Ok(f) => f * (2.0 * mv),
                Err(e) => {
                    failure.lock().expect("poisoned").get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        0.0,
        s_max,
        &breaks,
        &transform_opts(s_max),
    );
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(res.value)
}

fn f_parameters(t: &SpectralParameter<f64>) -> (Complex64, Complex64, Complex64) {
    let q = Complex64::new(0.25, 0.0);
    let shift = t.it() * 0.5;
    (q + shift, q - shift, Complex64::new(0.5, 0.0))
}

/// `M_{k,lambda}(T)` for the sharp cutoff in the logarithmic form
/// `∫_0^{log(x/T)} F(a, b; 1/2; 1 - e^Y) e^Y (e^Y - 1)^{-1/2} dY`, integrated in `w = sqrt(Y)`.
pub fn m_transform_sharp_log_form(k: &SharpCutoff, t: &SpectralParameter<f64>, big_t: f64) -> Result<Complex64> {
    if !(big_t > 0.0) {
        return Err(Error::invalid(format!("M transform needs T > 0, got {big_t}")));
    }
    if big_t >= k.x() {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let w_max = (k.x() / big_t).ln().sqrt();
    let (a, b, c) = f_parameters(t);
    let failure = std::sync::Mutex::new(None);
    let res = integrate_with_breaks(
        |w: f64| {
            let y = w * w;
            let em1 = y.exp_m1();
            // 2w e^Y / sqrt(e^Y - 1), finite as w -> 0.
            let jac = if w == 0.0 { 2.0 } else { 2.0 * w * (1.0 + em1) / em1.sqrt() };
            match gauss_2f1(a, b, c, -em1) {
                Ok(f) => f * jac,
                Err(e) => {
                    failure.lock().expect("poisoned").get_or_insert(e);
                    Complex64::new(0.0, 0.0)
                }
            }
        },
        0.0,
        w_max,
        &[],
        &transform_opts(w_max),
    );
    if let Some(e) = failure.into_inner().expect("poisoned") {
        return Err(e);
    }
    Ok(res.value)
}
