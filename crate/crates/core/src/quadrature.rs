//! One-dimensional quadrature: globally adaptive Gauss–Kronrod (7/15) and fixed Gauss–Legendre rules.
//!
//! Integrands with endpoint singularities are expected to be handled by a change of variables at
//! the call site; integrands with interior jumps or kinks should pass their breakpoints.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use num_complex::Complex;
use num_traits::Zero;

use crate::scalar::Real;

/// Values that can be integrated: real scalars and complex numbers over them.
pub trait QuadValue<T: Real>:
    Copy + Zero + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> + Send + Sync
{
    fn magnitude(&self) -> T;
}

impl<T: Real> QuadValue<T> for T {
    #[inline]
    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> QuadValue<T> for Complex<T> {
    #[inline]
    fn magnitude(&self) -> T {
        self.norm()
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_intervals: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { abs_tol: 1e-11, rel_tol: 1e-12, max_intervals: 4000 }
    }
}

impl QuadOptions {
    pub fn with_abs_tol(mut self, tol: f64) -> Self {
        self.abs_tol = tol;
        self
    }

    pub fn with_rel_tol(mut self, tol: f64) -> Self {
        self.rel_tol = tol;
        self
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadResult<V, T> {
    pub value: V,
    pub error: T,
    pub evaluations: usize,
    pub converged: bool,
}

// Kronrod 15-point abscissae (positive half, descending) and weights; Gauss 7-point weights.
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

fn gk15<T: Real, V: QuadValue<T>, F: Fn(T) -> V>(f: &F, a: T, b: T) -> (V, T) {
    let half = T::lit(0.5);
    let center = half * (a + b);
    let h = half * (b - a);
    let fc = f(center);
    let mut kronrod = fc * T::lit(WGK[7]);
    let mut gauss = fc * T::lit(WG[3]);
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let dx = h * T::lit(x);
        let s = f(center - dx) + f(center + dx);
        kronrod = kronrod + s * T::lit(w);
        if j % 2 == 1 {
            gauss = gauss + s * T::lit(WG[j / 2]);
        }
    }
    let value = kronrod * h;
    let err = ((kronrod - gauss) * h).magnitude();
    (value, err)
}

struct Segment<T, V> {
    a: T,
    b: T,
    value: V,
    error: T,
}

impl<T: Real, V> PartialEq for Segment<T, V> {
    fn eq(&self, o: &Self) -> bool {
        self.error == o.error
    }
}
impl<T: Real, V> Eq for Segment<T, V> {}
impl<T: Real, V> PartialOrd for Segment<T, V> {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}
impl<T: Real, V> Ord for Segment<T, V> {
    fn cmp(&self, o: &Self) -> Ordering {
        self.error.partial_cmp(&o.error).unwrap_or(Ordering::Equal)
    }
}

/// Globally adaptive integration of `f` over `[a, b]`.
pub fn integrate<T, V, F>(f: F, a: T, b: T, opts: &QuadOptions) -> QuadResult<V, T>
where
    T: Real,
    V: QuadValue<T>,
    F: Fn(T) -> V,
{
    integrate_with_breaks(f, a, b, &[], opts)
}

/// Adaptive integration with the interval pre-split at the given interior points.
pub fn integrate_with_breaks<T, V, F>(
    f: F,
    a: T,
    b: T,
    breaks: &[T],
    opts: &QuadOptions,
) -> QuadResult<V, T>
where
    T: Real,
    V: QuadValue<T>,
    F: Fn(T) -> V,
{
    let (lo, hi, sign) = if b >= a { (a, b, T::one()) } else { (b, a, -T::one()) };
    if hi == lo {
        return QuadResult { value: V::zero(), error: T::zero(), evaluations: 0, converged: true };
    }
    let mut cuts: Vec<T> = breaks.iter().copied().filter(|&p| p > lo && p < hi).collect();
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap_or(Ordering::Equal));
    cuts.dedup();
    let mut edges = Vec::with_capacity(cuts.len() + 2);
    edges.push(lo);
    edges.extend(cuts);
    edges.push(hi);

    let mut heap = BinaryHeap::new();
    let mut total = V::zero();
    let mut total_err = T::zero();
    let mut evaluations = 0;
    for w in edges.windows(2) {
        let (v, e) = gk15(&f, w[0], w[1]);
        evaluations += 15;
        total = total + v;
        total_err = total_err + e;
        heap.push(Segment { a: w[0], b: w[1], value: v, error: e });
    }

    let abs_tol = T::lit(opts.abs_tol);
    let rel_tol = T::lit(opts.rel_tol);
    let min_width = (hi - lo) * T::EPS * T::lit(16.0);
    let mut converged = false;
    while heap.len() < opts.max_intervals {
        if total_err <= abs_tol.max(rel_tol * total.magnitude()) {
            converged = true;
            break;
        }
        let Some(seg) = heap.pop() else { break };
        if seg.b - seg.a <= min_width {
            heap.push(seg);
            break;
        }
        let mid = T::lit(0.5) * (seg.a + seg.b);
        let (v1, e1) = gk15(&f, seg.a, mid);
        let (v2, e2) = gk15(&f, mid, seg.b);
        evaluations += 30;
        total = total - seg.value + v1 + v2;
        total_err = total_err - seg.error + e1 + e2;
        heap.push(Segment { a: seg.a, b: mid, value: v1, error: e1 });
        heap.push(Segment { a: mid, b: seg.b, value: v2, error: e2 });
    }
    if !converged && total_err <= abs_tol.max(rel_tol * total.magnitude()) {
        converged = true;
    }
    // Re-sum to shed the drift of the running total.
    let value = heap.iter().fold(V::zero(), |acc, s| acc + s.value);
    let error = heap.iter().fold(T::zero(), |acc, s| acc + s.error);
    QuadResult { value: value * sign, error, evaluations, converged }
}

/// Gauss–Legendre rule on `[-1, 1]`.
#[derive(Clone, Debug)]
pub struct GaussLegendre<T> {
    pub nodes: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> GaussLegendre<T> {
    /// Nodes by Newton iteration on the three-term recurrence.
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = n as f64;
        for i in 0..(n + 1) / 2 {
            // Tricomi initial guess
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = T::lit(-x);
            nodes[n - 1 - i] = T::lit(x);
            weights[i] = T::lit(w);
            weights[n - 1 - i] = T::lit(w);
        }
        if n % 2 == 1 {
            nodes[n / 2] = T::zero();
        }
        GaussLegendre { nodes, weights }
    }

    /// Apply the rule on `[a, b]`.
    pub fn integrate<V: QuadValue<T>, F: Fn(T) -> V>(&self, f: F, a: T, b: T) -> V {
        let half = T::lit(0.5);
        let c = half * (a + b);
        let h = half * (b - a);
        let mut acc = V::zero();
        for (&x, &w) in self.nodes.iter().zip(&self.weights) {
            acc = acc + f(c + h * x) * w;
        }
        acc * h
    }

    /// Nodes and weights mapped onto `[a, b]`.
    pub fn mapped(&self, a: T, b: T) -> impl Iterator<Item = (T, T)> + '_ {
        let half = T::lit(0.5);
        let c = half * (a + b);
        let h = half * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (c + h * x, w * h))
    }

    /// Composite rule over `panels` equal sub-intervals.
    pub fn composite<V: QuadValue<T>, F: Fn(T) -> V>(&self, f: F, a: T, b: T, panels: usize) -> V {
        let panels = panels.max(1);
        let step = (b - a) / T::lit(panels as f64);
        (0..panels).fold(V::zero(), |acc, k| {
            let lo = a + step * T::lit(k as f64);
            acc + self.integrate(&f, lo, lo + step)
        })
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}
