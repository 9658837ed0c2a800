//! Gauss hypergeometric function `2F1(a, b; c; x)` for complex parameters and real `x <= 0`.
//!
//! * `-1/2 <= x <= 0`: the defining power series.
//! * `-8 <= x < -1/2`: Pfaff, `F(a,b;c;x) = (1-x)^(-a) F(a, c-b; c; x/(x-1))`, argument in `(1/3, 8/9]`.
//! * `x < -8`: the `1/(1-x)` connection formula, argument below `1/9`. When `b - a` is within a
//!   small distance of an integer the formula degenerates; there the value is obtained by
//!   polynomial interpolation in `b` through nodes placed off the degenerate point.

use num_complex::Complex;

use super::gamma::recip_gamma;
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const SERIES_TERM_CAP: usize = 100_000;
const PFAFF_LIMIT: f64 = -8.0;
const CONDITION_SWITCH: f64 = 100.0;
const INTERP_NODES: [f64; 8] = [-4.0, -3.0, -2.0, -1.0, 1.0, 2.0, 3.0, 4.0];

type C<T> = Complex<T>;

fn is_nonpositive_integer<T: Real>(z: C<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round()
}

/// Sum of the hypergeometric series at `|z| < 1`.
pub fn series<T: Real>(a: C<T>, b: C<T>, c: C<T>, z: T) -> Result<C<T>> {
    series_tracked(a, b, c, z).map(|(s, _)| s)
}

/// Series sum together with the largest term magnitude seen, a proxy for cancellation.
fn series_tracked<T: Real>(a: C<T>, b: C<T>, c: C<T>, z: T) -> Result<(C<T>, T)> {
    let one = T::one();
    let mut term = C::new(one, T::zero());
    let mut sum = term;
    let mut largest = one;
    let eps = T::EPS * T::lit(0.5);
    for n in 0..SERIES_TERM_CAP {
        let nf = T::lit(n as f64);
        let ratio = (a + nf) * (b + nf) / ((c + nf) * (nf + one)) * z;
        term = term * ratio;
        sum += term;
        let tn = term.norm();
        largest = largest.max(tn);
        if (tn <= eps * sum.norm() && ratio.norm() < one) || tn == T::zero() {
            return Ok((sum, largest));
        }
    }
    Err(Error::NonConvergence { context: "hypergeometric series", terms: SERIES_TERM_CAP })
}

/// Amplification of rounding error: summed magnitudes over the magnitude of the result.
fn condition<T: Real>(value: C<T>, magnitude: T) -> T {
    let v = value.norm();
    if v == T::zero() {
        T::infinity()
    } else {
        magnitude / v
    }
}

/// `2F1(a, b; c; x)` for real `x <= 0`.
pub fn gauss_2f1<T: Real>(a: C<T>, b: C<T>, c: C<T>, x: T) -> Result<C<T>> {
    if x > T::zero() {
        return Err(Error::invalid(format!("2F1 argument must be <= 0, got {:?}", x)));
    }
    if is_nonpositive_integer(c) {
        return Err(Error::Pole { function: "2F1", at: format!("c = {:?}", c) });
    }
    let one = C::new(T::one(), T::zero());
    if x == T::zero() || a.norm() == T::zero() || b.norm() == T::zero() {
        return Ok(one);
    }
    // Terminating series are polynomials; evaluate them directly at any x.
    if is_nonpositive_integer(a) || is_nonpositive_integer(b) {
        return polynomial(a, b, c, x);
    }
    if x >= T::lit(-0.5) {
        return series(a, b, c, x);
    }
    if x >= T::lit(PFAFF_LIMIT) {
        let w = x / (x - T::one());
        let pre = (C::new(T::one() - x, T::zero()).ln() * (-a)).exp();
        let (f, largest) = series_tracked(a, c - b, c, w)?;
        let pfaff = pre * f;
        let cond = condition(f, largest);
        if cond <= T::lit(CONDITION_SWITCH) {
            return Ok(pfaff);
        }
        // Large parameters make the Pfaff series cancel heavily; the connection formula is
        // usually much better conditioned there.
        return match connection(a, b, c, x) {
            Ok((alt, alt_cond)) if alt_cond < cond => Ok(alt),
            _ => Ok(pfaff),
        };
    }
    connection(a, b, c, x).map(|(v, _)| v)
}

fn polynomial<T: Real>(a: C<T>, b: C<T>, c: C<T>, x: T) -> Result<C<T>> {
    let one = T::one();
    let mut term = C::new(one, T::zero());
    let mut sum = term;
    for n in 0..SERIES_TERM_CAP {
        let nf = T::lit(n as f64);
        term = term * (a + nf) * (b + nf) / ((c + nf) * (nf + one)) * x;
        if term.norm() == T::zero() {
            return Ok(sum);
        }
        sum += term;
    }
    Err(Error::NonConvergence { context: "terminating hypergeometric series", terms: SERIES_TERM_CAP })
}

fn connection<T: Real>(a: C<T>, b: C<T>, c: C<T>, x: T) -> Result<(C<T>, T)> {
    let big_l = (T::one() - x).ln();
    let h = T::lit(0.01).min(T::lit(0.05) / big_l);
    let diff = b - a;
    let m = diff.re.round();
    let e = diff - C::new(m, T::zero());
    let ca = c - a;
    let ca_integral = ca.im == T::zero() && ca.re == ca.re.round();
    if m == T::zero() && e.norm() == T::zero() && !ca_integral {
        return equal_parameters(a, c, x);
    }
    if e.norm() < h {
        // Lagrange interpolation in b through nodes a + m + k h.
        let mut acc = C::new(T::zero(), T::zero());
        let mut magnitude = T::zero();
        for (i, &ki) in INTERP_NODES.iter().enumerate() {
            let node_i = h * T::lit(ki);
            let bi = a + C::new(m + node_i, T::zero());
            let (fi, mi) = connection_raw(a, bi, c, x)?;
            let mut basis = C::new(T::one(), T::zero());
            for (j, &kj) in INTERP_NODES.iter().enumerate() {
                if i != j {
                    let node_j = h * T::lit(kj);
                    basis = basis * (e - node_j) / (node_i - node_j);
                }
            }
            acc += fi * basis;
            magnitude = magnitude + mi * basis.norm();
        }
        return Ok((acc, condition(acc, magnitude)));
    }
    let (v, mag) = connection_raw(a, b, c, x)?;
    Ok((v, condition(v, mag)))
}

/// Logarithmic large-argument expansion for `b = a`, `x < -1`.
fn equal_parameters<T: Real>(a: C<T>, c: C<T>, x: T) -> Result<(C<T>, T)> {
    use super::gamma::digamma;
    let one = T::one();
    let ln_mx = (-x).ln();
    let z_inv = x.recip();
    let coeff = super::gamma::complex_gamma(c)? * recip_gamma(a) * recip_gamma(c - a);
    let pre = coeff * (C::new(ln_mx, T::zero()) * (-a)).exp();
    let mut psi_n1 = C::new(-T::lit(0.577_215_664_901_532_9), T::zero());
    let mut psi_an = digamma(a)?;
    let mut psi_can = digamma(c - a)?;
    let mut term = C::new(one, T::zero());
    let mut sum = C::new(T::zero(), T::zero());
    let mut magnitude = T::zero();
    let eps = T::EPS * T::lit(0.5);
    for n in 0..SERIES_TERM_CAP {
        let nf = T::lit(n as f64);
        let piece = term * (psi_n1 * T::lit(2.0) - psi_an - psi_can + ln_mx);
        sum += piece;
        magnitude = magnitude + piece.norm();
        if piece.norm() <= eps * sum.norm() && n > 2 {
            let value = pre * sum;
            return Ok((value, condition(value, pre.norm() * magnitude)));
        }
        term = term * (a + nf) * (a - c + nf + one) / ((nf + one) * (nf + one)) * z_inv;
        psi_n1 += (nf + one).recip();
        psi_an += (a + nf).inv();
        // psi(w - 1) = psi(w) - 1 / (w - 1)
        psi_can -= (c - a - nf - one).inv();
    }
    Err(Error::NonConvergence { context: "hypergeometric log expansion", terms: SERIES_TERM_CAP })
}

/// Connection formula value and the summed magnitude of its parts.
fn connection_raw<T: Real>(a: C<T>, b: C<T>, c: C<T>, x: T) -> Result<(C<T>, T)> {
    let one = C::new(T::one(), T::zero());
    let w = (T::one() - x).recip();
    let log_base = C::new(T::one() - x, T::zero()).ln();
    let gc = super::gamma::complex_gamma(c)?;
    let term = |p: C<T>, q: C<T>| -> Result<(C<T>, T)> {
        // Gamma(c) Gamma(q-p) / (Gamma(q) Gamma(c-p)) (1-x)^(-p) F(p, c-q; p-q+1; w)
        let coeff = gc * super::gamma::complex_gamma(q - p)? * recip_gamma(q) * recip_gamma(c - p);
        if coeff.norm() == T::zero() {
            return Ok((C::new(T::zero(), T::zero()), T::zero()));
        }
        let pre = (log_base * (-p)).exp();
        let (f, largest) = series_tracked(p, c - q, p - q + one, w)?;
        Ok((coeff * pre * f, (coeff * pre).norm() * largest))
    };
    let (t1, m1) = term(a, b)?;
    let (t2, m2) = term(b, a)?;
    Ok((t1 + t2, m1 + m2))
}
