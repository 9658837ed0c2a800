//! Special functions: complex gamma, Riemann zeta, Gauss hypergeometric, and the two
//! eigenfunction families `f_lambda` (even in the angle to a geodesic) and `g_lambda`
//! (radial about a point).

mod gamma;
mod hyper;
mod zeta;

pub use gamma::{complex_gamma, ln_gamma_right, recip_gamma};
pub use hyper::{gauss_2f1, series as hypergeometric_series, SERIES_TERM_CAP};
pub use zeta::{riemann_zeta, riemann_zeta_with, ZetaConfig};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Spectral parameter `t` with `lambda = -1/4 - t^2 = s(s-1)`, `s = 1/2 + it`.
///
/// Either `t` is real (tempered), or `t = -i sigma` with `sigma = it` in `(0, 1/2]`
/// (exceptional or residual). Purely imaginary input of either sign is accepted and stored
/// with `it > 0`; every function of `t` used here is even.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralParameter<T> {
    t: Complex<T>,
}

impl<T: Real> SpectralParameter<T> {
    pub fn new(t: Complex<T>) -> Result<Self> {
        if t.im == T::zero() {
            return Self::tempered(t.re);
        }
        if t.re == T::zero() {
            return Self::exceptional(t.im.abs());
        }
        Err(Error::invalid(format!(
            "spectral parameter must be real or purely imaginary, got {:?}",
            t
        )))
    }

    pub fn tempered(t: T) -> Result<Self> {
        if !t.is_finite() {
            return Err(Error::invalid("spectral parameter must be finite"));
        }
        Ok(SpectralParameter { t: Complex::new(t, T::zero()) })
    }

    /// `sigma = it = s - 1/2` in `(0, 1/2]`.
    pub fn exceptional(sigma: T) -> Result<Self> {
        if !(sigma > T::zero() && sigma <= T::lit(0.5)) {
            return Err(Error::invalid(format!("it must lie in (0, 1/2], got {:?}", sigma)));
        }
        Ok(SpectralParameter { t: Complex::new(T::zero(), -sigma) })
    }

    /// The parameter for `lambda = 0` (`s = 1`).
    pub fn constant() -> Self {
        SpectralParameter { t: Complex::new(T::zero(), -T::lit(0.5)) }
    }

    /// From `s` on the critical line or on `(1/2, 1]`.
    pub fn from_s(s: Complex<T>) -> Result<Self> {
        let half = T::lit(0.5);
        if s.re == half {
            return Self::tempered(s.im);
        }
        if s.im == T::zero() {
            return Self::exceptional(s.re - half);
        }
        Err(Error::invalid(format!("s = {:?} is neither tempered nor residual", s)))
    }

    pub fn t(&self) -> Complex<T> {
        self.t
    }

    /// `it` (real for both admissible families only when `t` is imaginary).
    pub fn it(&self) -> Complex<T> {
        self.t * Complex::i()
    }

    pub fn s(&self) -> Complex<T> {
        Complex::new(T::lit(0.5), T::zero()) + self.it()
    }

    /// `lambda = -1/4 - t^2`, always real for admissible `t`.
    pub fn lambda(&self) -> T {
        (-(self.t * self.t)).re - T::lit(0.25)
    }

    pub fn is_tempered(&self) -> bool {
        self.t.im == T::zero()
    }

    /// `|t|`, the size entering polynomial-in-`t` bounds.
    pub fn magnitude(&self) -> T {
        self.t.norm()
    }
}

/// `f_lambda(theta) = F(1/4 + it/2, 1/4 - it/2; 1/2; -tan^2 theta)`, the even solution of
/// `f'' = lambda f / cos^2 theta` with `f(0) = 1`.
pub fn f_lambda<T: Real>(theta: T, t: &SpectralParameter<T>) -> Result<Complex<T>> {
    let half_pi = T::FRAC_PI_2();
    if !(theta.abs() < half_pi) {
        return Err(Error::invalid(format!("theta must lie in (-pi/2, pi/2), got {:?}", theta)));
    }
    let tan = theta.tan();
    f_lambda_tan2(tan * tan, t)
}

/// `f_lambda` as a function of `tan^2 theta`; avoids the round trip through the angle.
pub fn f_lambda_tan2<T: Real>(tan2: T, t: &SpectralParameter<T>) -> Result<Complex<T>> {
    let quarter = Complex::new(T::lit(0.25), T::zero());
    let shift = t.it() * T::lit(0.5);
    gauss_2f1(quarter + shift, quarter - shift, Complex::new(T::lit(0.5), T::zero()), -tan2)
}

/// `g_lambda(r) = F(3/4 + it/2, 3/4 - it/2; 1; -sinh^2 r) cosh r`, the solution of
/// `g'' + coth(r) g' = lambda g` with `g(0) = 1`.
pub fn g_lambda<T: Real>(r: T, t: &SpectralParameter<T>) -> Result<Complex<T>> {
    if !(r >= T::zero()) {
        return Err(Error::invalid(format!("radius must be nonnegative, got {:?}", r)));
    }
    let three_q = Complex::new(T::lit(0.75), T::zero());
    let shift = t.it() * T::lit(0.5);
    let sh = r.sinh();
    let f = gauss_2f1(three_q + shift, three_q - shift, Complex::new(T::one(), T::zero()), -sh * sh)?;
    Ok(f * r.cosh())
}

// Fourth-order central differences built from steps h and 2h.
fn second_difference(f: impl Fn(f64) -> f64, x: f64, h: f64) -> (f64, f64) {
    let (p1, m1, p2, m2, c) = (f(x + h), f(x - h), f(x + 2.0 * h), f(x - 2.0 * h), f(x));
    let d1 = (8.0 * (p1 - m1) - (p2 - m2)) / (12.0 * h);
    let d2 = (16.0 * (p1 + m1) - (p2 + m2) - 30.0 * c) / (12.0 * h * h);
    (d1, d2)
}

/// Finite-difference residual of `f'' = (lambda / cos^2) f` at `theta`, relative to the
/// summed size of both sides.
pub fn f_ode_residual(theta: f64, t: &SpectralParameter<f64>, step: f64) -> Result<f64> {
    for k in [-2.0, -1.0, 1.0, 2.0] {
        f_lambda(theta + k * step, t)?;
    }
    let f = |x: f64| f_lambda(x, t).map_or(f64::NAN, |v| v.re);
    let (_, d2) = second_difference(f, theta, step);
    let value = f_lambda(theta, t)?.re;
    let rhs = t.lambda() / theta.cos().powi(2) * value;
    Ok((d2 - rhs).abs() / (d2.abs() + rhs.abs()).max(f64::MIN_POSITIVE))
}

/// Finite-difference residual of `g'' + coth(r) g' = lambda g` at `r > 0`, relative to the
/// summed size of the three terms.
pub fn g_ode_residual(r: f64, t: &SpectralParameter<f64>, step: f64) -> Result<f64> {
    for k in [-2.0, -1.0, 1.0, 2.0] {
        g_lambda(r + k * step, t)?;
    }
    let g = |x: f64| g_lambda(x, t).map_or(f64::NAN, |v| v.re);
    let (d1, d2) = second_difference(g, r, step);
    let value = g_lambda(r, t)?.re;
    let drift = d1 / r.tanh();
    let rhs = t.lambda() * value;
    let scale = d2.abs() + drift.abs() + rhs.abs();
    Ok((d2 + drift - rhs).abs() / scale.max(f64::MIN_POSITIVE))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_t() -> Vec<SpectralParameter<f64>> {
        vec![
            SpectralParameter::tempered(0.0).unwrap(),
            SpectralParameter::tempered(1.0).unwrap(),
            SpectralParameter::tempered(5.0).unwrap(),
            SpectralParameter::tempered(9.5337).unwrap(),
            SpectralParameter::new(Complex::new(0.0, 0.25)).unwrap(),
        ]
    }

    #[test]
    fn parameter_validation() {
        assert!(SpectralParameter::new(Complex::new(1.0, 1.0)).is_err());
        assert!(SpectralParameter::<f64>::exceptional(0.6).is_err());
        assert!(SpectralParameter::<f64>::exceptional(0.0).is_err());
        let p = SpectralParameter::<f64>::new(Complex::new(0.0, 0.5)).unwrap();
        assert_eq!(p, SpectralParameter::constant());
        assert!(p.lambda().abs() < 1e-15);
        assert!((p.s().re - 1.0).abs() < 1e-15);
        let q = SpectralParameter::<f64>::tempered(2.0).unwrap();
        assert!((q.lambda() + 4.25).abs() < 1e-15);
        let r = SpectralParameter::<f64>::from_s(Complex::new(0.75, 0.0)).unwrap();
        assert!((r.it().re - 0.25).abs() < 1e-15);
    }

    #[test]
    fn normalization_at_origin() {
        for t in grid_t() {
            assert!((f_lambda(0.0, &t).unwrap() - 1.0).norm() < 1e-15);
            assert!((g_lambda(0.0, &t).unwrap() - 1.0).norm() < 1e-15);
        }
    }

    #[test]
    fn lambda_zero_is_constant() {
        let t = SpectralParameter::constant();
        for &th in &[-1.5, -0.3, 0.9, 1.55] {
            assert!((f_lambda(th, &t).unwrap() - 1.0).norm() < 1e-13);
        }
        for &r in &[0.2, 1.0, 4.0, 9.0] {
            assert!((g_lambda(r, &t).unwrap() - 1.0).norm() < 1e-12, "r = {r}");
        }
    }

    #[test]
    fn f_is_even_and_real() {
        for t in grid_t() {
            let a = f_lambda(0.77, &t).unwrap();
            let b = f_lambda(-0.77, &t).unwrap();
            assert_eq!(a, b);
            assert!(a.im.abs() < 1e-12 * (1.0 + a.re.abs()));
        }
    }

    #[test]
    fn ode_residual_examples() {
        let t3 = SpectralParameter::tempered(3.0).unwrap();
        assert!(f_ode_residual(0.8, &t3, 1e-4).unwrap() < 1e-6);
        let t95 = SpectralParameter::tempered(9.5).unwrap();
        assert!(g_ode_residual(1.3, &t95, 1e-4).unwrap() < 1e-6);
    }
}
