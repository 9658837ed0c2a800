//! Complex gamma function by reflection plus a shifted Stirling series.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

// B_{2k} / (2k (2k-1)) for k = 1..=10.
const STIRLING: [f64; 10] = [
    1.0 / 12.0,
    -1.0 / 360.0,
    1.0 / 1260.0,
    -1.0 / 1680.0,
    1.0 / 1188.0,
    -691.0 / 360360.0,
    1.0 / 156.0,
    -3617.0 / 122400.0,
    43867.0 / 244188.0,
    -174611.0 / 125400.0,
];

// B_{2k} / (2k) for k = 1..=8.
const DIGAMMA: [f64; 8] = [
    1.0 / 12.0,
    -1.0 / 120.0,
    1.0 / 252.0,
    -1.0 / 240.0,
    1.0 / 132.0,
    -691.0 / 32760.0,
    1.0 / 12.0,
    -3617.0 / 8160.0,
];

const SHIFT_TARGET: f64 = 16.0;

fn is_nonpositive_integer<T: Real>(z: Complex<T>) -> bool {
    z.im == T::zero() && z.re <= T::zero() && z.re == z.re.round()
}

/// Stirling series for `ln Gamma(z)`, valid for `Re z >= SHIFT_TARGET`.
fn stirling_ln_gamma<T: Real>(z: Complex<T>) -> Complex<T> {
    let half = T::lit(0.5);
    let ln_2pi_half = T::lit(0.918_938_533_204_672_7);
    let mut acc = (z - half) * z.ln() - z + ln_2pi_half;
    let inv = z.inv();
    let inv2 = inv * inv;
    let mut pow = inv;
    for &c in STIRLING.iter() {
        acc += pow * T::lit(c);
        pow *= inv2;
    }
    acc
}

/// `ln Gamma(z)` for `Re z >= 1/2` (principal branch continued from the positive axis).
pub fn ln_gamma_right<T: Real>(z: Complex<T>) -> Complex<T> {
    let target = T::lit(SHIFT_TARGET);
    let mut shifted = z;
    let mut log_prod = Complex::new(T::zero(), T::zero());
    while shifted.re < target {
        log_prod += shifted.ln();
        shifted += T::one();
    }
    stirling_ln_gamma(shifted) - log_prod
}

/// Gamma function at a complex argument.
pub fn complex_gamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole { function: "gamma", at: format!("{:?}", z) });
    }
    let half = T::lit(0.5);
    if z.re < half {
        // Gamma(z) Gamma(1-z) = pi / sin(pi z)
        let pi = T::PI();
        let s = (z * pi).sin();
        let g = complex_gamma(Complex::new(T::one(), T::zero()) - z)?;
        return Ok(Complex::new(pi, T::zero()) / (s * g));
    }
    Ok(gamma_right(z))
}

/// Digamma function `Gamma'(z) / Gamma(z)`.
pub fn digamma<T: Real>(z: Complex<T>) -> Result<Complex<T>> {
    if is_nonpositive_integer(z) {
        return Err(Error::Pole { function: "digamma", at: format!("{:?}", z) });
    }
    let one = Complex::new(T::one(), T::zero());
    if z.re < T::lit(0.5) {
        // psi(1-z) - psi(z) = pi cot(pi z)
        let pi = T::PI();
        let cot = (z * pi).cos() / (z * pi).sin();
        return Ok(digamma(one - z)? - cot * pi);
    }
    let mut shifted = z;
    let mut acc = Complex::new(T::zero(), T::zero());
    while shifted.re < T::lit(SHIFT_TARGET) {
        acc -= shifted.inv();
        shifted += T::one();
    }
    let inv = shifted.inv();
    let inv2 = inv * inv;
    let mut tail = Complex::new(T::zero(), T::zero());
    let mut pow = inv2;
    for &c in DIGAMMA.iter() {
        tail += pow * T::lit(c);
        pow *= inv2;
    }
    Ok(acc + shifted.ln() - inv * T::lit(0.5) - tail)
}

fn gamma_right<T: Real>(z: Complex<T>) -> Complex<T> {
    let target = T::lit(SHIFT_TARGET);
    let mut shifted = z;
    let mut prod = Complex::new(T::one(), T::zero());
    while shifted.re < target {
        prod *= shifted;
        shifted += T::one();
    }
    stirling_ln_gamma(shifted).exp() / prod
}

/// `1 / Gamma(z)`, an entire function; zero at the poles of Gamma.
pub fn recip_gamma<T: Real>(z: Complex<T>) -> Complex<T> {
    if is_nonpositive_integer(z) {
        return Complex::new(T::zero(), T::zero());
    }
    let half = T::lit(0.5);
    if z.re < half {
        let pi = T::PI();
        let s = (z * pi).sin();
        let g = gamma_right(Complex::new(T::one(), T::zero()) - z);
        return s * g / pi;
    }
    gamma_right(z).inv()
}

#[cfg(test)]
mod tests {
    #[test]
    fn digamma_known_values() {
        let euler = 0.577_215_664_901_532_9;
        let c = |re: f64, im: f64| Complex::new(re, im);
        assert!((digamma(c(1.0, 0.0)).unwrap().re + euler).abs() < 1e-14);
        let half = digamma(c(0.5, 0.0)).unwrap().re;
        assert!((half + euler + 2.0 * 2f64.ln()).abs() < 1e-14);
        // Im psi(1 + i y) = -1/(2y) + (pi/2) coth(pi y)
        let y = 2.5;
        let want = -0.5 / y + 0.5 * std::f64::consts::PI / (std::f64::consts::PI * y).tanh();
        assert!((digamma(c(1.0, y)).unwrap().im - want).abs() < 1e-13);
        // Recurrence through the reflection branch.
        let z = c(-2.3, 0.7);
        let d = digamma(z + 1.0).unwrap() - digamma(z).unwrap() - z.inv();
        assert!(d.norm() < 1e-12);
    }

    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64, im: f64) -> Complex<f64> {
        Complex::new(re, im)
    }

    #[test]
    fn classical_values() {
        let g = complex_gamma(c(0.5, 0.0)).unwrap();
        assert!((g.re - PI.sqrt()).abs() < 1e-14 && g.im.abs() < 1e-15);
        let g = complex_gamma(c(1.0, 0.0)).unwrap();
        assert!((g.re - 1.0).abs() < 1e-14);
        let g = complex_gamma(c(0.0, 1.0)).unwrap();
        let expected = PI / PI.sinh();
        assert!((g.norm_sqr() - expected).abs() < 1e-13 * expected);
        assert!((expected - 0.2720).abs() < 1e-4);
    }

    #[test]
    fn factorials_and_reflection() {
        let mut f = 1.0;
        for n in 1..30 {
            let g = complex_gamma(c(n as f64, 0.0)).unwrap();
            assert!((g.re - f).abs() < 1e-13 * f, "n = {n}");
            f *= n as f64;
        }
        // Gamma(-1/2) = -2 sqrt(pi)
        let g = complex_gamma(c(-0.5, 0.0)).unwrap();
        assert!((g.re + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!(complex_gamma(c(-3.0, 0.0)).is_err());
        assert_eq!(recip_gamma(c(-3.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn recurrence_off_axis() {
        for &(x, y) in &[(0.3, 7.0), (-4.2, 2.5), (25.0, -40.0), (1.0, 30.0)] {
            let z = c(x, y);
            let lhs = complex_gamma(z + 1.0).unwrap();
            let rhs = z * complex_gamma(z).unwrap();
            assert!((lhs - rhs).norm() <= 1e-12 * lhs.norm(), "{z}");
            let prod = recip_gamma(z) * complex_gamma(z).unwrap();
            assert!((prod - c(1.0, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn abs_gamma_on_imaginary_axis() {
        for &t in &[0.5, 3.0, 12.0, 45.0] {
            let g = complex_gamma(c(0.0, t)).unwrap();
            let expected = PI / (t * (PI * t).sinh());
            assert!((g.norm_sqr() - expected).abs() <= 1e-12 * expected, "t = {t}");
        }
    }
}
