//! Riemann zeta function by Euler–Maclaurin summation.

use std::sync::OnceLock;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of even Bernoulli numbers kept in the table (`B_2 ... B_30`).
const TABLE_DEPTH: usize = 15;

#[derive(Clone, Copy, Debug)]
pub struct ZetaConfig {
    /// Terms summed directly before the Euler–Maclaurin tail (raised automatically with `|Im s|`).
    pub terms: usize,
    /// Number of Bernoulli correction terms, at most 15.
    pub depth: usize,
}

impl Default for ZetaConfig {
    fn default() -> Self {
        ZetaConfig { terms: 24, depth: 12 }
    }
}

#[derive(Clone, Copy)]
struct Frac {
    num: i128,
    den: i128,
}

impl Frac {
    fn new(num: i128, den: i128) -> Self {
        let g = num_integer::gcd(num, den).max(1);
        let s = if den < 0 { -1 } else { 1 };
        Frac { num: s * num / g, den: s * den / g }
    }
    fn add(self, o: Frac) -> Frac {
        let g = num_integer::gcd(self.den, o.den);
        let l = self.den / g * o.den;
        Frac::new(self.num * (l / self.den) + o.num * (l / o.den), l)
    }
    fn scale(self, k: i128) -> Frac {
        Frac::new(self.num * k, self.den)
    }
}

/// `B_{2k}` for `k = 1..=TABLE_DEPTH`, from the exact recurrence `sum_j C(n+1,j) B_j = 0`.
fn bernoulli_even() -> &'static [f64; TABLE_DEPTH] {
    static TABLE: OnceLock<[f64; TABLE_DEPTH]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let n_max = 2 * TABLE_DEPTH;
        let mut b: Vec<Frac> = vec![Frac::new(1, 1)];
        for n in 1..=n_max {
            let mut binom: i128 = 1; // C(n+1, 0)
            let mut acc = Frac::new(0, 1);
            for (j, bj) in b.iter().enumerate() {
                acc = acc.add(bj.scale(binom));
                binom = binom * (n as i128 + 1 - j as i128) / (j as i128 + 1);
            }
            b.push(Frac::new(-acc.num, acc.den * (n as i128 + 1)));
        }
        let mut out = [0.0; TABLE_DEPTH];
        for k in 1..=TABLE_DEPTH {
            let f = b[2 * k];
            out[k - 1] = f.num as f64 / f.den as f64;
        }
        out
    })
}

/// Riemann zeta at complex `s != 1`, tuned for `Re s in [-1, 3]`, `|Im s| <= 50`.
pub fn riemann_zeta<T: Real>(s: Complex<T>) -> Result<Complex<T>> {
    riemann_zeta_with(s, &ZetaConfig::default())
}

pub fn riemann_zeta_with<T: Real>(s: Complex<T>, cfg: &ZetaConfig) -> Result<Complex<T>> {
    let one = Complex::new(T::one(), T::zero());
    if (s - one).norm() < T::EPS {
        return Err(Error::Pole { function: "zeta", at: format!("{:?}", s) });
    }
    let depth = cfg.depth.min(TABLE_DEPTH);
    let n = cfg.terms.max(2) + s.im.abs().to_f64_lossy().ceil() as usize;
    let nt = T::lit(n as f64);

    let mut sum = Complex::new(T::zero(), T::zero());
    for k in 1..n {
        sum += (-s * T::lit(k as f64).ln()).exp();
    }
    let n_pow = (-s * nt.ln()).exp(); // N^{-s}
    sum += n_pow * nt / (s - one) + n_pow * T::lit(0.5);

    // sum_k B_2k/(2k)! s(s+1)...(s+2k-2) N^{-s-2k+1}
    let bern = bernoulli_even();
    let mut rising = s; // s (s+1) ... (s + 2k - 2)
    let mut fact = T::lit(2.0); // (2k)!
    let mut npow = n_pow / nt; // N^{-s-2k+1}
    let inv_n2 = (nt * nt).recip();
    for k in 1..=depth {
        sum += rising * npow * (T::lit(bern[k - 1]) / fact);
        let kk = T::lit(2.0 * k as f64);
        rising = rising * (s + kk - T::one()) * (s + kk);
        fact = fact * (kk + T::one()) * (kk + T::lit(2.0));
        npow = npow * inv_n2;
    }
    Ok(sum)
}
