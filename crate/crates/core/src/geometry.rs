//! Points of the upper half-plane, Möbius action, the point-pair invariant and hyperbolic distance.
//!
//! Two matrix representations are provided: [`ModularElement`] with exact integer entries for
//! PSL(2,Z), and [`MobiusMatrix`] with floating entries for groups given numerically.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// A point `x + iy` with `y > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Point<T> {
    x: T,
    y: T,
}

impl<T: Real> Point<T> {
    pub fn new(x: T, y: T) -> Result<Self> {
        if !(y > T::zero()) || !x.is_finite() || !y.is_finite() {
            return Err(Error::invalid(format!(
                "point must lie in the upper half-plane, got ({:?}, {:?})",
                x, y
            )));
        }
        Ok(Point { x, y })
    }

    /// The point `i`.
    pub fn i() -> Self {
        Point { x: T::zero(), y: T::one() }
    }

    /// Construct without validation. Callers guarantee `y > 0`.
    #[inline]
    pub(crate) fn new_unchecked(x: T, y: T) -> Self {
        debug_assert!(y > T::zero());
        Point { x, y }
    }

    #[inline]
    pub fn x(&self) -> T {
        self.x
    }

    #[inline]
    pub fn y(&self) -> T {
        self.y
    }

    /// Reflection `z -> -conj(z)`, which normalizes PSL(2,Z).
    pub fn mirrored(&self) -> Self {
        Point { x: -self.x, y: self.y }
    }
}

impl<T: Real> fmt::Display for Point<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}+{:?}i", self.x, self.y)
    }
}

/// `u(z,w) = |z-w|^2 / (4 Im z Im w)`.
#[inline]
pub fn point_pair_invariant<T: Real>(z: &Point<T>, w: &Point<T>) -> T {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    (dx * dx + dy * dy) / (T::lit(4.0) * z.y * w.y)
}

/// Hyperbolic distance, from `cosh rho = 2u + 1`.
///
/// Evaluated as `2 asinh(sqrt(u))` so that small distances keep full relative accuracy.
#[inline]
pub fn distance<T: Real>(z: &Point<T>, w: &Point<T>) -> T {
    T::lit(2.0) * point_pair_invariant(z, w).sqrt().asinh()
}

/// Anything that acts on the upper half-plane by a linear fractional transformation.
pub trait Mobius<T: Real> {
    fn apply(&self, z: &Point<T>) -> Point<T>;
}

/// An element of PSL(2,Z) stored with the canonical sign: `a > 0`, or `a = 0` and `c > 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModularElement {
    pub(crate) a: i64,
    pub(crate) b: i64,
    pub(crate) c: i64,
    pub(crate) d: i64,
}

impl ModularElement {
    pub const IDENTITY: ModularElement = ModularElement { a: 1, b: 0, c: 0, d: 1 };
    /// `z -> z + 1`.
    pub const T: ModularElement = ModularElement { a: 1, b: 1, c: 0, d: 1 };
    /// `z -> -1/z`.
    pub const S: ModularElement = ModularElement { a: 0, b: -1, c: 1, d: 0 };

    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::invalid(format!(
                "determinant of ({a} {b}; {c} {d}) is {det}, expected 1"
            )));
        }
        Ok(Self::canonical(a, b, c, d))
    }

    /// Sign-canonicalize entries already known to have determinant one.
    #[inline]
    pub(crate) fn canonical(a: i64, b: i64, c: i64, d: i64) -> Self {
        if a > 0 || (a == 0 && c > 0) {
            ModularElement { a, b, c, d }
        } else {
            ModularElement { a: -a, b: -b, c: -c, d: -d }
        }
    }

    pub fn translation(n: i64) -> Self {
        ModularElement { a: 1, b: n, c: 0, d: 1 }
    }

    pub fn entries(&self) -> [i64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    /// Absolute value of the trace, which is well defined on PSL(2,Z).
    pub fn abs_trace(&self) -> i64 {
        (self.a + self.d).abs()
    }

    pub fn inverse(&self) -> Self {
        Self::canonical(self.d, -self.b, -self.c, self.a)
    }

    /// Matrix product with overflow reported rather than panicking.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        let m = |p: i64, q: i64, r: i64, s: i64| -> Result<i64> {
            let v = p as i128 * q as i128 + r as i128 * s as i128;
            i64::try_from(v).map_err(|_| Error::ArithmeticOverflow("matrix composition"))
        };
        let a = m(self.a, other.a, self.b, other.c)?;
        let b = m(self.a, other.b, self.b, other.d)?;
        let c = m(self.c, other.a, self.d, other.c)?;
        let d = m(self.c, other.b, self.d, other.d)?;
        Ok(Self::canonical(a, b, c, d))
    }

    pub fn to_float<T: Real>(&self) -> MobiusMatrix<T> {
        MobiusMatrix::from_entries_unchecked(
            T::lit(self.a as f64),
            T::lit(self.b as f64),
            T::lit(self.c as f64),
            T::lit(self.d as f64),
        )
    }
}

impl fmt::Display for ModularElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({} {}; {} {})", self.a, self.b, self.c, self.d)
    }
}

impl<T: Real> Mobius<T> for ModularElement {
    #[inline]
    fn apply(&self, z: &Point<T>) -> Point<T> {
        apply_entries(
            T::lit(self.a as f64),
            T::lit(self.b as f64),
            T::lit(self.c as f64),
            T::lit(self.d as f64),
            z,
        )
    }
}

#[inline]
fn apply_entries<T: Real>(a: T, b: T, c: T, d: T, z: &Point<T>) -> Point<T> {
    // (az+b)/(cz+d) = ((az+b) conj(cz+d)) / |cz+d|^2
    let nr = a * z.x + b;
    let ni = a * z.y;
    let dr = c * z.x + d;
    let di = c * z.y;
    let den = dr * dr + di * di;
    let x = (nr * dr + ni * di) / den;
    // Im part equals (ad - bc) y / |cz+d|^2; use the determinant-free form for positivity.
    let y = z.y / den;
    Point::new_unchecked(x, y)
}

/// Floating 2x2 matrix of determinant one modulo sign.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MobiusMatrix<T> {
    a: T,
    b: T,
    c: T,
    d: T,
}

impl<T: Real> MobiusMatrix<T> {
    /// Accepts matrices whose determinant is within `1e-12` of one (relative to entry size).
    pub fn new(a: T, b: T, c: T, d: T) -> Result<Self> {
        let det = a * d - b * c;
        let scale = (a * d).abs().max((b * c).abs()).max(T::one());
        let tol = T::lit(1e-12).max(T::EPS * T::lit(64.0));
        if !((det - T::one()).abs() <= tol * scale) {
            return Err(Error::invalid(format!("determinant {:?} is not 1", det)));
        }
        Ok(Self::normalized(a, b, c, d))
    }

    pub fn identity() -> Self {
        Self::from_entries_unchecked(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn diagonal(lambda: T) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::invalid("diagonal entry must be positive"));
        }
        Ok(Self::from_entries_unchecked(lambda, T::zero(), T::zero(), lambda.recip()))
    }

    pub(crate) fn from_entries_unchecked(a: T, b: T, c: T, d: T) -> Self {
        let tol = T::lit(1e-12);
        if a > tol || (a.abs() <= tol && c > T::zero()) {
            MobiusMatrix { a, b, c, d }
        } else {
            MobiusMatrix { a: -a, b: -b, c: -c, d: -d }
        }
    }

    /// Divide by `sqrt(det)` and fix the sign.
    fn normalized(a: T, b: T, c: T, d: T) -> Self {
        let det = a * d - b * c;
        let s = det.abs().sqrt().recip();
        Self::from_entries_unchecked(a * s, b * s, c * s, d * s)
    }

    pub fn entries(&self) -> [T; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn compose(&self, o: &Self) -> Self {
        Self::normalized(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn inverse(&self) -> Self {
        Self::from_entries_unchecked(self.d, -self.b, -self.c, self.a)
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    /// Largest entrywise difference after sign canonicalization.
    pub fn max_abs_diff(&self, o: &Self) -> T {
        (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs())
    }
}

impl<T: Real> Mobius<T> for MobiusMatrix<T> {
    #[inline]
    fn apply(&self, z: &Point<T>) -> Point<T> {
        apply_entries(self.a, self.b, self.c, self.d, z)
    }
}

/// Hyperbolic area `dx dy / y^2` of the standard fundamental domain of PSL(2,Z).
pub fn modular_covolume() -> f64 {
    std::f64::consts::PI / 3.0
}
