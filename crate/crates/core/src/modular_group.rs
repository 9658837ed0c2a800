//! PSL(2,Z): reduction to the standard fundamental domain, exact enumeration of orbit balls
//! `{g : 4u(gz, w) + 2 <= X}`, and a breadth-first ball search for groups given by generators.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use num_integer::Integer;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{distance, point_pair_invariant, Mobius, MobiusMatrix, ModularElement, Point};
use crate::scalar::Real;

const REDUCTION_CAP: usize = 10_000;
const DOMAIN_TOL: f64 = 1e-12;

/// A point of the standard domain `|x| <= 1/2, |z| >= 1` with the element that carried it there.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FundamentalDomainPoint<T> {
    pub z: Point<T>,
    /// `reducer · original = z`.
    pub reducer: ModularElement,
}

/// Standard reduction by integer translations and the inversion `z -> -1/z`.
pub fn reduce_to_fundamental_domain<T: Real>(z: &Point<T>) -> Result<FundamentalDomainPoint<T>> {
    let half = T::lit(0.5);
    let one = T::one();
    let tol = T::lit(DOMAIN_TOL);
    let mut cur = *z;
    let mut reducer = ModularElement::IDENTITY;
    for _ in 0..REDUCTION_CAP {
        let shift = cur.x().round();
        if shift != T::zero() {
            let n = shift
                .to_i64()
                .ok_or_else(|| Error::invalid("real part too large to reduce"))?;
            reducer = ModularElement::translation(-n).compose(&reducer)?;
            cur = Point::new(cur.x() - shift, cur.y())?;
        }
        let r2 = cur.x() * cur.x() + cur.y() * cur.y();
        if r2 >= one - tol {
            if cur.x().abs() <= half + tol {
                return Ok(FundamentalDomainPoint { z: cur, reducer });
            }
            continue;
        }
        reducer = ModularElement::S.compose(&reducer)?;
        cur = Point::new(-cur.x() / r2, cur.y() / r2)?;
    }
    Err(Error::IterationCap { context: "fundamental domain reduction", cap: REDUCTION_CAP })
}

/// The elements of PSL(2,Z) with `4u(gz, w) + 2 <= X`, sorted lexicographically by entries.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrbitBall {
    pub z: Point<f64>,
    pub w: Point<f64>,
    pub threshold: f64,
    pub elements: Vec<ModularElement>,
}

impl OrbitBall {
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// CSV with columns `a,b,c,d,u_value,four_u_plus_two`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["a", "b", "c", "d", "u_value", "four_u_plus_two"])?;
        for g in &self.elements {
            let u = point_pair_invariant(&g.apply(&self.z), &self.w);
            let [a, b, c, d] = g.entries();
            wtr.serialize((a, b, c, d, u, 4.0 * u + 2.0))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Best rational approximation `p/q` with `q <= max_den` that reproduces `v` exactly in f64.
fn small_rational(v: f64, max_den: i64) -> Option<(i64, i64)> {
    if !v.is_finite() || v.abs() > 1e12 {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i64, 1i64, 1i64, 0i64);
    let mut rest = v;
    for _ in 0..64 {
        let a = rest.floor();
        let ai = a as i64;
        let p2 = ai.checked_mul(p1)?.checked_add(p0)?;
        let q2 = ai.checked_mul(q1)?.checked_add(q0)?;
        if q2 > max_den {
            return None;
        }
        if p2 as f64 / q2 as f64 == v {
            return Some((p2, q2));
        }
        let frac = rest - a;
        if frac == 0.0 {
            return None;
        }
        rest = frac.recip();
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
    }
    None
}

/// Decides `4u(gz, w) + 2 <= X` for a fixed pair of points.
#[derive(Clone, Copy, Debug)]
enum Predicate {
    /// Both points have coordinates `P/Q + i R/Q` with integers; the test is exact.
    Exact { p1: i128, r1: i128, p2: i128, r2: i128, q: i128, mant: i128, exp: i32 },
    Float { tol: f64 },
}

const MAX_DENOMINATOR: i64 = 10_000;
const MAX_COMMON_DENOMINATOR: i64 = 1_000_000;
const FLOAT_TOLERANCE: f64 = 1e-9;

impl Predicate {
    fn new(z: &Point<f64>, w: &Point<f64>, x: f64) -> Predicate {
        let float = Predicate::Float { tol: FLOAT_TOLERANCE * x };
        let coords = [z.x(), z.y(), w.x(), w.y()];
        let mut fracs = [(0i64, 1i64); 4];
        let mut q = 1i64;
        for (slot, &v) in fracs.iter_mut().zip(coords.iter()) {
            let Some(f) = small_rational(v, MAX_DENOMINATOR) else { return float };
            *slot = f;
            q = q.lcm(&f.1);
            if q > MAX_COMMON_DENOMINATOR {
                return float;
            }
        }
        let scaled = |(p, d): (i64, i64)| p as i128 * (q / d) as i128;
        let (mant, exp, _) = num_traits::Float::integer_decode(x);
        Predicate::Exact {
            p1: scaled(fracs[0]),
            r1: scaled(fracs[1]),
            p2: scaled(fracs[2]),
            r2: scaled(fracs[3]),
            q: q as i128,
            mant: mant as i128,
            exp: exp as i32,
        }
    }

    fn contains(&self, g: [i64; 4], z: &Point<f64>, w: &Point<f64>, x: f64) -> Result<bool> {
        match *self {
            Predicate::Exact { p1, r1, p2, r2, q, mant, exp } => {
                exact_contains(g, (p1, r1, p2, r2, q), mant, exp).ok_or(Error::Overflow { x })
            }
            Predicate::Float { tol } => Ok(four_u_plus_two(g, z, w) <= x + tol),
        }
    }
}

fn exact_contains(
    g: [i64; 4],
    (p1, r1, p2, r2, q): (i128, i128, i128, i128, i128),
    mant: i128,
    exp: i32,
) -> Option<bool> {
    let [a, b, c, d] = g.map(|v| v as i128);
    let mul = |u: i128, v: i128| u.checked_mul(v);
    // Q^2 (a z + b - w (c z + d)) split into real and imaginary parts.
    let cross_re = mul(p2, p1)?.checked_sub(mul(r2, r1)?)?;
    let cross_im = mul(p2, r1)?.checked_add(mul(r2, p1)?)?;
    let re = mul(mul(a, p1)?, q)?
        .checked_add(mul(mul(b, q)?, q)?)?
        .checked_sub(mul(c, cross_re)?)?
        .checked_sub(mul(mul(d, p2)?, q)?)?;
    let im = mul(mul(a, r1)?, q)?
        .checked_sub(mul(c, cross_im)?)?
        .checked_sub(mul(mul(d, r2)?, q)?)?;
    let k = mul(mul(r1, r2)?, mul(q, q)?)?;
    let lhs = mul(re, re)?.checked_add(mul(im, im)?)?.checked_add(mul(2, k)?)?;
    // lhs <= mant 2^exp k, with lhs an integer.
    let mk = mul(mant, k)?;
    let rhs = if exp >= 0 {
        match (exp as u32) < 127 {
            true => mk.checked_shl(exp as u32).filter(|v| v >> exp == mk),
            false => None,
        }
        .unwrap_or(i128::MAX)
    } else if -exp >= 127 {
        0
    } else {
        mk >> (-exp) as u32
    };
    Some(lhs <= rhs)
}

/// `4u(gz, w) + 2` evaluated in floating point without forming `gz`.
pub fn four_u_plus_two(g: [i64; 4], z: &Point<f64>, w: &Point<f64>) -> f64 {
    let [a, b, c, d] = g.map(|v| v as f64);
    let (x1, y1, x2, y2) = (z.x(), z.y(), w.x(), w.y());
    let re = a * x1 + b - (x2 * (c * x1 + d) - y2 * c * y1);
    let im = a * y1 - (x2 * c * y1 + y2 * (c * x1 + d));
    (re * re + im * im) / (y1 * y2) + 2.0
}

const MAX_ROW: f64 = 1e12;

/// Everything needed to scan one bottom row `c`.
struct BallGeometry {
    z: Point<f64>,
    w: Point<f64>,
    x: f64,
    bound: f64,
    predicate: Predicate,
}

impl BallGeometry {
    fn new(z: &Point<f64>, w: &Point<f64>, x: f64) -> Result<Option<Self>> {
        if !(x > 0.0) || !x.is_finite() {
            return Err(Error::invalid(format!("threshold X must be positive and finite, got {x}")));
        }
        if x < 2.0 {
            return Ok(None);
        }
        // cosh(rho) <= X/2 and Im(gz)/Im(w) >= e^{-rho} bound |cz + d|^2.
        let e_rho = 0.5 * x * (1.0 + (1.0 - 4.0 / (x * x)).max(0.0).sqrt());
        let bound = z.y() * e_rho / w.y() * (1.0 + 1e-9) + 1e-9;
        // Rows beyond this would push the integer entries out of i64 range.
        if !(bound.sqrt() / z.y() < MAX_ROW) {
            return Err(Error::Overflow { x });
        }
        Ok(Some(BallGeometry { z: *z, w: *w, x, bound, predicate: Predicate::new(z, w, x) }))
    }

    fn max_c(&self) -> i64 {
        (self.bound.sqrt() / self.z.y()).floor() as i64 + 1
    }

    /// Visit every ball element with bottom row `(c, *)`.
    fn scan_row(&self, c: i64, mut visit: impl FnMut([i64; 4])) -> Result<()> {
        let (x1, y1) = (self.z.x(), self.z.y());
        let cf = c as f64;
        let room = self.bound - cf * cf * y1 * y1;
        if room < 0.0 {
            return Ok(());
        }
        let (d_lo, d_hi) = if c == 0 {
            (1, 1)
        } else {
            let half = room.sqrt();
            ((-cf * x1 - half).floor() as i64 - 1, (-cf * x1 + half).ceil() as i64 + 1)
        };
        for d in d_lo..=d_hi {
            if c.gcd(&d) != 1 {
                continue;
            }
            let ext = d.extended_gcd(&c);
            // ext.x d + ext.y c = gcd = 1, so (a0, b0) = (ext.x, -ext.y) has a0 d - b0 c = 1.
            let sign = if ext.gcd < 0 { -1 } else { 1 };
            let (a0, b0) = (sign * ext.x, -sign * ext.y);
            self.scan_translates([a0, b0, c, d], &mut visit)?;
        }
        Ok(())
    }

    fn scan_translates(&self, g0: [i64; 4], visit: &mut impl FnMut([i64; 4])) -> Result<()> {
        let [a0, b0, c, d] = g0;
        let base = ModularElement::canonical(a0, b0, c, d);
        let zeta = base.apply(&self.z);
        let (x2, y2) = (self.w.x(), self.w.y());
        let eta = zeta.y();
        let xi = zeta.x() - x2;
        // (xi + k)^2 <= (X - 2) eta y2 - (eta - y2)^2
        let disc = (self.x - 2.0) * eta * y2 - (eta - y2) * (eta - y2);
        let slack = 1e-9 * (self.x * eta * y2 + (eta - y2) * (eta - y2)) + 1e-12;
        if disc < -slack {
            return Ok(());
        }
        let half = disc.max(0.0).sqrt();
        let lo = (-xi - half).floor() as i64 - 1;
        let hi = (-xi + half).ceil() as i64 + 1;
        for k in lo..=hi {
            let overflow = || Error::Overflow { x: self.x };
            let a = k.checked_mul(c).and_then(|v| v.checked_add(a0)).ok_or_else(overflow)?;
            let b = k.checked_mul(d).and_then(|v| v.checked_add(b0)).ok_or_else(overflow)?;
            let g = [a, b, c, d];
            if self.predicate.contains(g, &self.z, &self.w, self.x)? {
                visit(g);
            }
        }
        Ok(())
    }
}

/// Exact enumeration of `{g in PSL(2,Z) : 4u(gz, w) + 2 <= X}` (boundary included).
///
/// Rows `c` are scanned in parallel. The `a, b` of each row come from one solution of
/// `ad - bc = 1` plus integer multiples of `(c, d)`, whose admissible range is a closed
/// interval. Membership is decided exactly when all coordinates are rationals with
/// denominators up to `10^4`, otherwise with relative tolerance `1e-9`.
pub fn enumerate_ball_arithmetic(z: &Point<f64>, w: &Point<f64>, x: f64) -> Result<OrbitBall> {
    let Some(geom) = BallGeometry::new(z, w, x)? else {
        return Ok(OrbitBall { z: *z, w: *w, threshold: x, elements: Vec::new() });
    };
    let rows: Vec<Vec<ModularElement>> = (0..=geom.max_c())
        .into_par_iter()
        .map(|c| {
            let mut row = Vec::new();
            geom.scan_row(c, |[a, b, c, d]| row.push(ModularElement::canonical(a, b, c, d)))?;
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut elements: Vec<ModularElement> = rows.into_iter().flatten().collect();
    elements.par_sort_unstable();
    elements.dedup();
    Ok(OrbitBall { z: *z, w: *w, threshold: x, elements })
}

/// `N(z, w, X)` without materializing the ball.
pub fn count(z: &Point<f64>, w: &Point<f64>, x: f64) -> Result<u64> {
    let Some(geom) = BallGeometry::new(z, w, x)? else { return Ok(0) };
    (0..=geom.max_c())
        .into_par_iter()
        .map(|c| {
            let mut n = 0u64;
            geom.scan_row(c, |_| n += 1)?;
            Ok(n)
        })
        .try_reduce(|| 0, |p, q| Ok(p + q))
}

/// Sums `weight(4u(gz, w) + 2)` over the ball of radius `X`, in floating point.
///
/// Used by smoothed counts where only the value of the invariant matters.
pub fn sum_over_ball(
    z: &Point<f64>,
    w: &Point<f64>,
    x: f64,
    weight: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<f64> {
    let Some(geom) = BallGeometry::new(z, w, x)? else { return Ok(0.0) };
    (0..=geom.max_c())
        .into_par_iter()
        .map(|c| {
            let mut acc = 0.0;
            geom.scan_row(c, |g| acc += weight(four_u_plus_two(g, z, w)))?;
            Ok(acc)
        })
        .try_reduce(|| 0.0, |p, q| Ok(p + q))
}

/// Like [`sum_over_ball`] for several weights at once, from a single scan.
pub fn sum_over_ball_many<const K: usize>(
    z: &Point<f64>,
    w: &Point<f64>,
    x: f64,
    weight: &(dyn Fn(f64) -> [f64; K] + Sync),
) -> Result<[f64; K]> {
    let Some(geom) = BallGeometry::new(z, w, x)? else { return Ok([0.0; K]) };
    (0..=geom.max_c())
        .into_par_iter()
        .map(|c| {
            let mut acc = [0.0; K];
            geom.scan_row(c, |g| {
                for (a, v) in acc.iter_mut().zip(weight(four_u_plus_two(g, z, w))) {
                    *a += v;
                }
            })?;
            Ok(acc)
        })
        .try_reduce(
            || [0.0; K],
            |mut p, q| {
                for (a, b) in p.iter_mut().zip(q) {
                    *a += b;
                }
                Ok(p)
            },
        )
}

/// Floating generators of a discrete group, closed under inversion, with the search slack `C`.
#[derive(Clone, Debug)]
pub struct GroupPresentation {
    generators: Vec<MobiusMatrix<f64>>,
    slack: f64,
}

const GENERATOR_TOL: f64 = 1e-9;

impl GroupPresentation {
    pub const DEFAULT_SLACK: f64 = 3.0;

    pub fn new(generators: Vec<MobiusMatrix<f64>>, slack: f64) -> Result<Self> {
        if !(slack >= 0.0) || !slack.is_finite() {
            return Err(Error::invalid("slack must be a nonnegative finite number"));
        }
        for g in &generators {
            let inv = g.inverse();
            if !generators.iter().any(|h| same_up_to_sign(h, &inv, GENERATOR_TOL)) {
                return Err(Error::invalid(format!("inverse of generator {:?} missing", g.entries())));
            }
        }
        Ok(GroupPresentation { generators, slack })
    }

    /// Adds the missing inverses before validating.
    pub fn closed_under_inverses(mut generators: Vec<MobiusMatrix<f64>>, slack: f64) -> Result<Self> {
        let mut extra = Vec::new();
        for g in &generators {
            let inv = g.inverse();
            let known = generators.iter().chain(extra.iter()).any(|h| same_up_to_sign(h, &inv, GENERATOR_TOL));
            if !known {
                extra.push(inv);
            }
        }
        generators.extend(extra);
        Self::new(generators, slack)
    }

    /// `S`, `T` and `T^-1` for PSL(2,Z).
    pub fn modular(slack: f64) -> Self {
        let gens = [ModularElement::S, ModularElement::T, ModularElement::translation(-1)];
        Self::new(gens.iter().map(|g| g.to_float()).collect(), slack).expect("closed by construction")
    }

    pub fn generators(&self) -> &[MobiusMatrix<f64>] {
        &self.generators
    }

    pub fn slack(&self) -> f64 {
        self.slack
    }
}

fn same_up_to_sign(p: &MobiusMatrix<f64>, q: &MobiusMatrix<f64>, tol: f64) -> bool {
    let (u, v) = (p.entries(), q.entries());
    let plus = u.iter().zip(v.iter()).all(|(s, t)| (s - t).abs() <= tol);
    let minus = u.iter().zip(v.iter()).all(|(s, t)| (s + t).abs() <= tol);
    plus || minus
}

/// Result of the breadth-first search together with what it saw at the cutoff.
#[derive(Clone, Debug)]
pub struct GenericBall {
    pub z0: Point<f64>,
    pub radius: f64,
    /// Elements with `rho(g z0, z0) <= radius`, ordered by distance then entries.
    pub elements: Vec<MobiusMatrix<f64>>,
    pub frontier: FrontierReport,
}

/// Sizes at the search boundary. A nonzero `shell` with a small slack hints at truncation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FrontierReport {
    /// Kept elements with `radius < rho <= radius + C`.
    pub shell: usize,
    /// Products discarded because they landed beyond `radius + C`.
    pub rejected: usize,
    /// Distinct elements visited.
    pub explored: usize,
}

const DEDUP_TOL: f64 = 1e-8;
const DEDUP_GRID: f64 = 1e-6;
pub const DEFAULT_BFS_BUDGET: usize = 2_000_000;

/// Sign-normalized entries: the first entry of largest magnitude is made positive.
fn dedup_entries(m: &MobiusMatrix<f64>) -> [f64; 4] {
    let e = m.entries();
    let big = e.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    let lead = e.iter().find(|v| v.abs() >= big - 1e-9).copied().unwrap_or(1.0);
    if lead < 0.0 {
        e.map(|v| -v)
    } else {
        e
    }
}

struct DedupIndex {
    cells: HashMap<[i64; 4], Vec<usize>>,
    entries: Vec<[f64; 4]>,
}

impl DedupIndex {
    fn new() -> Self {
        DedupIndex { cells: HashMap::new(), entries: Vec::new() }
    }

    /// Grid cells within `DEDUP_TOL` of the entries.
    fn nearby_cells(e: &[f64; 4]) -> Vec<[i64; 4]> {
        let mut cells = vec![[0i64; 4]];
        for (i, &v) in e.iter().enumerate() {
            let lo = ((v - DEDUP_TOL) / DEDUP_GRID).floor() as i64;
            let hi = ((v + DEDUP_TOL) / DEDUP_GRID).floor() as i64;
            let mut next = Vec::with_capacity(cells.len() * 2);
            for cell in &cells {
                for k in lo..=hi {
                    let mut c = *cell;
                    c[i] = k;
                    next.push(c);
                }
            }
            cells = next;
        }
        cells
    }

    /// Index of an existing element within tolerance, or `None` after inserting it.
    fn find_or_insert(&mut self, e: [f64; 4]) -> Result<Option<usize>> {
        for cell in Self::nearby_cells(&e) {
            if let Some(ids) = self.cells.get(&cell) {
                for &id in ids {
                    let diff = self.entries[id].iter().zip(e.iter()).fold(0.0f64, |m, (p, q)| m.max((p - q).abs()));
                    if diff <= DEDUP_TOL {
                        return Ok(Some(id));
                    }
                    if diff <= DEDUP_GRID {
                        return Err(Error::DedupCollision { tolerance: DEDUP_TOL });
                    }
                }
            }
        }
        let id = self.entries.len();
        let home = e.map(|v| (v / DEDUP_GRID).floor() as i64);
        self.cells.entry(home).or_default().push(id);
        self.entries.push(e);
        Ok(None)
    }
}

/// Ball of radius `R` around `z0` for a group given by generators, by breadth-first search.
///
/// Words are extended while `rho(g z0, z0) <= R + C`. The result is complete only if every
/// element of the ball is reachable through words staying inside that enlarged ball; inspect
/// [`FrontierReport`] to judge truncation.
pub fn enumerate_ball_generic(p: &GroupPresentation, z0: &Point<f64>, radius: f64) -> Result<GenericBall> {
    enumerate_ball_generic_with_budget(p, z0, radius, DEFAULT_BFS_BUDGET)
}

pub fn enumerate_ball_generic_with_budget(
    p: &GroupPresentation,
    z0: &Point<f64>,
    radius: f64,
    budget: usize,
) -> Result<GenericBall> {
    if !(radius >= 0.0) || !radius.is_finite() {
        return Err(Error::invalid(format!("radius must be nonnegative, got {radius}")));
    }
    let reach = radius + p.slack;
    let mut index = DedupIndex::new();
    let mut found: Vec<(f64, MobiusMatrix<f64>)> = Vec::new();
    let mut queue = VecDeque::new();
    let identity = MobiusMatrix::identity();
    index.find_or_insert(dedup_entries(&identity))?;
    found.push((0.0, identity));
    queue.push_back(identity);
    let mut report = FrontierReport::default();
    while let Some(g) = queue.pop_front() {
        for s in &p.generators {
            let h = g.compose(s);
            let rho = distance(&h.apply(z0), z0);
            if rho > reach {
                report.rejected += 1;
                continue;
            }
            if index.find_or_insert(dedup_entries(&h))?.is_none() {
                if index.entries.len() > budget {
                    return Err(Error::BudgetExceeded { budget });
                }
                found.push((rho, h));
                queue.push_back(h);
            }
        }
    }
    report.explored = found.len();
    report.shell = found.iter().filter(|(rho, _)| *rho > radius).count();
    let mut inside: Vec<(f64, MobiusMatrix<f64>)> = found.into_iter().filter(|(rho, _)| *rho <= radius).collect();
    inside.sort_by(|(r1, m1), (r2, m2)| {
        r1.total_cmp(r2).then_with(|| {
            let (e1, e2) = (dedup_entries(m1), dedup_entries(m2));
            e1.iter().zip(e2.iter()).map(|(u, v)| u.total_cmp(v)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        })
    });
    Ok(GenericBall {
        z0: *z0,
        radius,
        elements: inside.into_iter().map(|(_, m)| m).collect(),
        frontier: report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64) -> Point<f64> {
        Point::new(x, y).unwrap()
    }

    /// All of PSL(2,Z) with entries bounded by `m`, one representative per sign class.
    fn bounded_elements(m: i64) -> Vec<ModularElement> {
        let mut out = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    for d in -m..=m {
                        if a * d - b * c == 1 {
                            out.push(ModularElement::canonical(a, b, c, d));
                        }
                    }
                }
            }
        }
        out.sort();
        out.dedup();
        out
    }

    #[test]
    fn astronomical_threshold_is_an_overflow() {
        for x in [1e30, 1e300] {
            assert!(matches!(count(&p(0.0, 1.0), &p(0.0, 1.0), x), Err(Error::Overflow { .. })));
        }
    }

    #[test]
    fn reduction_examples() {
        let r = reduce_to_fundamental_domain(&p(0.0, 1.0)).unwrap();
        assert_eq!(r.reducer, ModularElement::IDENTITY);
        let r = reduce_to_fundamental_domain(&p(5.0, 1.0)).unwrap();
        assert_eq!(r.reducer, ModularElement::translation(-5));
        assert!(r.z.x().abs() < 1e-15 && (r.z.y() - 1.0).abs() < 1e-15);
        let start = p(0.1, 0.1);
        let r = reduce_to_fundamental_domain(&start).unwrap();
        assert!(r.z.y() >= 1.0 - 1e-12 || r.z.x().powi(2) + r.z.y().powi(2) >= 1.0 - 1e-12);
        assert!(r.z.x().abs() <= 0.5 + 1e-12);
        let mapped = r.reducer.apply(&start);
        assert!((mapped.x() - r.z.x()).abs() < 1e-12 && (mapped.y() - r.z.y()).abs() < 1e-12);
    }

    #[test]
    fn small_balls_at_i() {
        let i = Point::i();
        assert!(enumerate_ball_arithmetic(&i, &i, 1.9).unwrap().is_empty());
        let ball = enumerate_ball_arithmetic(&i, &i, 2.0).unwrap();
        assert_eq!(ball.elements, vec![ModularElement::S, ModularElement::IDENTITY]);
        assert_eq!(count(&i, &i, 2.0).unwrap(), 2);
        assert_eq!(count(&i, &i, 1.5).unwrap(), 0);
    }

    #[test]
    fn sum_of_squares_identity_at_i() {
        let i = Point::i();
        for g in bounded_elements(2) {
            let [a, b, c, d] = g.entries();
            let v = four_u_plus_two(g.entries(), &i, &i);
            assert!((v - (a * a + b * b + c * c + d * d) as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn ball_matches_quadruple_count_at_100() {
        let i = Point::i();
        let want: Vec<_> = bounded_elements(10)
            .into_iter()
            .filter(|g| g.entries().iter().map(|v| v * v).sum::<i64>() <= 100)
            .collect();
        let ball = enumerate_ball_arithmetic(&i, &i, 100.0).unwrap();
        assert_eq!(ball.elements, want);
    }

    #[test]
    fn rational_detection() {
        assert_eq!(small_rational(0.25, 100), Some((1, 4)));
        assert_eq!(small_rational(1.3, 100), Some((13, 10)));
        assert_eq!(small_rational(-2.0, 100), Some((-2, 1)));
        assert_eq!(small_rational(std::f64::consts::PI, 10_000), None);
    }

    #[test]
    fn exact_and_float_predicates_agree_off_boundary() {
        let (z, w) = (p(0.3, 1.7), p(-0.2, 0.9));
        let x = 57.3;
        let exact = Predicate::new(&z, &w, x);
        assert!(matches!(exact, Predicate::Exact { .. }));
        let float = Predicate::Float { tol: 0.0 };
        for g in bounded_elements(4) {
            let v = four_u_plus_two(g.entries(), &z, &w);
            if (v - x).abs() > 1e-6 {
                assert_eq!(
                    exact.contains(g.entries(), &z, &w, x).unwrap(),
                    float.contains(g.entries(), &z, &w, x).unwrap()
                );
            }
        }
    }

    #[test]
    fn boundary_is_included_exactly() {
        // At z = w = i, 4u + 2 = a^2 + b^2 + c^2 + d^2, and (2 1; 1 1) sits on the shell 7.
        let i = Point::i();
        let ball = enumerate_ball_arithmetic(&i, &i, 7.0).unwrap();
        assert!(ball.elements.contains(&ModularElement::new(2, 1, 1, 1).unwrap()));
        let inside = enumerate_ball_arithmetic(&i, &i, 7.0 - 1e-12).unwrap();
        assert!(!inside.elements.contains(&ModularElement::new(2, 1, 1, 1).unwrap()));
    }

    #[test]
    fn csv_dump_has_header() {
        let i = Point::i();
        let ball = enumerate_ball_arithmetic(&i, &i, 3.0).unwrap();
        let mut buf = Vec::new();
        ball.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("a,b,c,d,u_value,four_u_plus_two\n"));
        assert_eq!(text.lines().count(), ball.len() + 1);
    }

    #[test]
    fn generic_trivial_presentation() {
        let pres = GroupPresentation::new(Vec::new(), 3.0).unwrap();
        let ball = enumerate_ball_generic(&pres, &p(0.0, 1.0), 5.0).unwrap();
        assert_eq!(ball.elements.len(), 1);
    }

    #[test]
    fn generic_matches_arithmetic_for_modular_group() {
        let z0 = p(0.0, 2.0);
        let ball = enumerate_ball_generic(&GroupPresentation::modular(3.0), &z0, 2.0).unwrap();
        let arith = enumerate_ball_arithmetic(&z0, &z0, 2.0 * 2f64.cosh()).unwrap();
        let mut from_generic: Vec<ModularElement> = ball
            .elements
            .iter()
            .map(|m| {
                let [a, b, c, d] = m.entries().map(|v| v.round() as i64);
                ModularElement::new(a, b, c, d).unwrap()
            })
            .collect();
        from_generic.sort();
        assert_eq!(from_generic, arith.elements);
    }

    #[test]
    fn generic_cyclic_hyperbolic() {
        let g = MobiusMatrix::diagonal(2.0).unwrap();
        let pres = GroupPresentation::closed_under_inverses(vec![g], 3.0).unwrap();
        let ball = enumerate_ball_generic(&pres, &Point::i(), 3.0).unwrap();
        assert_eq!(ball.elements.len(), 5);
        assert_eq!(ball.frontier.shell, 4);
    }

    #[test]
    fn generic_budget_and_validation() {
        let pres = GroupPresentation::modular(3.0);
        let err = enumerate_ball_generic_with_budget(&pres, &p(0.0, 2.0), 6.0, 50).unwrap_err();
        assert!(matches!(err, Error::BudgetExceeded { budget: 50 }));
        let t = ModularElement::T.to_float();
        assert!(GroupPresentation::new(vec![t], 3.0).is_err());
    }

    #[test]
    fn dedup_reports_collisions() {
        let mut idx = DedupIndex::new();
        assert!(idx.find_or_insert([1.0, 0.0, 0.0, 1.0]).unwrap().is_none());
        assert_eq!(idx.find_or_insert([1.0 + 1e-10, 0.0, 0.0, 1.0]).unwrap(), Some(0));
        assert!(idx.find_or_insert([1.0 + 5e-7, 0.0, 0.0, 1.0]).is_err());
    }

    #[test]
    fn growth_is_near_three_x() {
        let z = p(0.1, 1.3);
        let x = 2e4;
        let n = count(&z, &z, x).unwrap() as f64;
        assert!((2.0..=4.0).contains(&(n / x)), "N/X = {}", n / x);
    }

    fn arb_point() -> impl Strategy<Value = Point<f64>> {
        // Rational coordinates so the exact predicate is exercised.
        (-40i32..40, 10i32..60).prop_map(|(x, y)| Point::new(x as f64 / 20.0, y as f64 / 20.0).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(50))]

        #[test]
        fn ball_equals_bounded_brute_force(z in arb_point(), w in arb_point(), x in 2.0f64..500.0) {
            let ball = enumerate_ball_arithmetic(&z, &w, x).unwrap();
            // Im(gz) >= Im(w)/X and the same for the inverse bound |cz+d| and |-cw+a|.
            let (x1, y1, x2, y2) = (z.x(), z.y(), w.x(), w.y());
            let cmax = (x / (y1 * y2)).sqrt() as i64 + 1;
            let pred = Predicate::new(&z, &w, x);
            let mut want = Vec::new();
            for c in -cmax..=cmax {
                let cf = c.abs() as f64;
                let dmax = (cf * x1.abs() + (x * y1 / y2).sqrt()) as i64 + 1;
                let amax = (cf * x2.abs() + (x * y2 / y1).sqrt()) as i64 + 1;
                for a in -amax..=amax {
                    for d in -dmax..=dmax {
                        let bs: Vec<i64> = if c == 0 {
                            if a * d != 1 { continue; }
                            let r = (x1.abs() + x2.abs() + (x * y1 * y2).sqrt()) as i64 + 1;
                            (-r..=r).collect()
                        } else if (a * d - 1) % c == 0 {
                            vec![(a * d - 1) / c]
                        } else {
                            continue;
                        };
                        for b in bs {
                            if pred.contains([a, b, c, d], &z, &w, x).unwrap() {
                                want.push(ModularElement::canonical(a, b, c, d));
                            }
                        }
                    }
                }
            }
            want.sort();
            want.dedup();
            prop_assert_eq!(ball.elements, want);
        }

        #[test]
        fn monotone_in_x(z in arb_point(), w in arb_point(), x1 in 2.0f64..300.0, dx in 0.0f64..200.0) {
            let small = enumerate_ball_arithmetic(&z, &w, x1).unwrap();
            let big = enumerate_ball_arithmetic(&z, &w, x1 + dx).unwrap();
            prop_assert!(small.elements.iter().all(|g| big.elements.binary_search(g).is_ok()));
        }

        #[test]
        fn conjugation_covariance(z in arb_point(), w in arb_point(), x in 2.0f64..400.0, k in 0usize..4) {
            let g = [ModularElement::S, ModularElement::T, ModularElement::translation(-3),
                     ModularElement::new(2, 1, 1, 1).unwrap()][k];
            let n1 = count(&z, &w, x).unwrap();
            let n2 = count(&g.apply(&z), &g.apply(&w), x).unwrap();
            prop_assert_eq!(n1, n2);
        }
    }
}
