//! Hyperbolic conjugacy classes of PSL(2,Z) by trace, through reduction cycles of indefinite
//! binary quadratic forms, and the Chebyshev function of the length spectrum.
//!
//! An element `(a b; c d)` of trace `t >= 3` corresponds to the form `(c, d - a, -b)` of
//! discriminant `t^2 - 4`; conjugation acts by proper equivalence. Every content is allowed.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use num_integer::{Integer, Roots};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::ModularElement;

/// `a X^2 + b XY + c Y^2` with positive non-square discriminant.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuadraticForm {
    pub a: i64,
    pub b: i64,
    pub c: i64,
}

impl QuadraticForm {
    pub fn new(a: i64, b: i64, c: i64) -> Result<Self> {
        let f = QuadraticForm { a, b, c };
        let d = f.discriminant();
        if d <= 0 || is_square(d) {
            return Err(Error::invalid(format!("discriminant {d} must be positive and non-square")));
        }
        Ok(f)
    }

    pub fn discriminant(&self) -> i64 {
        self.b * self.b - 4 * self.a * self.c
    }

    /// `gcd(a, b, c)`.
    pub fn content(&self) -> i64 {
        self.a.gcd(&self.b).gcd(&self.c)
    }

    /// `0 < b < sqrt(D)` and `sqrt(D) - b < 2|a| < sqrt(D) + b`.
    pub fn is_reduced(&self) -> bool {
        let s = self.discriminant().sqrt();
        let twice_a = 2 * self.a.abs();
        self.b >= 1 && self.b <= s && twice_a > s - self.b && twice_a <= s + self.b
    }

    /// The reduction operator: `(a, b, c) -> (c, b', (b'^2 - D)/(4c))` with `b' = -b mod 2|c|`
    /// in `(sqrt(D) - 2|c|, sqrt(D))`.
    pub fn rho(&self) -> QuadraticForm {
        let d = self.discriminant();
        let s = d.sqrt();
        let m = 2 * self.c.abs();
        let lo = s - m + 1;
        let b_new = lo + (-self.b - lo).rem_euclid(m);
        QuadraticForm { a: self.c, b: b_new, c: (b_new * b_new - d) / (4 * self.c) }
    }

    /// The matrix of trace `t` attached to this form, if the parities fit.
    pub fn to_element(&self, trace: i64) -> Option<ModularElement> {
        if (trace - self.b) % 2 != 0 || trace * trace - 4 != self.discriminant() {
            return None;
        }
        ModularElement::new((trace - self.b) / 2, -self.c, self.a, (trace + self.b) / 2).ok()
    }

    /// Form of a matrix with positive trace: `(c, d - a, -b)`.
    pub fn of_element(g: &ModularElement) -> QuadraticForm {
        let [a, b, c, d] = g.entries();
        let (a, b, c, d) = if a + d < 0 { (-a, -b, -c, -d) } else { (a, b, c, d) };
        QuadraticForm { a: c, b: d - a, c: -b }
    }
}

fn is_square(n: i64) -> bool {
    n >= 0 && {
        let r = n.sqrt();
        r * r == n
    }
}

/// All reduced forms of discriminant `d` (any content).
pub fn reduced_forms(d: i64) -> Result<Vec<QuadraticForm>> {
    if d <= 0 || is_square(d) || !(d.rem_euclid(4) == 0 || d.rem_euclid(4) == 1) {
        return Err(Error::invalid(format!("{d} is not a positive non-square discriminant")));
    }
    let s = d.sqrt();
    let mut out = Vec::new();
    let mut b = if d % 2 == 0 { 2 } else { 1 };
    while b <= s {
        let num = b * b - d;
        let lo = (s - b) / 2 + 1;
        let hi = (s + b) / 2;
        for abs_a in lo..=hi {
            if num % (4 * abs_a) != 0 {
                continue;
            }
            for a in [abs_a, -abs_a] {
                let f = QuadraticForm { a, b, c: num / (4 * a) };
                debug_assert!(f.is_reduced());
                out.push(f);
            }
        }
        b += 2;
    }
    Ok(out)
}

/// Reduced forms split into `rho`-cycles; each cycle is one proper equivalence class.
pub fn form_cycles(d: i64) -> Result<Vec<Vec<QuadraticForm>>> {
    let forms = reduced_forms(d)?;
    let mut seen: HashSet<QuadraticForm> = HashSet::with_capacity(forms.len());
    let mut cycles = Vec::new();
    for f in forms {
        if seen.contains(&f) {
            continue;
        }
        let mut cycle = vec![f];
        seen.insert(f);
        let mut g = f.rho();
        while g != f {
            if !seen.insert(g) {
                return Err(Error::NonConvergence { context: "form reduction cycle", terms: cycle.len() });
            }
            cycle.push(g);
            g = g.rho();
        }
        cycles.push(cycle);
    }
    Ok(cycles)
}

/// Number of conjugacy classes of PSL(2,Z) with `|trace| = t`.
pub fn class_count_by_trace(t: i64) -> Result<u64> {
    check_trace(t)?;
    Ok(form_cycles(t * t - 4)?.len() as u64)
}

fn check_trace(t: i64) -> Result<()> {
    if t < 3 {
        return Err(Error::invalid(format!("hyperbolic traces start at 3, got {t}")));
    }
    if t > 3_000_000 {
        return Err(Error::invalid(format!("trace {t} too large for 64-bit discriminants")));
    }
    Ok(())
}

/// `N = ((t + sqrt(t^2 - 4))/2)^2`.
pub fn norm_from_trace(t: i64) -> f64 {
    let tf = t as f64;
    let e = 0.5 * (tf + ((tf - 2.0) * (tf + 2.0)).sqrt());
    e * e
}

/// `log N = 2 arccosh(t/2)`.
pub fn length_from_trace(t: i64) -> f64 {
    2.0 * (0.5 * t as f64).acosh()
}

/// Largest trace whose norm does not exceed `xmax`.
pub fn max_trace_for_norm(xmax: f64) -> i64 {
    if xmax <= 1.0 {
        return 2;
    }
    // N <= xmax iff t <= sqrt(xmax) + 1/sqrt(xmax).
    let r = xmax.sqrt();
    let mut t = (r + 1.0 / r).floor() as i64 + 1;
    while t >= 3 && norm_from_trace(t) > xmax {
        t -= 1;
    }
    t.max(2)
}

/// Hyperbolic classes of one trace sharing the same primitive root trace.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyClassRecord {
    pub trace: i64,
    pub discriminant: i64,
    /// Number of conjugacy classes in this group.
    pub class_count: u64,
    pub norm: f64,
    pub length: f64,
    pub primitive: bool,
    /// `log N` of the primitive class of which these are powers.
    pub primitive_length: f64,
}

impl ConjugacyClassRecord {
    /// `T = (N + 1/N - 2)/4 = (t^2 - 4)/4`, the argument at which the class enters `M_{m,lambda}`.
    pub fn shifted_norm(&self) -> f64 {
        (self.discriminant as f64) / 4.0
    }
}

/// `V_k(t0)` and `U_{k-1}(t0)` for `k = 1, 2, ...` while `V_k <= t`: traces and off-diagonal
/// multipliers of the powers of an element of trace `t0`.
fn power_sequence(t0: i64, t: i64) -> Vec<(u32, i64, i64)> {
    let mut out = Vec::new();
    let (mut v_prev, mut v) = (2i64, t0);
    let (mut u_prev, mut u) = (0i64, 1i64);
    let mut k = 1u32;
    while v <= t {
        out.push((k, v, u));
        let v_next = t0 * v - v_prev;
        let u_next = t0 * u - u_prev;
        (v_prev, v, u_prev, u) = (v, v_next, u, u_next);
        k += 1;
    }
    out
}

/// Largest `k` and its root trace `t0` such that a class of trace `t` and form content `g`
/// is the `k`-th power of a class of trace `t0`.
fn primitive_root(t: i64, content: i64) -> (u32, i64) {
    let mut best = (1, t);
    let mut t0 = 3;
    // V_2(t0) = t0^2 - 2 <= t bounds the roots that can matter.
    while t0 * t0 - 2 <= t {
        for (k, v, u) in power_sequence(t0, t) {
            if k >= 2 && v == t && content % u == 0 && k > best.0 {
                best = (k, t0);
            }
        }
        t0 += 1;
    }
    best
}

/// Records for one trace, grouped by primitive root.
pub fn classes_for_trace(t: i64) -> Result<Vec<ConjugacyClassRecord>> {
    check_trace(t)?;
    let d = t * t - 4;
    let mut groups: BTreeMap<i64, u64> = BTreeMap::new();
    for cycle in form_cycles(d)? {
        let (_, root) = primitive_root(t, cycle[0].content());
        *groups.entry(root).or_default() += 1;
    }
    let norm = norm_from_trace(t);
    let length = length_from_trace(t);
    // Primitive group first, then roots in decreasing order (longer primitive geodesics).
    let mut out: Vec<ConjugacyClassRecord> = groups
        .into_iter()
        .rev()
        .map(|(root, count)| ConjugacyClassRecord {
            trace: t,
            discriminant: d,
            class_count: count,
            norm,
            length,
            primitive: root == t,
            primitive_length: length_from_trace(root),
        })
        .collect();
    out.sort_by_key(|r| !r.primitive);
    Ok(out)
}

/// All hyperbolic classes with `N <= xmax`, sorted by norm.
pub fn classes_up_to_norm(xmax: f64) -> Result<Vec<ConjugacyClassRecord>> {
    if !(xmax > 1.0) || !xmax.is_finite() {
        return Err(Error::invalid(format!("xmax must exceed 1, got {xmax}")));
    }
    let tmax = max_trace_for_norm(xmax);
    let per_trace: Vec<Vec<ConjugacyClassRecord>> =
        (3..=tmax).into_par_iter().map(classes_for_trace).collect::<Result<_>>()?;
    Ok(per_trace.into_iter().flatten().collect())
}

/// `Psi(x) = sum over hyperbolic classes with N <= x of log N(gamma_0)`.
pub fn psi_geodesic(xmax: f64) -> Result<f64> {
    Ok(psi_from_records(&classes_up_to_norm(xmax)?, xmax))
}

pub fn psi_from_records(records: &[ConjugacyClassRecord], xmax: f64) -> f64 {
    records.iter().filter(|r| r.norm <= xmax).map(|r| r.class_count as f64 * r.primitive_length).sum()
}

const CSV_HEADER: [&str; 7] =
    ["trace", "discriminant", "class_count", "norm", "length", "primitive", "primitive_length"];

/// Geodesic table with columns `trace,discriminant,class_count,norm,length,primitive,primitive_length`.
pub fn write_table_csv<W: Write>(records: &[ConjugacyClassRecord], out: W) -> Result<()> {
    let mut wtr = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    wtr.write_record(CSV_HEADER)?;
    for r in records {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_table_csv<R: Read>(input: R) -> Result<Vec<ConjugacyClassRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_owned).collect();
    if header != CSV_HEADER {
        return Err(Error::invalid(format!("unexpected geodesic table header {header:?}")));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        out.push(row?);
    }
    Ok(out)
}

/// Per-trace table files in a directory, written atomically.
#[derive(Clone, Debug)]
pub struct GeodesicCache {
    dir: PathBuf,
}

impl GeodesicCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir)?;
        Ok(GeodesicCache { dir })
    }

    fn path(&self, t: i64) -> PathBuf {
        self.dir.join(format!("trace_{t}.csv"))
    }

    /// Records for trace `t`, computed and stored on a miss.
    pub fn classes_for_trace(&self, t: i64) -> Result<Vec<ConjugacyClassRecord>> {
        let path = self.path(t);
        if let Ok(file) = fs::File::open(&path) {
            match read_table_csv(file) {
                Ok(records) if records.iter().all(|r| r.trace == t) && !records.is_empty() => return Ok(records),
                _ => log::warn!("ignoring unreadable cache file {}", path.display()),
            }
        }
        let records = classes_for_trace(t)?;
        write_atomically(&path, &records)?;
        Ok(records)
    }

    pub fn classes_up_to_norm(&self, xmax: f64) -> Result<Vec<ConjugacyClassRecord>> {
        if !(xmax > 1.0) || !xmax.is_finite() {
            return Err(Error::invalid(format!("xmax must exceed 1, got {xmax}")));
        }
        let tmax = max_trace_for_norm(xmax);
        let per_trace: Vec<Vec<ConjugacyClassRecord>> =
            (3..=tmax).into_par_iter().map(|t| self.classes_for_trace(t)).collect::<Result<_>>()?;
        Ok(per_trace.into_iter().flatten().collect())
    }
}

fn write_atomically(path: &Path, records: &[ConjugacyClassRecord]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let tmp = dir.join(format!(
        ".{}.{}.tmp",
        path.file_name().and_then(|s| s.to_str()).unwrap_or("table"),
        std::process::id()
    ));
    {
        let mut file = fs::File::create(&tmp)?;
        write_table_csv(records, &mut file)?;
        file.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}
