//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;

/// Matrices of trace `t` with entries in `[-bound, bound]`, sign-fixed by the positive trace.
pub fn matrices_of_trace(t: i64, bound: i64) -> Vec<[i64; 4]> {
    let mut out = Vec::new();
    for a in -bound..=bound {
        let d = t - a;
        if d.abs() > bound {
            continue;
        }
        let bc = a * d - 1;
        for b in -bound..=bound {
            if b == 0 {
                continue;
            }
            if bc % b == 0 {
                let c = bc / b;
                if c.abs() <= bound {
                    out.push([a, b, c, d]);
                }
            }
        }
    }
    out
}

pub fn find(parent: &mut [usize], i: usize) -> usize {
    let mut r = i;
    while parent[r] != r {
        r = parent[r];
    }
    let mut j = i;
    while parent[j] != r {
        let next = parent[j];
        parent[j] = r;
        j = next;
    }
    r
}

/// Orbits under conjugation by S and T^{±1}, staying inside the entry box, restricted to the
/// components that reach the inner box.
pub fn brute_force_classes(t: i64, inner: i64, outer: i64) -> usize {
    let mats = matrices_of_trace(t, outer);
    let index: HashMap<[i64; 4], usize> = mats.iter().enumerate().map(|(i, m)| (*m, i)).collect();
    let mut parent: Vec<usize> = (0..mats.len()).collect();
    let conj = |m: [i64; 4], g: [i64; 4], gi: [i64; 4]| -> [i64; 4] {
        let mul = |p: [i64; 4], q: [i64; 4]| {
            [p[0] * q[0] + p[1] * q[2], p[0] * q[1] + p[1] * q[3], p[2] * q[0] + p[3] * q[2], p[2] * q[1] + p[3] * q[3]]
        };
        mul(mul(g, m), gi)
    };
    let gens = [([0, -1, 1, 0], [0, 1, -1, 0]), ([1, 1, 0, 1], [1, -1, 0, 1]), ([1, -1, 0, 1], [1, 1, 0, 1])];
    for (i, m) in mats.iter().enumerate() {
        for (g, gi) in gens {
            let n = conj(*m, g, gi);
            if let Some(&j) = index.get(&n) {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, j));
                if ri != rj {
                    parent[ri] = rj;
                }
            }
        }
    }
    let mut roots = std::collections::HashSet::new();
    for (i, m) in mats.iter().enumerate() {
        if m.iter().all(|v| v.abs() <= inner) {
            roots.insert(find(&mut parent, i));
        }
    }
    roots.len()
}

/// `#{(a, b, c, d) : ad - bc = 1, a^2 + b^2 + c^2 + d^2 <= n} / 2` for every `n <= max`.
pub fn quadruple_counts(max: i64) -> Vec<u64> {
    let r = (max as f64).sqrt() as i64 + 1;
    let mut hist = vec![0u64; max as usize + 1];
    for a in -r..=r {
        for b in -r..=r {
            for c in -r..=r {
                let partial = a * a + b * b + c * c;
                if partial > max {
                    continue;
                }
                for d in -r..=r {
                    let s = partial + d * d;
                    if s <= max && a * d - b * c == 1 {
                        hist[s as usize] += 1;
                    }
                }
            }
        }
    }
    let mut acc = 0;
    hist.iter()
        .map(|h| {
            acc += h;
            acc / 2
        })
        .collect()
}
