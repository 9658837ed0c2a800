//! Class counts by trace against a brute-force conjugacy partition of integer matrices.

mod common;

use common::brute_force_classes;
use hyperbolic_circle::geodesics::{class_count_by_trace, classes_up_to_norm, psi_geodesic};

#[test]
fn class_counts_match_brute_force_for_small_traces() {
    for t in 3..=12 {
        let brute = brute_force_classes(t, 40, 160);
        assert_eq!(class_count_by_trace(t).unwrap() as usize, brute, "trace {t}");
    }
}

#[test]
fn total_count_up_to_norm_200_matches_brute_force() {
    let recs = classes_up_to_norm(200.0).unwrap();
    let total: u64 = recs.iter().map(|r| r.class_count).sum();
    let max_t = recs.iter().map(|r| r.trace).max().unwrap();
    let brute: usize = (3..=max_t).map(|t| brute_force_classes(t, 40, 160)).sum();
    assert_eq!(total as usize, brute);
}

#[test]
fn prime_geodesic_desk_check() {
    let psi = psi_geodesic(1e5).unwrap();
    assert!((0.8..=1.2).contains(&(psi / 1e5)), "Psi(1e5)/1e5 = {}", psi / 1e5);
}
