//! End-to-end run of the averaged-count experiment on a small grid.

use hyperbolic_circle::experiments::{run_experiment, ExperimentConfig, WeightConfig};
use hyperbolic_circle::Error;

fn small_config(dir: &std::path::Path, grid: Vec<f64>) -> ExperimentConfig {
    ExperimentConfig { x_grid: grid, nodes: 4, output_dir: dir.to_path_buf(), threads: Some(1), ..Default::default() }
}

#[test]
fn small_grid_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let grid = vec![1e3, 2e3, 4e3, 8e3];
    let s = run_experiment(&small_config(dir.path(), grid.clone())).unwrap();
    assert_eq!(s.rows.len(), 4);
    assert!(s.fit.is_some(), "{}", s.fit_note);
    for (row, x) in s.rows.iter().zip(&grid) {
        assert_eq!(row.x, *x);
        assert!((row.n_f - row.smooth_part - row.remainder).abs() <= 1e-9 * row.n_f.max(1.0));
        assert!((row.error / row.main_term).abs() < 0.1);
    }
    let csv = std::fs::read_to_string(&s.csv_path).unwrap();
    assert!(csv.starts_with("X,N_f,main_term,error,smooth_part,remainder"));
    assert_eq!(csv.lines().count(), 5);
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&s.json_path).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn short_grid_skips_the_fit() {
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&small_config(dir.path(), vec![1e3, 2e3])).unwrap();
    assert!(s.fit.is_none());
    assert!(s.fit_note.contains("skipped"));
}

#[test]
fn bad_configurations_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let bad_grid = small_config(dir.path(), vec![1.0]);
    assert!(run_experiment(&bad_grid).unwrap_err().is_validation());
    let outside = ExperimentConfig {
        weight: WeightConfig { center_x: 0.0, center_y: 1.0, radius: 0.5 },
        ..small_config(dir.path(), vec![1e3])
    };
    let err: Error = run_experiment(&outside).unwrap_err();
    assert!(err.is_validation(), "{err}");
}
