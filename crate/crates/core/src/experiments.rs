//! Local averages of the orbit count, the sharp/smooth decomposition and the error-exponent fit.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::kernels::{psi0, SmoothedCutoff};
use crate::modular_group::{count, sum_over_ball_many};
use crate::quadrature::GaussLegendre;
use crate::spectral::{main_term, modular_group_data};

/// A smooth radial bump `f(z) = c psi0(rho(z, center)/radius)` with `∫_F f dμ = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct AveragingWeight {
    center: Point<f64>,
    radius: f64,
    normalization: f64,
}

impl AveragingWeight {
    /// Rejects discs that touch the boundary of the standard fundamental domain.
    pub fn new(center: Point<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::invalid(format!("radius must be positive, got {radius}")));
        }
        // The hyperbolic disc is the Euclidean disc about x0 + i y0 cosh r of radius y0 sinh r.
        let (x0, y0) = (center.x(), center.y());
        let (ec, er) = (y0 * radius.cosh(), y0 * radius.sinh());
        let side_gap = 0.5 - (x0.abs() + er);
        let arc_gap = x0.hypot(ec) - er - 1.0;
        if side_gap <= 0.0 || arc_gap <= 0.0 {
            return Err(Error::invalid(format!(
                "disc of radius {radius} about {center:?} is not inside the fundamental domain"
            )));
        }
        let mass = 2.0 * std::f64::consts::PI * GaussLegendre::new(64).integrate(|r: f64| psi0(r / radius) * r.sinh(), 0.0, radius);
        Ok(AveragingWeight { center, radius, normalization: mass.recip() })
    }

    pub fn center(&self) -> Point<f64> {
        self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn eval(&self, z: &Point<f64>) -> f64 {
        let rho = crate::geometry::distance(z, &self.center);
        self.normalization * psi0(rho / self.radius)
    }

    /// Scaled copy, so that `∫ f dμ = factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        AveragingWeight { normalization: self.normalization * factor, ..*self }
    }

    /// `∫_F f dμ` with the same rule as the averages.
    pub fn integral(&self, nodes: usize) -> Result<f64> {
        Ok(self.quadrature_nodes(nodes)?.iter().map(|n| n.1).sum())
    }

    /// Polar nodes about the center: Gauss–Legendre in `rho`, `2 nodes` equispaced angles.
    /// Each weight includes `f` and `sinh rho`.
    pub fn quadrature_nodes(&self, nodes: usize) -> Result<Vec<(Point<f64>, f64)>> {
        if nodes == 0 {
            return Err(Error::invalid("quadrature needs at least one node"));
        }
        let angles = 2 * nodes;
        let dphi = 2.0 * std::f64::consts::PI / angles as f64;
        let gl = GaussLegendre::new(nodes);
        let (x0, y0) = (self.center.x(), self.center.y());
        let mut out = Vec::with_capacity(nodes * angles);
        for (rho, w) in gl.mapped(0.0, self.radius) {
            let radial = w * rho.sinh() * self.normalization * psi0(rho / self.radius) * dphi;
            let t = (0.5 * rho).tanh();
            for k in 0..angles {
                let phi = (k as f64 + 0.5) * dphi;
                let (wr, wi) = (t * phi.cos(), t * phi.sin());
                // z = x0 + y0 i (1 + w)/(1 - w) maps the unit disc onto H with 0 -> center.
                let den = (1.0 - wr).powi(2) + wi * wi;
                let re = (1.0 - wr * wr - wi * wi) / den;
                let im = 2.0 * wi / den;
                out.push((Point::new(x0 - y0 * im, y0 * re)?, radial));
            }
        }
        Ok(out)
    }
}

impl Default for AveragingWeight {
    fn default() -> Self {
        AveragingWeight::new(Point::new(0.0, DEFAULT_CENTER_HEIGHT).expect("valid"), DEFAULT_RADIUS)
            .expect("default disc lies inside the domain")
    }
}

pub const DEFAULT_CENTER_HEIGHT: f64 = 1.3;
pub const DEFAULT_RADIUS: f64 = 0.2;
pub const DEFAULT_NODES: usize = 8;

/// `N_f(X) = ∫_F f(z) N(z, z, X) dμ`.
pub fn local_average_count(f: &AveragingWeight, x: f64, nodes: usize) -> Result<f64> {
    if !(x > 2.0) {
        return Err(Error::invalid(format!("X must exceed 2, got {x}")));
    }
    f.quadrature_nodes(nodes)?
        .par_iter()
        .map(|(z, w)| Ok(w * count(z, z, x)? as f64))
        .try_reduce(|| 0.0, |a, b| Ok(a + b))
}

/// The three averaged sums of `k = k* + (k - k*)` over one ball, plus the annulus population.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    pub sharp: f64,
    pub smooth: f64,
    pub remainder: f64,
    /// Averaged number of orbit points with `x e^{-d/x} <= u <= x e^{d/x}`.
    pub annulus: f64,
}

impl Decomposition {
    /// `|sharp - smooth - remainder| / max(1, |sharp|)`.
    pub fn defect(&self) -> f64 {
        (self.sharp - self.smooth - self.remainder).abs() / self.sharp.abs().max(1.0)
    }
}

/// Averages `k`, `k*` and `k - k*` with `x = (X - 2)/4` over a single enumeration at
/// `X' = 4 x e^{d/x} + 2`, which contains both supports.
pub fn decomposition_check(f: &AveragingWeight, x_big: f64, d: f64, nodes: usize) -> Result<Decomposition> {
    if !(x_big > 2.0) {
        return Err(Error::invalid(format!("X must exceed 2, got {x_big}")));
    }
    let x = (x_big - 2.0) / 4.0;
    let kernel = SmoothedCutoff::new(x, d)?;
    let (lo, hi) = (kernel.plateau_end(), kernel.support_end());
    let reach = 4.0 * hi + 2.0;
    let weight = |q: f64| {
        let u = (q - 2.0) / 4.0;
        let sharp = if q <= x_big { 1.0 } else { 0.0 };
        let smooth = kernel.eval(u);
        let annulus = if (lo..=hi).contains(&u) { 1.0 } else { 0.0 };
        [sharp, smooth, sharp - smooth, annulus]
    };
    let sums: Vec<[f64; 4]> = f
        .quadrature_nodes(nodes)?
        .par_iter()
        .map(|(z, w)| Ok(sum_over_ball_many(z, z, reach, &weight)?.map(|s| s * w)))
        .collect::<Result<_>>()?;
    let total = sums.iter().fold([0.0; 4], |mut acc, s| {
        for (a, b) in acc.iter_mut().zip(s) {
            *a += b;
        }
        acc
    });
    Ok(Decomposition { sharp: total[0], smooth: total[1], remainder: total[2], annulus: total[3] })
}

/// Least squares of `log |error|` on `log X`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExponentFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub points: usize,
}

pub fn error_exponent_fit(x_grid: &[f64], errors: &[f64]) -> Result<ExponentFit> {
    if x_grid.len() != errors.len() {
        return Err(Error::invalid("grid and error lists differ in length"));
    }
    let pts: Vec<(f64, f64)> = x_grid
        .iter()
        .zip(errors)
        .filter_map(|(&x, &e)| {
            if e == 0.0 {
                log::warn!("error vanishes at X = {x}; point excluded from the fit");
                None
            } else {
                Some((x.ln(), e.abs().ln()))
            }
        })
        .collect();
    if pts.len() < 4 {
        return Err(Error::invalid(format!("fit needs at least 4 nonzero errors, got {}", pts.len())));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit needs at least two distinct X values"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r2 = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(ExponentFit { slope, intercept, r2, points: pts.len() })
}

/// Disc parameters as stored in configuration files.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConfig {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
}

impl Default for WeightConfig {
    fn default() -> Self {
        WeightConfig { center_x: 0.0, center_y: DEFAULT_CENTER_HEIGHT, radius: DEFAULT_RADIUS }
    }
}

impl WeightConfig {
    pub fn build(&self) -> Result<AveragingWeight> {
        AveragingWeight::new(Point::new(self.center_x, self.center_y)?, self.radius)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub x_grid: Vec<f64>,
    /// `d = x^{d_exponent}`.
    pub d_exponent: f64,
    pub weight: WeightConfig,
    pub nodes: usize,
    pub output_dir: PathBuf,
    pub threads: Option<usize>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            x_grid: (0..=12).map(|k| 10f64.powf(3.0 + 0.25 * k as f64)).collect(),
            d_exponent: 0.75,
            weight: WeightConfig::default(),
            nodes: DEFAULT_NODES,
            output_dir: PathBuf::from("results"),
            threads: None,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.x_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        if self.x_grid.iter().any(|&x| !(x > 2.0) || !x.is_finite()) {
            return Err(Error::invalid("every X must be finite and exceed 2"));
        }
        if self.x_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("X grid must be strictly increasing"));
        }
        if !(self.d_exponent > 0.0 && self.d_exponent < 1.0) {
            return Err(Error::invalid(format!("d exponent must lie in (0, 1), got {}", self.d_exponent)));
        }
        if self.nodes == 0 {
            return Err(Error::invalid("nodes must be positive"));
        }
        if self.threads == Some(0) {
            return Err(Error::invalid("threads must be positive"));
        }
        self.weight.build().map(|_| ())
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(&fs::read_to_string(path)?)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One line of the results table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentRow {
    #[serde(rename = "X")]
    pub x: f64,
    #[serde(rename = "N_f")]
    pub n_f: f64,
    pub main_term: f64,
    pub error: f64,
    pub smooth_part: f64,
    pub remainder: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub rows: Vec<ExperimentRow>,
    pub fit: Option<ExponentFit>,
    pub fit_note: String,
    pub runtimes_seconds: Vec<f64>,
    pub total_seconds: f64,
    pub config: ExperimentConfig,
    pub csv_path: PathBuf,
    pub json_path: PathBuf,
}

/// One grid point. `N_f` is the sharp part of the decomposition, which averages the same
/// indicator as [`local_average_count`] over the same nodes.
pub fn experiment_row(f: &AveragingWeight, x_big: f64, d_exponent: f64, nodes: usize) -> Result<ExperimentRow> {
    let x = (x_big - 2.0) / 4.0;
    let dec = decomposition_check(f, x_big, x.powf(d_exponent), nodes)?;
    let mass = f.integral(nodes)?;
    let main = main_term(x_big, &modular_group_data())? * mass;
    Ok(ExperimentRow {
        x: x_big,
        n_f: dec.sharp,
        main_term: main,
        error: dec.sharp - main,
        smooth_part: dec.smooth,
        remainder: dec.remainder,
    })
}

/// Runs the grid, writes `experiment.csv` and `summary.json` into the output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    config.validate().map_err(|e| e.in_stage("configuration"))?;
    let run = || run_grid(config);
    match config.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::invalid(format!("thread pool: {e}")))?
            .install(run),
        None => run(),
    }
}

fn run_grid(config: &ExperimentConfig) -> Result<ExperimentSummary> {
    let start = Instant::now();
    let f = config.weight.build()?;
    let timed: Vec<(ExperimentRow, f64)> = config
        .x_grid
        .par_iter()
        .map(|&x| {
            let t = Instant::now();
            let row = experiment_row(&f, x, config.d_exponent, config.nodes).map_err(|e| e.in_stage("grid point"))?;
            log::info!("X = {x}: N_f = {}, error = {}", row.n_f, row.error);
            Ok((row, t.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;
    let (rows, runtimes_seconds): (Vec<_>, Vec<_>) = timed.into_iter().unzip();

    let (fit, fit_note) = if rows.len() < 4 {
        (None, format!("fit skipped: {} grid point(s), at least 4 needed", rows.len()))
    } else {
        let xs: Vec<f64> = rows.iter().map(|r| r.x).collect();
        let errs: Vec<f64> = rows.iter().map(|r| r.error).collect();
        match error_exponent_fit(&xs, &errs) {
            Ok(fit) => (Some(fit), "least squares of log|error| on log X".to_string()),
            Err(e) => (None, format!("fit skipped: {e}")),
        }
    };

    fs::create_dir_all(&config.output_dir).map_err(|e| Error::from(e).in_stage("output"))?;
    let csv_path = config.output_dir.join("experiment.csv");
    let json_path = config.output_dir.join("summary.json");
    let write_csv = || -> Result<()> {
        let mut wtr = csv::Writer::from_path(&csv_path)?;
        for r in &rows {
            wtr.serialize(r)?;
        }
        wtr.flush()?;
        Ok(())
    };
    write_csv().map_err(|e| e.in_stage("output"))?;
    let summary = ExperimentSummary {
        rows,
        fit,
        fit_note,
        runtimes_seconds,
        total_seconds: start.elapsed().as_secs_f64(),
        config: config.clone(),
        csv_path: csv_path.clone(),
        json_path: json_path.clone(),
    };
    let json = serde_json::to_string_pretty(&summary)?;
    fs::write(&json_path, json).map_err(|e| Error::from(e).in_stage("output"))?;
    Ok(summary)
}
