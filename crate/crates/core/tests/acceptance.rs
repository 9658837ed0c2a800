//! Acceptance suite: one PASS/FAIL line per criterion, with the measured quantity and runtime.
//!
//! Set `ACCEPTANCE_ONLY=3,7` to run a subset.

mod common;

use std::time::{Duration, Instant};

use hyperbolic_circle::experiments::{run_experiment, ExperimentConfig};
use hyperbolic_circle::geodesics::{class_count_by_trace, classes_up_to_norm, psi_geodesic};
use hyperbolic_circle::kernels::{
    h_transform, m_transform, m_transform_sharp_log_form, SharpCutoff, SmoothedCutoff, TestFunction,
};
use hyperbolic_circle::modular_group::count;
use hyperbolic_circle::specfun::{complex_gamma, f_ode_residual, g_ode_residual};
use hyperbolic_circle::traceformula::{verify_identity, AutomorphicWeight, QuadratureSpec};
use hyperbolic_circle::{Complex, Point, SpectralParameter};

type Outcome = Result<(bool, String), String>;

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn fail(e: impl std::fmt::Display) -> String {
    e.to_string()
}

fn c1_small_counts() -> Outcome {
    let oracle = common::quadruple_counts(1000);
    let i = Point::i();
    let mut mismatches = Vec::new();
    for x in 2..=1000 {
        let got = count(&i, &i, x as f64).map_err(fail)?;
        if got != oracle[x] {
            mismatches.push((x, got, oracle[x]));
        }
    }
    let detail = match mismatches.first() {
        None => format!("997 thresholds agree, N(i,i,1000) = {}", oracle[1000]),
        Some((x, got, want)) => format!("{} mismatches, first X = {x}: {got} vs {want}", mismatches.len()),
    };
    Ok((mismatches.is_empty(), detail))
}

fn c2_large_count() -> Outcome {
    let z = Point::new(0.0, 2.0).map_err(fail)?;
    let x = 1e5;
    let n = count(&z, &z, x).map_err(fail)? as f64;
    let rel = (n - 3.0 * x).abs() / x;
    Ok((rel <= 0.05, format!("N(2i,2i,1e5) = {n}, |N - 3X|/X = {rel:.4}")))
}

fn c3_trace_identity() -> Outcome {
    let m = TestFunction::difference(&SmoothedCutoff::new(20.0, 5.0).map_err(fail)?);
    let spectrum = classes_up_to_norm(1e4).map_err(fail)?;
    let u = AutomorphicWeight::constant();
    let coarse = QuadratureSpec::new(128, 8, 10.0).map_err(fail)?;
    let a = verify_identity(&m, &u, &spectrum, &coarse).map_err(fail)?;
    let b = verify_identity(&m, &u, &spectrum, &coarse.refined()).map_err(fail)?;
    let drift = (a.geometric_lhs - b.geometric_lhs).norm();
    let ok = b.residual <= 1e-2 && drift <= 1e-2;
    Ok((
        ok,
        format!(
            "rhs = {:.6}, lhs = {:.6} (128 panels), {:.6} (256 panels), residual {:.2e}, refinement drift {:.2e}",
            b.rhs().re,
            a.geometric_lhs.re,
            b.geometric_lhs.re,
            b.residual,
            drift
        ),
    ))
}

fn c4_transform_forms() -> Outcome {
    let x = 40.0;
    let k = SharpCutoff::new(x).map_err(fail)?;
    let kf = TestFunction::sharp(k);
    let params = [
        SpectralParameter::tempered(0.0).map_err(fail)?,
        SpectralParameter::tempered(1.0).map_err(fail)?,
        SpectralParameter::tempered(2.0).map_err(fail)?,
        SpectralParameter::tempered(5.0).map_err(fail)?,
        SpectralParameter::tempered(9.5).map_err(fail)?,
    ];
    let mut worst: f64 = 0.0;
    for t in &params {
        for frac in [0.1, 0.3, 0.5, 0.7, 0.9] {
            let direct = m_transform(&kf, t, frac * x).map_err(fail)?;
            let log_form = m_transform_sharp_log_form(&k, t, frac * x).map_err(fail)?;
            worst = worst.max((direct - log_form).norm() / direct.norm().max(1.0));
        }
    }
    Ok((worst <= 1e-8, format!("x = {x}, worst relative gap {worst:.2e} over 25 points")))
}

fn c5_ode_residuals() -> Outcome {
    let params = [
        SpectralParameter::tempered(0.0).map_err(fail)?,
        SpectralParameter::tempered(1.0).map_err(fail)?,
        SpectralParameter::tempered(5.0).map_err(fail)?,
        SpectralParameter::tempered(9.5337).map_err(fail)?,
        SpectralParameter::exceptional(0.25).map_err(fail)?,
    ];
    let (mut worst_f, mut worst_g): (f64, f64) = (0.0, 0.0);
    let step = 1e-4;
    for t in &params {
        for k in 0..=28 {
            let theta = -1.4 + 0.1 * k as f64;
            worst_f = worst_f.max(f_ode_residual(theta, t, step).map_err(fail)?);
        }
        for k in 0..=39 {
            let r = 0.1 + 0.1 * k as f64;
            worst_g = worst_g.max(g_ode_residual(r, t, step).map_err(fail)?);
        }
    }
    let ok = worst_f <= 1e-6 && worst_g <= 1e-6;
    Ok((ok, format!("max f residual {worst_f:.2e}, max g residual {worst_g:.2e}")))
}

fn c6_moments() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut ok = true;
    for x in [1e3, 1e4] {
        for e in [0.75, 0.8] {
            let sc = SmoothedCutoff::new(x, f64::powf(x, e)).map_err(fail)?;
            let scaled = sc.moment().abs() / x.sqrt();
            ok &= scaled <= 1e-10;
            worst = worst.max(scaled);
        }
    }
    Ok((ok, format!("max |moment|/sqrt(x) = {worst:.2e}")))
}

fn lemma_42_parts(x: f64) -> Result<(f64, f64), String> {
    let d = x.powf(0.75);
    let m = TestFunction::smoothed(SmoothedCutoff::new(x, d).map_err(fail)?);
    let it = 0.25;
    let h = h_transform(&m, Complex::new(0.0, it)).map_err(fail)?;
    let ratio = complex_gamma(Complex::new(it, 0.0)).map_err(fail)?
        / complex_gamma(Complex::new(1.5 + it, 0.0)).map_err(fail)?;
    let main = ratio.re * std::f64::consts::PI.sqrt() * 2f64.powf(2.0 * it + 1.0) * x.powf(0.5 + it);
    let residual = (h - main).norm();
    let scale = x.sqrt() + x * (d / x).powi(2);
    Ok((residual, scale))
}

fn c7_exceptional_main_term() -> Outcome {
    let (r0, s0) = lemma_42_parts(1e3)?;
    let c = r0 / s0;
    let mut ok = true;
    let mut ratios = Vec::new();
    for x in [1e4, 1e5] {
        let (r, s) = lemma_42_parts(x)?;
        ratios.push(r / (c * s));
        ok &= r <= c * s;
    }
    Ok((ok, format!("C = {c:.4} at x = 1e3, residual/(C scale) at 1e4, 1e5 = {:.3}, {:.3}", ratios[0], ratios[1])))
}

fn c8_decay() -> Outcome {
    let (x, d) = (1e4, 1e3);
    let m = TestFunction::smoothed(SmoothedCutoff::new(x, d).map_err(fail)?);
    let knee = x / d;
    let top = 10.0 * knee;
    let samples = 400;
    let mut fitted: f64 = 0.0;
    let mut overall: f64 = 0.0;
    for k in 0..=samples {
        let r = top.powf(k as f64 / samples as f64);
        let h = h_transform(&m, Complex::new(r, 0.0)).map_err(fail)?.norm();
        let normalized = h * (d * r / x).powi(2) * x / d.powf(1.5);
        if r <= knee {
            fitted = fitted.max(normalized);
        }
        overall = overall.max(normalized);
    }
    let ok = overall <= 3.0 * fitted;
    Ok((
        ok,
        format!("fitted C = {fitted:.4} on r <= x/d, max over [1, 10x/d] = {overall:.4} ({:.2} C)", overall / fitted),
    ))
}

fn c9_geodesics() -> Outcome {
    let psi = psi_geodesic(1e5).map_err(fail)?;
    let mut bad = Vec::new();
    for t in 3..=12 {
        let ours = class_count_by_trace(t).map_err(fail)? as usize;
        let brute = common::brute_force_classes(t, 40, 160);
        if ours != brute {
            bad.push((t, ours, brute));
        }
    }
    let ratio = psi / 1e5;
    let ok = (0.8..=1.2).contains(&ratio) && bad.is_empty();
    Ok((ok, format!("Psi(1e5)/1e5 = {ratio:.4}, class-count mismatches for traces 3..12: {bad:?}")))
}

fn experiment_run() -> Result<hyperbolic_circle::experiments::ExperimentSummary, String> {
    let dir = std::env::temp_dir().join(format!("hcircle-acceptance-{}", std::process::id()));
    let cfg = ExperimentConfig { output_dir: dir.clone(), ..Default::default() };
    let summary = run_experiment(&cfg).map_err(fail);
    let _ = std::fs::remove_dir_all(&dir);
    summary
}

thread_local! {
    static SUMMARY: std::cell::OnceCell<Result<hyperbolic_circle::experiments::ExperimentSummary, String>> =
        const { std::cell::OnceCell::new() };
}

fn with_summary<T>(f: impl FnOnce(&hyperbolic_circle::experiments::ExperimentSummary) -> T) -> Result<T, String> {
    SUMMARY.with(|cell| cell.get_or_init(experiment_run).as_ref().map(f).map_err(Clone::clone))
}

fn c10_decomposition() -> Outcome {
    with_summary(|s| {
        let worst = s
            .rows
            .iter()
            .map(|r| (r.n_f - r.smooth_part - r.remainder).abs() / r.n_f.abs().max(1.0))
            .fold(0.0, f64::max);
        (worst <= 1e-9, format!("{} grid points, worst defect {worst:.2e}", s.rows.len()))
    })
}

fn c11_exponent_fit() -> Outcome {
    with_summary(|s| match &s.fit {
        Some(fit) => (
            fit.slope <= 0.80 && fit.r2 >= 0.5,
            format!("slope {:.4}, r^2 {:.4}, {} points, grid took {:.1} s", fit.slope, fit.r2, fit.points, s.total_seconds),
        ),
        None => (false, s.fit_note.clone()),
    })
}

fn main() {
    let criteria = [
        Criterion { id: 1, name: "count(i, i, X) equals the quadruple count for X = 2..1000", budget: Duration::from_secs(10), run: c1_small_counts },
        Criterion { id: 2, name: "N(2i, 2i, 1e5) within 5% of 3X", budget: Duration::from_secs(60), run: c2_large_count },
        Criterion { id: 3, name: "trace identity residual at (x, d) = (20, 5)", budget: Duration::from_secs(600), run: c3_trace_identity },
        Criterion { id: 4, name: "direct and logarithmic M-transform of the sharp cutoff agree", budget: Duration::from_secs(60), run: c4_transform_forms },
        Criterion { id: 5, name: "f and g satisfy their ODEs", budget: Duration::from_secs(60), run: c5_ode_residuals },
        Criterion { id: 6, name: "first moment of k* vanishes", budget: Duration::from_secs(60), run: c6_moments },
        Criterion { id: 7, name: "h* at it = 1/4 follows its main term with a frozen constant", budget: Duration::from_secs(120), run: c7_exceptional_main_term },
        Criterion { id: 8, name: "h*(r) decays like (x/(dr))^2 up to a factor 3", budget: Duration::from_secs(300), run: c8_decay },
        Criterion { id: 9, name: "prime geodesic sum and class counts", budget: Duration::from_secs(120), run: c9_geodesics },
        Criterion { id: 10, name: "sharp = smooth + remainder on the experiment grid", budget: Duration::from_secs(1800), run: c10_decomposition },
        Criterion { id: 11, name: "error exponent fit on the default grid", budget: Duration::from_secs(1800), run: c11_exponent_fit },
    ];
    let only: Option<Vec<u32>> =
        std::env::var("ACCEPTANCE_ONLY").ok().map(|s| s.split(',').filter_map(|p| p.trim().parse().ok()).collect());

    let mut failures = 0;
    for c in criteria.iter().filter(|c| only.as_ref().map_or(true, |o| o.contains(&c.id))) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok((ok, detail)) if elapsed > c.budget => {
                (false, format!("{detail}; over the {:.0} s budget (ok = {ok})", c.budget.as_secs_f64()))
            }
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        let tag = if passed { "PASS" } else { "FAIL" };
        println!("{tag} [{:>2}] {} ({:.2} s): {detail}", c.id, c.name, elapsed.as_secs_f64());
    }
    println!("{failures} criterion/criteria failed");
    if failures > 0 {
        std::process::exit(1);
    }
}
