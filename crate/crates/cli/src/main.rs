use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hyperbolic_circle::experiments::{
    error_exponent_fit, local_average_count, run_experiment, ExperimentConfig, WeightConfig,
};
use hyperbolic_circle::geodesics::{classes_up_to_norm, psi_from_records, write_table_csv, GeodesicCache};
use hyperbolic_circle::kernels::{
    g_transform, h_transform, m_transform, q_transform, SharpCutoff, SmoothedCutoff, TestFunction,
};
use hyperbolic_circle::modular_group::{count, enumerate_ball_arithmetic};
use hyperbolic_circle::spectral::{main_term, modular_group_data};
use hyperbolic_circle::traceformula::{verify_identity, AutomorphicWeight, QuadratureSpec};
use hyperbolic_circle::{Complex, Error, Point, SpectralParameter};

#[derive(Parser, Debug)]
#[command(name = "hcircle", version, about = "Hyperbolic lattice-point counting for PSL(2,Z)")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON experiment configuration; fields left out take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the output into this directory instead of standard output.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args, Debug, Clone, Copy)]
struct PairArgs {
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    zx: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    zy: f64,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    wx: f64,
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    wy: f64,
    /// Threshold on `4u(gz, w) + 2`.
    #[arg(long = "x")]
    big_x: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum TransformKind {
    Q,
    G,
    H,
    M,
}

#[derive(ValueEnum, Debug, Clone, Copy)]
enum KernelKind {
    /// `k`, the indicator of `[0, x]`.
    Sharp,
    /// `k*`.
    Smoothed,
    /// `k - k*`.
    Difference,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// N(z, w, X) by exact enumeration.
    Count(PairArgs),
    /// The elements of the orbit ball as CSV.
    Ball(PairArgs),
    /// Evaluate q, g, h or M transforms of a cutoff kernel.
    Transform {
        #[arg(long, value_enum)]
        kind: TransformKind,
        #[arg(long, value_enum, default_value = "difference")]
        kernel: KernelKind,
        #[arg(long)]
        x: f64,
        /// Smoothing width (default x^{3/4}).
        #[arg(long)]
        d: Option<f64>,
        /// Spectral parameter t for M (real part).
        #[arg(long, default_value_t = 0.0)]
        t: f64,
        /// Imaginary parameter it in (0, 1/2] for M, overriding --t.
        #[arg(long)]
        it: Option<f64>,
        /// Comma-separated evaluation points (v for q, a for g, r for h, T for M).
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        at: Vec<f64>,
    },
    /// Hyperbolic conjugacy classes with norm up to --max-norm.
    Geodesics {
        #[arg(long)]
        max_norm: f64,
        /// Directory for per-trace cached tables.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Both sides of the pretrace identity for m = k - k* and the constant weight.
    TraceCheck {
        #[arg(long, default_value_t = 20.0)]
        x: f64,
        #[arg(long, default_value_t = 5.0)]
        d: f64,
        /// Gauss–Legendre panels in the domain quadrature.
        #[arg(long, default_value_t = 128)]
        quad_n: usize,
        /// Geodesic table extent.
        #[arg(long, default_value_t = 1e4)]
        max_norm: f64,
    },
    /// The local average N_f(X) for the configured weight.
    Average {
        #[arg(long = "x")]
        big_x: f64,
        #[arg(long)]
        nodes: Option<usize>,
    },
    /// Fit log|error| against log X from a CSV with columns X and error.
    Fit {
        #[arg(long)]
        input: PathBuf,
    },
    /// Run the configured experiment grid.
    Run,
}

/// 2 for bad input, 3 for numerical failure.
fn exit_code(err: &anyhow::Error) -> u8 {
    let validation = err.chain().any(|c| match c.downcast_ref::<Error>() {
        Some(e) => e.is_validation(),
        None => c.downcast_ref::<clap::Error>().is_some(),
    });
    if validation || err.downcast_ref::<UsageError>().is_some() {
        2
    } else {
        3
    }
}

#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_json_file(path)
            .map_err(|e| usage(format!("configuration {}: {e}", path.display())))?,
        None => ExperimentConfig::default(),
    };
    if let Some(dir) = &cli.out_dir {
        cfg.output_dir = dir.clone();
    }
    if cli.threads.is_some() {
        cfg.threads = cli.threads;
    }
    Ok(cfg)
}

/// Standard output, or `<out-dir>/<name>` when an output directory is set.
fn sink(out_dir: Option<&Path>, name: &str) -> Result<Box<dyn Write>> {
    match out_dir {
        Some(dir) => {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
            let path = dir.join(name);
            let file = fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
            Ok(Box::new(io::BufWriter::new(file)))
        }
        None => Ok(Box::new(io::stdout().lock())),
    }
}

fn write_json(out_dir: Option<&Path>, name: &str, value: &serde_json::Value) -> Result<()> {
    let mut out = sink(out_dir, name)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn points(p: &PairArgs) -> Result<(Point, Point)> {
    Ok((Point::new(p.zx, p.zy)?, Point::new(p.wx, p.wy)?))
}

fn kernel(kind: KernelKind, x: f64, d: Option<f64>) -> Result<TestFunction> {
    let smoothed = || -> Result<SmoothedCutoff> {
        Ok(match d {
            Some(d) => SmoothedCutoff::new(x, d)?,
            None => SmoothedCutoff::with_default_d(x)?,
        })
    };
    Ok(match kind {
        KernelKind::Sharp => TestFunction::sharp(SharpCutoff::new(x)?),
        KernelKind::Smoothed => TestFunction::smoothed(smoothed()?),
        KernelKind::Difference => TestFunction::difference(&smoothed()?),
    })
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    let out_dir = cli.out_dir.as_deref();
    match &cli.command {
        Command::Count(p) => {
            let (z, w) = points(p)?;
            let n = count(&z, &w, p.big_x)?;
            let mut out = sink(out_dir, "count.csv")?;
            writeln!(out, "z_x,z_y,w_x,w_y,X,count")?;
            writeln!(out, "{},{},{},{},{},{}", p.zx, p.zy, p.wx, p.wy, p.big_x, n)?;
        }
        Command::Ball(p) => {
            let (z, w) = points(p)?;
            let ball = enumerate_ball_arithmetic(&z, &w, p.big_x)?;
            ball.write_csv(sink(out_dir, "ball.csv")?)?;
        }
        Command::Transform { kind, kernel: kk, x, d, t, it, at } => {
            let m = kernel(*kk, *x, *d)?;
            let param = match it {
                Some(s) => SpectralParameter::exceptional(*s)?,
                None => SpectralParameter::tempered(*t)?,
            };
            let mut out = sink(out_dir, "transform.csv")?;
            writeln!(out, "arg,value_re,value_im")?;
            for &a in at {
                let v: Complex = match kind {
                    TransformKind::Q => Complex::new(q_transform(&m, a)?, 0.0),
                    TransformKind::G => Complex::new(g_transform(&m, a)?, 0.0),
                    TransformKind::H => h_transform(&m, Complex::new(a, 0.0))?,
                    TransformKind::M => m_transform(&m, &param, a)?,
                };
                writeln!(out, "{a},{},{}", v.re, v.im)?;
            }
        }
        Command::Geodesics { max_norm, cache } => {
            let records = match cache {
                Some(dir) => GeodesicCache::new(dir)?.classes_up_to_norm(*max_norm)?,
                None => classes_up_to_norm(*max_norm)?,
            };
            log::info!("Psi({max_norm}) = {}", psi_from_records(&records, *max_norm));
            write_table_csv(&records, sink(out_dir, "geodesics.csv")?)?;
        }
        Command::TraceCheck { x, d, quad_n, max_norm } => {
            let m = TestFunction::difference(&SmoothedCutoff::new(*x, *d)?);
            let spectrum = classes_up_to_norm(*max_norm)?;
            let base = QuadratureSpec::default();
            let spec = QuadratureSpec::new(*quad_n, base.nodes, base.y_cap)?;
            let report = verify_identity(&m, &AutomorphicWeight::constant(), &spectrum, &spec)?;
            write_json(out_dir, "trace_check.json", &serde_json::to_value(&report)?)?;
        }
        Command::Average { big_x, nodes } => {
            let cfg = load_config(&cli)?;
            let f = cfg.weight.build()?;
            let nodes = nodes.unwrap_or(cfg.nodes);
            let n_f = local_average_count(&f, *big_x, nodes)?;
            let mass = f.integral(nodes)?;
            let main = main_term(*big_x, &modular_group_data())? * mass;
            let WeightConfig { center_x, center_y, radius } = cfg.weight;
            let value = serde_json::json!({
                "X": big_x,
                "N_f": n_f,
                "main_term": main,
                "error": n_f - main,
                "weight_integral": mass,
                "nodes": nodes,
                "weight": { "center_x": center_x, "center_y": center_y, "radius": radius },
            });
            write_json(out_dir, "average.json", &value)?;
        }
        Command::Fit { input } => {
            let mut rdr =
                csv::Reader::from_path(input).map_err(|e| usage(format!("reading {}: {e}", input.display())))?;
            let headers = rdr.headers().map_err(|e| usage(format!("reading {}: {e}", input.display())))?.clone();
            let col = |name: &str| headers.iter().position(|h| h == name);
            let (Some(ix), Some(ie)) = (col("X"), col("error")) else {
                return Err(usage("input CSV needs columns X and error"));
            };
            let (mut xs, mut errs) = (Vec::new(), Vec::new());
            for rec in rdr.records() {
                let rec = rec.map_err(|e| usage(format!("reading {}: {e}", input.display())))?;
                let parse = |i: usize| -> Result<f64> {
                    rec[i].trim().parse::<f64>().map_err(|e| usage(format!("bad number {:?}: {e}", &rec[i])))
                };
                xs.push(parse(ix)?);
                errs.push(parse(ie)?);
            }
            let fit = error_exponent_fit(&xs, &errs)?;
            write_json(out_dir, "fit.json", &serde_json::to_value(fit)?)?;
        }
        Command::Run => {
            let cfg = load_config(&cli)?;
            let summary = run_experiment(&cfg)?;
            let value = serde_json::json!({
                "csv": summary.csv_path,
                "json": summary.json_path,
                "fit": summary.fit,
                "fit_note": summary.fit_note,
                "total_seconds": summary.total_seconds,
            });
            serde_json::to_writer_pretty(io::stdout().lock(), &value)?;
            println!();
        }
    }
    Ok(())
}
