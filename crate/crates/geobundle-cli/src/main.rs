//! Benchmark CLI: runs the median, denoising, and Procrustes experiment
//! families at configurable scale and emits comparison tables.
//!
//! Exit codes: 0 when every requested solver terminated with a certificate
//! or at its iteration cap, 1 on solver or I/O failure, 2 on bad arguments.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use geobundle::bench::{
    emit_csv, emit_markdown, emit_trace_csv, run, ExperimentConfig, ExperimentKind, SolverChoice,
};
use geobundle::manifold::ManifoldKind;

#[derive(Parser)]
#[command(
    name = "geobundle",
    about = "Non-smooth geodesically convex optimization benchmarks",
    version
)]
struct Cli {
    #[command(subcommand)]
    experiment: Experiment,
}

#[derive(Subcommand)]
enum Experiment {
    /// Riemannian geometric median of seeded random data points.
    Median(MedianArgs),
    /// Total-variation denoising of a square-wave signal on the hyperbolic
    /// plane.
    TvDenoise(TvDenoiseArgs),
    /// Spectral Procrustes alignment over the rotation group.
    Procrustes(ProcrustesArgs),
}

#[derive(Args)]
struct MedianArgs {
    /// Manifold family: euclidean | sphere | hyperbolic | spd
    #[arg(long, default_value = "hyperbolic")]
    manifold: String,
    /// Manifold dimension parameter.
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Number of data points.
    #[arg(long, default_value_t = 100)]
    n_data: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct TvDenoiseArgs {
    /// Inner manifold of the signal (the construction requires the
    /// hyperbolic plane).
    #[arg(long, default_value = "hyperbolic")]
    manifold: String,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Grid resolution of the square-wave construction.
    #[arg(long, default_value_t = 64)]
    signal_len: usize,
    /// Total-variation weight.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Args)]
struct ProcrustesArgs {
    /// Rows of the data matrices.
    #[arg(long, default_value_t = 100)]
    rows: usize,
    /// Columns of the data matrices (the rotation dimension).
    #[arg(long, default_value_t = 20)]
    cols: usize,
    #[command(flatten)]
    common: CommonArgs,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Csv,
    Markdown,
}

#[derive(Args)]
struct CommonArgs {
    /// Solvers to benchmark.
    #[arg(long, value_delimiter = ',', default_value = "rcbm,sgm")]
    solvers: Vec<SolverChoice>,
    /// Random seed; GEOBUNDLE_SEED is the fallback when the flag is absent.
    #[arg(long, env = "GEOBUNDLE_SEED", default_value_t = 42)]
    seed: u64,
    /// Descent-test coefficient of the bundle solver.
    #[arg(long)]
    m: Option<f64>,
    /// Step contraction factor.
    #[arg(long)]
    beta: Option<f64>,
    /// Stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Iteration cap of the bundle solver.
    #[arg(long)]
    max_iters: Option<usize>,
    /// Maximum bundle size.
    #[arg(long)]
    bundle_cap: Option<usize>,
    /// Iteration cap of the subgradient baseline.
    #[arg(long)]
    sgm_max_iters: Option<usize>,
    /// Output path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
    /// Timed repetitions per solver after the untimed warm-up.
    #[arg(long, default_value_t = 3)]
    reps: usize,
    /// Write per-iteration traces (objective-versus-iteration data) to this
    /// CSV path.
    #[arg(long)]
    trace: Option<PathBuf>,
}

fn parse_manifold(name: &str, dim: usize) -> Result<ManifoldKind, String> {
    match name {
        "euclidean" => Ok(ManifoldKind::Euclidean(dim)),
        "sphere" => Ok(ManifoldKind::Sphere(dim)),
        "hyperbolic" => Ok(ManifoldKind::Hyperbolic(dim)),
        "spd" => Ok(ManifoldKind::SymmetricPositiveDefinite(dim)),
        "so" => Ok(ManifoldKind::SpecialOrthogonal(dim)),
        other => Err(format!(
            "unknown manifold '{other}' (expected euclidean, sphere, hyperbolic, spd, or so)"
        )),
    }
}

fn build_config(cli: &Cli) -> Result<(ExperimentConfig, &CommonArgs), String> {
    let (mut config, common) = match &cli.experiment {
        Experiment::Median(args) => {
            let kind = parse_manifold(&args.manifold, args.dim)?;
            let mut config = ExperimentConfig::new(ExperimentKind::Median, kind, args.common.seed);
            config.n_data = args.n_data;
            (config, &args.common)
        }
        Experiment::TvDenoise(args) => {
            let kind = parse_manifold(&args.manifold, args.dim)?;
            let mut config =
                ExperimentConfig::new(ExperimentKind::TvDenoise, kind, args.common.seed);
            config.signal_len = args.signal_len;
            config.alpha = args.alpha;
            (config, &args.common)
        }
        Experiment::Procrustes(args) => {
            let kind = ManifoldKind::SpecialOrthogonal(args.cols.max(2));
            let mut config =
                ExperimentConfig::new(ExperimentKind::Procrustes, kind, args.common.seed);
            config.rows = args.rows;
            config.cols = args.cols;
            (config, &args.common)
        }
    };

    config.solvers = common.solvers.clone();
    config.reps = common.reps;
    if let Some(m) = common.m {
        config.params.descent_coefficient = m;
    }
    if let Some(beta) = common.beta {
        config.params.contraction = beta;
    }
    if let Some(tol) = common.tol {
        config.params.tolerance = tol;
    }
    if let Some(max_iters) = common.max_iters {
        config.params.max_iterations = max_iters;
    }
    if let Some(cap) = common.bundle_cap {
        config.params.bundle_cap = cap;
    }
    if let Some(sgm_iters) = common.sgm_max_iters {
        config.sgm_max_iterations = sgm_iters;
    }
    config.validate().map_err(|e| e.to_string())?;
    Ok((config, common))
}

fn write_output(path: Option<&PathBuf>, content: &str) -> Result<(), String> {
    match path {
        Some(path) => std::fs::write(path, content)
            .map_err(|e| format!("cannot write {}: {e}", path.display())),
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::init();
    let cli = Cli::parse();
    let (config, common) = match build_config(&cli) {
        Ok(pair) => pair,
        Err(message) => {
            eprintln!("error: {message}");
            return ExitCode::from(2);
        }
    };

    let output = match run(&config) {
        Ok(output) => output,
        Err(error) => {
            eprintln!("error: {error}");
            return ExitCode::from(1);
        }
    };

    let table = match common.format {
        OutputFormat::Csv => emit_csv(&output.rows),
        OutputFormat::Markdown => emit_markdown(&output.rows),
    };
    if let Err(message) = write_output(common.out.as_ref(), &table) {
        eprintln!("error: {message}");
        return ExitCode::from(1);
    }
    if let Some(trace_path) = &common.trace {
        let trace = emit_trace_csv(&output.traces);
        if let Err(message) = write_output(Some(trace_path), &trace) {
            eprintln!("error: {message}");
            return ExitCode::from(1);
        }
    }

    if output.all_solvers_succeeded() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
