//! Benchmark harness: builds the experiment families at configurable scale,
//! runs the requested solvers with a warm-up plus timed repetitions, and
//! emits machine-readable comparison tables.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::SolverError;
use crate::manifold::ManifoldKind;
use crate::objectives::{mse, square_wave_signal, MedianProblem, ProcrustesProblem, TvProblem};
use crate::solver::{rcbm, sgm, Problem, SolverParams, SolverReport, StepRule, TraceRecord};

/// The three experiment families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    Median,
    TvDenoise,
    Procrustes,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentKind::Median => write!(f, "median"),
            ExperimentKind::TvDenoise => write!(f, "tv-denoise"),
            ExperimentKind::Procrustes => write!(f, "procrustes"),
        }
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(ExperimentKind::Median),
            "tv-denoise" => Ok(ExperimentKind::TvDenoise),
            "procrustes" => Ok(ExperimentKind::Procrustes),
            other => Err(format!("unknown experiment '{other}'")),
        }
    }
}

/// Which solvers to benchmark.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    Rcbm,
    Sgm,
}

impl fmt::Display for SolverChoice {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverChoice::Rcbm => write!(f, "rcbm"),
            SolverChoice::Sgm => write!(f, "sgm"),
        }
    }
}

impl FromStr for SolverChoice {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rcbm" => Ok(SolverChoice::Rcbm),
            "sgm" => Ok(SolverChoice::Sgm),
            other => Err(format!("unknown solver '{other}'")),
        }
    }
}

/// Full description of one benchmark cell.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// Manifold of the median experiment, or the inner manifold of the
    /// denoising signal. Ignored by the Procrustes experiment, whose
    /// manifold is `SO(cols)`.
    pub manifold: ManifoldKind,
    pub solvers: Vec<SolverChoice>,
    pub seed: u64,
    /// Median: number of data points.
    pub n_data: usize,
    /// Denoising: grid resolution of the square-wave construction.
    pub signal_len: usize,
    /// Denoising: total-variation weight.
    pub alpha: f64,
    /// Denoising: noise level applied to the clean signal.
    pub noise_stddev: f64,
    /// Procrustes: matrix shape.
    pub rows: usize,
    pub cols: usize,
    pub params: SolverParams,
    /// Iteration cap of the subgradient baseline (it has no stationarity
    /// certificate, so it usually needs far more iterations).
    pub sgm_max_iterations: usize,
    pub sgm_step: StepRule,
    /// Timed repetitions after the untimed warm-up call.
    pub reps: usize,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind, manifold: ManifoldKind, seed: u64) -> Self {
        Self {
            experiment,
            manifold,
            solvers: vec![SolverChoice::Rcbm, SolverChoice::Sgm],
            seed,
            n_data: 100,
            signal_len: 64,
            alpha: 0.5,
            noise_stddev: 0.1,
            rows: 100,
            cols: 20,
            params: SolverParams::default(),
            sgm_max_iterations: 10_000,
            sgm_step: StepRule::InverseSqrt(0.1),
            reps: 3,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidParams(msg));
        if self.solvers.is_empty() {
            return bad("at least one solver is required".to_string());
        }
        self.params.validate()?;
        self.manifold.validate().map_err(SolverError::Geometry)?;
        match self.experiment {
            ExperimentKind::Median => {
                if self.n_data == 0 {
                    return bad("median needs at least one data point".to_string());
                }
                if matches!(
                    self.manifold,
                    ManifoldKind::SpecialOrthogonal(_) | ManifoldKind::Power(_, _)
                ) {
                    return bad(format!(
                        "median benchmark supports euclidean, hyperbolic, spd, and sphere manifolds, not {}",
                        self.manifold
                    ));
                }
            }
            ExperimentKind::TvDenoise => {
                if self.manifold != ManifoldKind::Hyperbolic(2) {
                    return bad(
                        "the square-wave construction lives on the hyperbolic plane; use --manifold hyperbolic --dim 2"
                            .to_string(),
                    );
                }
                if self.signal_len < 8 {
                    return bad("signal length must be at least 8".to_string());
                }
                if self.alpha < 0.0 {
                    return bad("alpha must be nonnegative".to_string());
                }
            }
            ExperimentKind::Procrustes => {
                if self.cols < 2 || self.rows < self.cols {
                    return bad(format!(
                        "procrustes needs rows >= cols >= 2, got {}x{}",
                        self.rows, self.cols
                    ));
                }
            }
        }
        Ok(())
    }

    /// The integer reported in the `dim` column: manifold dimension for
    /// medians, signal length for denoising, rotation dimension for
    /// Procrustes.
    pub fn dimension(&self) -> usize {
        match self.experiment {
            ExperimentKind::Median => match &self.manifold {
                ManifoldKind::Euclidean(n)
                | ManifoldKind::Sphere(n)
                | ManifoldKind::Hyperbolic(n)
                | ManifoldKind::SymmetricPositiveDefinite(n) => *n,
                ManifoldKind::SpecialOrthogonal(d) => *d,
                ManifoldKind::Power(_, count) => *count,
            },
            ExperimentKind::TvDenoise => self.signal_len,
            ExperimentKind::Procrustes => self.cols,
        }
    }
}

/// One output table row.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub solver: String,
    pub manifold: String,
    pub dim: usize,
    pub iterations: usize,
    pub wall_time_sec: f64,
    pub final_objective: f64,
    pub error_metric: Option<f64>,
    pub termination: String,
    pub seed: u64,
}

/// Everything a benchmark run produces: the table rows, the per-iteration
/// traces of the warm-up calls, and their full reports.
#[derive(Debug)]
pub struct RunOutput {
    pub rows: Vec<ReportRow>,
    pub traces: Vec<(String, Vec<TraceRecord>)>,
    pub reports: Vec<(SolverChoice, SolverReport)>,
}

impl RunOutput {
    /// True when every requested solver finished with a certificate or at
    /// its iteration cap (the exit-code criterion of the harness).
    pub fn all_solvers_succeeded(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.termination == "tolerance_met" || r.termination == "iteration_cap")
    }
}

fn oracle_seed(seed: u64, solver: SolverChoice) -> u64 {
    seed.wrapping_add(match solver {
        SolverChoice::Rcbm => 0x5eed_0001,
        SolverChoice::Sgm => 0x5eed_0002,
    })
}

/// Runs one benchmark cell: per solver, one untimed warm-up call that
/// records iterations, objective, and trace, then `reps` timed repetitions
/// whose median wall time fills the table. Fully deterministic given the
/// seed except for the timing column.
pub fn run(config: &ExperimentConfig) -> Result<RunOutput, SolverError> {
    config.validate()?;
    let mut data_rng = ChaCha8Rng::seed_from_u64(config.seed);

    enum Instance {
        Median(MedianProblem),
        Tv {
            problem: TvProblem,
            clean: crate::manifold::ManifoldPoint,
        },
        Procrustes(ProcrustesProblem),
    }

    let (instance, initial) = match config.experiment {
        ExperimentKind::Median => {
            let problem = match &config.manifold {
                ManifoldKind::Sphere(n) => {
                    MedianProblem::sphere_cap(*n, config.n_data, &mut data_rng)
                }
                kind => MedianProblem::gaussian_hadamard(kind, config.n_data, 1.0, &mut data_rng),
            }
            .map_err(SolverError::Geometry)?;
            let initial = problem.initial_point().clone();
            (Instance::Median(problem), initial)
        }
        ExperimentKind::TvDenoise => {
            let (clean, noisy) = square_wave_signal(
                -6.0,
                6.0,
                3.0,
                config.signal_len,
                config.noise_stddev,
                &mut data_rng,
            )
            .map_err(SolverError::Geometry)?;
            let problem =
                TvProblem::new(noisy.clone(), config.alpha).map_err(SolverError::Geometry)?;
            (Instance::Tv { problem, clean }, noisy)
        }
        ExperimentKind::Procrustes => {
            let problem =
                ProcrustesProblem::random_instance(config.rows, config.cols, &mut data_rng)
                    .map_err(SolverError::Geometry)?;
            let initial = problem
                .schoenemann_initial()
                .map_err(SolverError::Geometry)?;
            (Instance::Procrustes(problem), initial)
        }
    };

    let problem: &dyn Problem = match &instance {
        Instance::Median(p) => p,
        Instance::Tv { problem, .. } => problem,
        Instance::Procrustes(p) => p,
    };
    let manifold_name = problem.kind().to_string();

    let mut rows = Vec::new();
    let mut traces = Vec::new();
    let mut reports = Vec::new();
    for &solver in &config.solvers {
        let run_once = |rng_seed: u64| -> Result<SolverReport, SolverError> {
            let mut oracle_rng = ChaCha8Rng::seed_from_u64(rng_seed);
            match solver {
                SolverChoice::Rcbm => rcbm(problem, &initial, &config.params, &mut oracle_rng),
                SolverChoice::Sgm => sgm(
                    problem,
                    &initial,
                    &config.sgm_step,
                    config.sgm_max_iterations,
                    &mut oracle_rng,
                ),
            }
        };

        let warmup = run_once(oracle_seed(config.seed, solver))?;
        let mut times: Vec<f64> = Vec::with_capacity(config.reps);
        for _ in 0..config.reps {
            let rep = run_once(oracle_seed(config.seed, solver))?;
            times.push(rep.wall_time);
        }
        times.sort_by(|a, b| a.partial_cmp(b).expect("finite timings"));
        let wall_time_sec = if times.is_empty() {
            warmup.wall_time
        } else {
            times[times.len() / 2]
        };

        let error_metric = match &instance {
            Instance::Tv { clean, .. } => {
                Some(mse(&warmup.final_point, clean).map_err(SolverError::Geometry)?)
            }
            _ => None,
        };

        rows.push(ReportRow {
            solver: solver.to_string(),
            manifold: manifold_name.clone(),
            dim: config.dimension(),
            iterations: warmup.iterations,
            wall_time_sec,
            final_objective: warmup.final_value,
            error_metric,
            termination: warmup.termination.to_string(),
            seed: config.seed,
        });
        traces.push((solver.to_string(), warmup.trace.clone()));
        reports.push((solver, warmup));
    }

    Ok(RunOutput {
        rows,
        traces,
        reports,
    })
}

pub const CSV_HEADER: &str =
    "solver,manifold,dim,iterations,time_sec,objective,error,termination,seed";

fn format_float(v: f64) -> String {
    // 17 significant digits: round-trips f64 exactly and satisfies the
    // >= 10 significant digit contract of the table format.
    format!("{v:.16e}")
}

/// Serializes rows as CSV with a fixed header, `.` decimal points, and
/// line-feed terminators.
pub fn emit_csv(rows: &[ReportRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            row.solver,
            row.manifold,
            row.dim,
            row.iterations,
            row.wall_time_sec,
            format_float(row.final_objective),
            row.error_metric.map(format_float).unwrap_or_default(),
            row.termination,
            row.seed,
        ));
    }
    out
}

/// Renders the same columns as a Markdown pipe table.
pub fn emit_markdown(rows: &[ReportRow]) -> String {
    let mut out = String::from(
        "| solver | manifold | dim | iterations | time_sec | objective | error | termination | seed |\n\
         |---|---|---|---|---|---|---|---|---|\n",
    );
    for row in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
            row.solver,
            row.manifold,
            row.dim,
            row.iterations,
            row.wall_time_sec,
            format_float(row.final_objective),
            row.error_metric.map(format_float).unwrap_or_default(),
            row.termination,
            row.seed,
        ));
    }
    out
}

/// Per-iteration trace table (objective-versus-iteration plots are drawn
/// from this file).
pub fn emit_trace_csv(traces: &[(String, Vec<TraceRecord>)]) -> String {
    let mut out =
        String::from("solver,iteration,objective,direction_norm,epsilon,sigma,xi,step,step_size\n");
    for (solver, records) in traces {
        for r in records {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{}\n",
                solver,
                r.iteration,
                format_float(r.objective),
                format_float(r.direction_norm),
                format_float(r.epsilon),
                format_float(r.sigma),
                format_float(r.xi),
                r.step,
                r.step_size,
            ));
        }
    }
    out
}

/// Parses a table emitted by [`emit_csv`]; the round trip is exact at the
/// string level.
pub fn parse_csv(text: &str) -> Result<Vec<ReportRow>, String> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let mut rows = Vec::new();
    for (idx, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(format!(
                "row {idx}: expected 9 fields, got {}",
                fields.len()
            ));
        }
        let parse_f64 =
            |s: &str| -> Result<f64, String> { s.parse().map_err(|e| format!("row {idx}: {e}")) };
        rows.push(ReportRow {
            solver: fields[0].to_string(),
            manifold: fields[1].to_string(),
            dim: fields[2].parse().map_err(|e| format!("row {idx}: {e}"))?,
            iterations: fields[3].parse().map_err(|e| format!("row {idx}: {e}"))?,
            wall_time_sec: parse_f64(fields[4])?,
            final_objective: parse_f64(fields[5])?,
            error_metric: if fields[6].is_empty() {
                None
            } else {
                Some(parse_f64(fields[6])?)
            },
            termination: fields[7].to_string(),
            seed: fields[8].parse().map_err(|e| format!("row {idx}: {e}"))?,
        });
    }
    Ok(rows)
}

/// True when the termination string counts as success for the exit code.
pub fn termination_is_success(termination: &str) -> bool {
    termination == "tolerance_met" || termination == "iteration_cap"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_rows() -> Vec<ReportRow> {
        vec![
            ReportRow {
                solver: "rcbm".to_string(),
                manifold: "Hyperbolic(2)".to_string(),
                dim: 2,
                iterations: 17,
                wall_time_sec: 0.0123,
                final_objective: 1.05192,
                error_metric: None,
                termination: "tolerance_met".to_string(),
                seed: 42,
            },
            ReportRow {
                solver: "sgm".to_string(),
                manifold: "Hyperbolic(2)^64".to_string(),
                dim: 64,
                iterations: 5000,
                wall_time_sec: 1.25,
                final_objective: 0.14023,
                error_metric: Some(0.013692),
                termination: "iteration_cap".to_string(),
                seed: 42,
            },
        ]
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rows = sample_rows();
        let text = emit_csv(&rows);
        let parsed = parse_csv(&text).unwrap();
        assert_eq!(emit_csv(&parsed), text);
    }

    #[test]
    fn empty_rows_produce_a_header_only_table() {
        assert_eq!(emit_csv(&[]), format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn single_row_layout() {
        let rows = vec![sample_rows().remove(0)];
        let text = emit_csv(&rows);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0], CSV_HEADER);
        assert!(lines[1].starts_with("rcbm,Hyperbolic(2),2,17,"));
    }

    #[test]
    fn objectives_carry_enough_digits() {
        let text = emit_csv(&sample_rows());
        // 1.05192 printed with 17 significant digits
        assert!(text.contains("1.0519200000000000e0"), "{text}");
    }

    #[test]
    fn markdown_renders_the_same_columns() {
        let md = emit_markdown(&sample_rows());
        let header_cols = md.lines().next().unwrap().matches('|').count();
        assert_eq!(header_cols, 10);
        assert!(md.contains("| rcbm |"));
        assert!(md.contains("| sgm |"));
    }

    #[test]
    fn malformed_tables_are_rejected() {
        assert!(parse_csv("not,a,header\n").is_err());
        let missing_fields = format!("{CSV_HEADER}\nrcbm,Euclidean(1),1\n");
        assert!(parse_csv(&missing_fields).is_err());
        let bad_number = format!("{CSV_HEADER}\nrcbm,Euclidean(1),1,x,0.1,1.0,,tolerance_met,1\n");
        assert!(parse_csv(&bad_number).is_err());
    }

    #[test]
    fn experiment_and_solver_names_parse() {
        assert_eq!(
            "median".parse::<ExperimentKind>().unwrap(),
            ExperimentKind::Median
        );
        assert_eq!(
            "tv-denoise".parse::<ExperimentKind>().unwrap(),
            ExperimentKind::TvDenoise
        );
        assert!("tv".parse::<ExperimentKind>().is_err());
        assert_eq!("rcbm".parse::<SolverChoice>().unwrap(), SolverChoice::Rcbm);
        assert!("newton".parse::<SolverChoice>().is_err());
    }

    #[test]
    fn config_validation() {
        let mut config =
            ExperimentConfig::new(ExperimentKind::Median, ManifoldKind::Hyperbolic(2), 1);
        assert!(config.validate().is_ok());
        config.solvers.clear();
        assert!(config.validate().is_err());

        let tv_wrong =
            ExperimentConfig::new(ExperimentKind::TvDenoise, ManifoldKind::Euclidean(1), 1);
        assert!(tv_wrong.validate().is_err());

        let mut pro = ExperimentConfig::new(
            ExperimentKind::Procrustes,
            ManifoldKind::SpecialOrthogonal(20),
            1,
        );
        pro.rows = 10;
        pro.cols = 20;
        assert!(pro.validate().is_err());
    }

    #[test]
    fn median_cell_is_deterministic_and_consistent() {
        let mut config =
            ExperimentConfig::new(ExperimentKind::Median, ManifoldKind::Euclidean(2), 7);
        config.n_data = 12;
        config.reps = 1;
        config.sgm_max_iterations = 500;
        let a = run(&config).unwrap();
        let b = run(&config).unwrap();
        assert_eq!(a.rows.len(), 2);
        for (ra, rb) in a.rows.iter().zip(&b.rows) {
            assert_eq!(ra.solver, rb.solver);
            assert_eq!(ra.iterations, rb.iterations);
            assert_eq!(ra.final_objective, rb.final_objective);
            assert_eq!(ra.termination, rb.termination);
        }
        assert!(a.all_solvers_succeeded());
    }
}
