//! The convex bundle solver and a subgradient-method baseline.
//!
//! Each iteration solves the simplex subproblem over the bundle, aggregates
//! the search direction, and tries the trial step `exp_p(t d)` with `t`
//! backtracked until the candidate is interior and the geodesic has not
//! wrapped around. A candidate passing the descent test becomes the new
//! serious iterate; otherwise the step size shrinks further until the
//! curvature-corrected cutting-plane condition certifies a null step. The
//! stopping scalar `xi = -|g|^2 - epsilon - sigma` certifies approximate
//! stationarity once `-xi` falls below the tolerance.

use std::fmt;
use std::time::Instant;

use rand::RngCore;

use crate::bundle::{self, Bundle};
use crate::curvature::CurvatureProfile;
use crate::error::{QpError, SolverError};
use crate::manifold::{ManifoldKind, ManifoldPoint, TangentVector};
use crate::qp::{self, SubproblemInput};

/// A minimization problem on a manifold.
///
/// The objective must be finite on every point the domain oracle reports as
/// interior and may be `+inf` elsewhere. The subgradient oracle returns one
/// element of the subdifferential, based at its argument; it may be
/// randomized through the provided generator.
pub trait Problem {
    fn kind(&self) -> &ManifoldKind;
    fn objective(&self, p: &ManifoldPoint) -> f64;
    fn subgradient(
        &self,
        p: &ManifoldPoint,
        rng: &mut dyn RngCore,
    ) -> Result<TangentVector, crate::error::GeometryError>;
    fn is_interior(&self, p: &ManifoldPoint) -> bool;
    fn curvature(&self) -> CurvatureProfile;
}

/// Tunable parameters of the bundle solver.
#[derive(Debug, Clone)]
pub struct SolverParams {
    /// Descent-test coefficient `m` in (0, 1).
    pub descent_coefficient: f64,
    /// Step contraction factor `beta` in (0, 1).
    pub contraction: f64,
    /// Stopping tolerance on `-xi`.
    pub tolerance: f64,
    /// Outer iteration cap.
    pub max_iterations: usize,
    /// Maximum bundle size.
    pub bundle_cap: usize,
    /// Contractions allowed while searching for an interior trial step.
    pub domain_backtrack_cap: usize,
    /// Contractions allowed inside the null-step search.
    pub null_search_cap: usize,
    /// Record the aggregated subgradient of every iteration for posterior
    /// verification of the approximate-subgradient inequality.
    pub record_certificates: bool,
}

impl Default for SolverParams {
    fn default() -> Self {
        Self {
            descent_coefficient: 1e-3,
            contraction: 0.975,
            tolerance: 1e-8,
            max_iterations: 5000,
            bundle_cap: 25,
            domain_backtrack_cap: 100,
            null_search_cap: 50,
            record_certificates: false,
        }
    }
}

impl SolverParams {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |msg: String| Err(SolverError::InvalidParams(msg));
        if !(self.descent_coefficient > 0.0 && self.descent_coefficient < 1.0) {
            return bad(format!(
                "descent coefficient {} must lie in (0, 1)",
                self.descent_coefficient
            ));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return bad(format!(
                "contraction factor {} must lie in (0, 1)",
                self.contraction
            ));
        }
        if !(self.tolerance > 0.0) {
            return bad(format!("tolerance {} must be positive", self.tolerance));
        }
        if self.max_iterations == 0 || self.bundle_cap == 0 {
            return bad("iteration cap and bundle cap must be positive".to_string());
        }
        Ok(())
    }

    /// KKT tolerance for the subproblem, two orders tighter than the outer
    /// stopping tolerance and never looser than the default.
    fn qp_tolerance(&self) -> f64 {
        (self.tolerance * 1e-2).min(qp::DEFAULT_TOLERANCE)
    }
}

/// Why a solver run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    ToleranceMet,
    IterationCap,
    SubproblemFailure,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::ToleranceMet => write!(f, "tolerance_met"),
            Termination::IterationCap => write!(f, "iteration_cap"),
            Termination::SubproblemFailure => write!(f, "subproblem_failure"),
        }
    }
}

/// What one outer iteration did.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepType {
    Serious,
    Null,
    /// The terminating iteration; no step was taken.
    Final,
    /// A subgradient-method iteration.
    Subgradient,
}

impl fmt::Display for StepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepType::Serious => write!(f, "serious"),
            StepType::Null => write!(f, "null"),
            StepType::Final => write!(f, "final"),
            StepType::Subgradient => write!(f, "subgradient"),
        }
    }
}

/// Per-iteration record.
#[derive(Debug, Clone)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Objective at the serious iterate entering the iteration.
    pub objective: f64,
    /// Norm of the aggregated subgradient.
    pub direction_norm: f64,
    pub epsilon: f64,
    pub sigma: f64,
    pub xi: f64,
    pub step: StepType,
    /// Step size used for the appended candidate (zero on the final record).
    pub step_size: f64,
}

/// Aggregated subgradient of one iteration, kept for posterior checks of the
/// approximate-subgradient inequality.
#[derive(Debug, Clone)]
pub struct Certificate {
    pub point: ManifoldPoint,
    pub subgradient: TangentVector,
    pub epsilon: f64,
    pub sigma: f64,
}

/// Outcome of a solver run.
#[derive(Debug, Clone)]
pub struct SolverReport {
    pub final_point: ManifoldPoint,
    pub final_value: f64,
    pub iterations: usize,
    pub serious_steps: usize,
    pub null_steps: usize,
    pub termination: Termination,
    pub trace: Vec<TraceRecord>,
    /// Wall-clock seconds; everything else in the report is deterministic
    /// given the seed.
    pub wall_time: f64,
    /// Linearization errors clamped from below zero (non-convexity or oracle
    /// noise diagnostics).
    pub negative_error_clamps: usize,
    /// Null-step searches that hit their contraction cap.
    pub null_search_exhaustions: usize,
    pub certificates: Vec<Certificate>,
}

/// Runs the convex bundle method from `initial`.
///
/// Terminates once `-xi <= tolerance` (approximate stationarity), at the
/// iteration cap, or when the quadratic subproblem fails, in which case the
/// best (= last serious) iterate is reported with
/// [`Termination::SubproblemFailure`]. A failed domain backtracking search is
/// reported the same way: it signals that the minimizer may lie on the
/// domain boundary, which the method excludes by assumption.
pub fn rcbm(
    problem: &dyn Problem,
    initial: &ManifoldPoint,
    params: &SolverParams,
    rng: &mut dyn RngCore,
) -> Result<SolverReport, SolverError> {
    params.validate()?;
    if !problem.is_interior(initial) {
        return Err(SolverError::Precondition(
            "initial point is not interior to the domain".to_string(),
        ));
    }
    let start = Instant::now();
    let rho = problem.curvature().remainder_coefficient();
    let initial_value = problem.objective(initial);
    if !initial_value.is_finite() {
        return Err(SolverError::Precondition(format!(
            "objective is {initial_value} at the initial point"
        )));
    }
    let first_subgradient = problem.subgradient(initial, rng)?;
    let mut bundle = Bundle::new(
        initial.clone(),
        initial_value,
        first_subgradient,
        params.bundle_cap,
    )?;

    let mut trace = Vec::new();
    let mut certificates = Vec::new();
    let mut serious_steps = 0;
    let mut null_steps = 0;
    let mut null_search_exhaustions = 0;
    let mut termination = Termination::IterationCap;
    let mut iteration = 0;

    loop {
        let input = SubproblemInput::from_bundle(&bundle).map_err(SolverError::Geometry)?;
        let weights = match qp::solve_simplex_qp(&input, params.qp_tolerance()) {
            Ok(w) => w,
            Err(QpError::Stalled { residual, .. }) => {
                log::warn!("subproblem stalled at iteration {iteration} (residual {residual:.3e})");
                termination = Termination::SubproblemFailure;
                break;
            }
            Err(e) => return Err(e.into()),
        };
        let solution = qp::aggregate(&bundle, &input, &weights)?;
        debug_assert!(
            (solution.xi + solution.subgradient.norm().powi(2) + solution.epsilon + solution.sigma)
                .abs()
                <= 1e-8,
            "stationarity scalar identity violated"
        );
        if params.record_certificates {
            certificates.push(Certificate {
                point: bundle.serious_point().clone(),
                subgradient: solution.subgradient.clone(),
                epsilon: solution.epsilon,
                sigma: solution.sigma,
            });
        }

        if -solution.xi <= params.tolerance {
            trace.push(TraceRecord {
                iteration,
                objective: bundle.serious_value(),
                direction_norm: solution.subgradient.norm(),
                epsilon: solution.epsilon,
                sigma: solution.sigma,
                xi: solution.xi,
                step: StepType::Final,
                step_size: 0.0,
            });
            termination = Termination::ToleranceMet;
            break;
        }
        // The stationarity check precedes the cap so that a tie resolves to
        // the stronger certificate.
        if iteration == params.max_iterations {
            break;
        }

        let direction = solution.subgradient.scale(-1.0);
        let (step_size, candidate) =
            match domain_backtrack(problem, bundle.serious_point(), &direction, params) {
                Ok(pair) => pair,
                Err(SolverError::StepFailure { attempts, step }) => {
                    log::warn!(
                        "domain backtracking exhausted at iteration {iteration} \
                         ({attempts} contractions, residual step {step:.3e})"
                    );
                    termination = Termination::SubproblemFailure;
                    break;
                }
                Err(e) => return Err(e),
            };
        let candidate_value = problem.objective(&candidate);
        let candidate_subgradient = problem.subgradient(&candidate, rng)?;
        let serious_value = bundle.serious_value();

        let descent_target = serious_value + params.descent_coefficient * step_size * solution.xi;
        if candidate_value <= descent_target {
            bundle.set_weights(&weights);
            bundle.push_candidate(
                iteration + 1,
                candidate.clone(),
                candidate_subgradient,
                candidate_value,
                0.0,
                0.0,
            )?;
            bundle.refresh(&candidate, candidate_value, rho)?;
            bundle.purge();
            trace.push(TraceRecord {
                iteration,
                objective: serious_value,
                direction_norm: solution.subgradient.norm(),
                epsilon: solution.epsilon,
                sigma: solution.sigma,
                xi: solution.xi,
                step: StepType::Serious,
                step_size,
            });
            serious_steps += 1;
        } else {
            let outcome = null_step_search(
                problem,
                bundle.serious_point(),
                serious_value,
                &solution.subgradient,
                solution.xi,
                step_size,
                candidate,
                candidate_value,
                candidate_subgradient,
                rho,
                params,
                rng,
            )?;
            if outcome.exhausted {
                null_search_exhaustions += 1;
                log::warn!("null-step search hit its contraction cap at iteration {iteration}");
            }
            bundle.set_weights(&weights);
            if outcome.passed_descent_test {
                // A contracted candidate achieved sufficient decrease.
                bundle.push_candidate(
                    iteration + 1,
                    outcome.candidate.clone(),
                    outcome.subgradient,
                    outcome.value,
                    0.0,
                    0.0,
                )?;
                bundle.refresh(&outcome.candidate, outcome.value, rho)?;
                bundle.purge();
                trace.push(TraceRecord {
                    iteration,
                    objective: serious_value,
                    direction_norm: solution.subgradient.norm(),
                    epsilon: solution.epsilon,
                    sigma: solution.sigma,
                    xi: solution.xi,
                    step: StepType::Serious,
                    step_size: outcome.step_size,
                });
                serious_steps += 1;
            } else {
                bundle.push_candidate(
                    iteration + 1,
                    outcome.candidate,
                    outcome.subgradient,
                    outcome.value,
                    outcome.linearization_error,
                    outcome.remainder,
                )?;
                bundle.purge();
                trace.push(TraceRecord {
                    iteration,
                    objective: serious_value,
                    direction_norm: solution.subgradient.norm(),
                    epsilon: solution.epsilon,
                    sigma: solution.sigma,
                    xi: solution.xi,
                    step: StepType::Null,
                    step_size: outcome.step_size,
                });
                null_steps += 1;
            }
        }
        iteration += 1;
    }

    Ok(SolverReport {
        final_point: bundle.serious_point().clone(),
        final_value: bundle.serious_value(),
        iterations: iteration,
        serious_steps,
        null_steps,
        termination,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
        negative_error_clamps: bundle.negative_error_clamps(),
        null_search_exhaustions,
        certificates,
    })
}

/// Finds the largest `t = beta^j` whose trial point `exp_p(t d)` is interior
/// and whose geodesic has not wrapped around (`dist(p, q) >= t |d|` up to
/// relative slack).
pub fn domain_backtrack(
    problem: &dyn Problem,
    from: &ManifoldPoint,
    direction: &TangentVector,
    params: &SolverParams,
) -> Result<(f64, ManifoldPoint), SolverError> {
    let direction_norm = direction.norm();
    let mut t = 1.0;
    for _ in 0..=params.domain_backtrack_cap {
        let candidate = from.exp(&direction.scale(t))?;
        if problem.is_interior(&candidate) {
            let step_len = t * direction_norm;
            let travelled = from.distance(&candidate)?;
            // Exact equality holds only in exact arithmetic below the
            // injectivity radius; compare with relative slack.
            if travelled >= step_len - 1e-9 * step_len.max(1.0) {
                return Ok((t, candidate));
            }
        }
        t *= params.contraction;
    }
    Err(SolverError::StepFailure {
        attempts: params.domain_backtrack_cap,
        step: t / params.contraction,
    })
}

/// Result of the null-step search.
#[derive(Debug, Clone)]
pub struct NullStepOutcome {
    /// Final step size examined.
    pub step_size: f64,
    pub candidate: ManifoldPoint,
    pub value: f64,
    pub subgradient: TangentVector,
    pub linearization_error: f64,
    pub remainder: f64,
    /// A contracted candidate satisfied the descent test before the
    /// cutting-plane condition fired; the iteration is a serious step after
    /// all, at this smaller step size.
    pub passed_descent_test: bool,
    /// The contraction cap was reached before either condition was
    /// satisfied; the last candidate is returned regardless.
    pub exhausted: bool,
}

/// Backtracks the step size of a failed trial step until one of two exits
/// fires, re-invoking the oracle at every new candidate:
///
/// * the candidate satisfies the descent test `f(q) <= f(p) + m t xi`
///   after all (a serious step at a shorter step), or
/// * the candidate's cutting plane is strong enough despite the curvature
///   remainder, i.e. `m t xi < <P X_q, t d> - e - r` (a certified null
///   step).
///
/// This is the two-way bifurcation behind the contraction loop: checking
/// only the cutting-plane condition can contract straight through a
/// descent region and stall, because the remainder term `r` weakens every
/// cut by a fixed fraction of `|X| |log|`. In flat space the loop never
/// runs: with `r = 0` the failed descent test already implies the
/// cutting-plane condition.
#[allow(clippy::too_many_arguments)]
pub fn null_step_search(
    problem: &dyn Problem,
    serious_point: &ManifoldPoint,
    serious_value: f64,
    aggregated: &TangentVector,
    xi: f64,
    initial_step: f64,
    first_candidate: ManifoldPoint,
    first_value: f64,
    first_subgradient: TangentVector,
    rho: f64,
    params: &SolverParams,
    rng: &mut dyn RngCore,
) -> Result<NullStepOutcome, SolverError> {
    let direction = aggregated.scale(-1.0);
    let mut t = initial_step;
    let mut candidate = first_candidate;
    let mut value = first_value;
    let mut subgradient = first_subgradient;
    let m = params.descent_coefficient;

    for attempt in 0..=params.null_search_cap {
        // The initial candidate already failed the descent test; contracted
        // candidates get to retake it.
        if attempt > 0 && value <= serious_value + m * t * xi {
            let e = bundle::linearization_error(serious_value, value, &subgradient, serious_point)?;
            let r = bundle::remainder(rho, &subgradient, serious_point)?;
            return Ok(NullStepOutcome {
                step_size: t,
                candidate,
                value,
                subgradient,
                linearization_error: e,
                remainder: r,
                passed_descent_test: true,
                exhausted: false,
            });
        }
        let e = bundle::linearization_error(serious_value, value, &subgradient, serious_point)?;
        let r = bundle::remainder(rho, &subgradient, serious_point)?;
        let slope = subgradient.transport(serious_point)?.inner(&direction)?;
        let keep_shrinking = m * t * xi >= t * slope - e - r;
        if !keep_shrinking || attempt == params.null_search_cap {
            return Ok(NullStepOutcome {
                step_size: t,
                candidate,
                value,
                subgradient,
                linearization_error: e,
                remainder: r,
                passed_descent_test: false,
                exhausted: keep_shrinking,
            });
        }
        t *= params.contraction;
        candidate = serious_point.exp(&direction.scale(t))?;
        value = problem.objective(&candidate);
        subgradient = problem.subgradient(&candidate, rng)?;
    }
    unreachable!("loop returns at the contraction cap");
}

/// Step-size rule for the subgradient baseline.
#[derive(Debug, Clone, Copy)]
pub enum StepRule {
    /// Fixed step size.
    Constant(f64),
    /// `scale / (k + 1)`.
    InverseIteration(f64),
    /// `scale / sqrt(k + 1)`.
    InverseSqrt(f64),
}

impl StepRule {
    pub fn step_size(&self, k: usize) -> f64 {
        match self {
            StepRule::Constant(s) => *s,
            StepRule::InverseIteration(s) => s / (k as f64 + 1.0),
            StepRule::InverseSqrt(s) => s / (k as f64 + 1.0).sqrt(),
        }
    }
}

/// Subgradient method baseline: `p_{k+1} = exp_{p_k}(-t_k X_k)`, reporting
/// the best objective seen and the point achieving it.
pub fn sgm(
    problem: &dyn Problem,
    initial: &ManifoldPoint,
    rule: &StepRule,
    max_iterations: usize,
    rng: &mut dyn RngCore,
) -> Result<SolverReport, SolverError> {
    if !problem.is_interior(initial) {
        return Err(SolverError::Precondition(
            "initial point is not interior to the domain".to_string(),
        ));
    }
    let start = Instant::now();
    let mut current = initial.clone();
    let mut current_value = problem.objective(&current);
    let mut best_point = current.clone();
    let mut best_value = current_value;
    let mut trace = Vec::new();
    let mut termination = Termination::IterationCap;
    let mut iteration = 0;

    while iteration < max_iterations {
        let subgradient = problem.subgradient(&current, rng)?;
        let norm = subgradient.norm();
        let step_size = rule.step_size(iteration);
        trace.push(TraceRecord {
            iteration,
            objective: current_value,
            direction_norm: norm,
            epsilon: 0.0,
            sigma: 0.0,
            xi: 0.0,
            step: StepType::Subgradient,
            step_size,
        });
        if norm == 0.0 {
            termination = Termination::ToleranceMet;
            break;
        }
        // The exponential maps here never reject their input; the retry loop
        // guards problem-specific domain errors all the same.
        let mut step = subgradient.scale(-step_size);
        let mut shrink_attempts = 0;
        let next = loop {
            match current.exp(&step) {
                Ok(q) => break q,
                Err(e) if shrink_attempts < 30 => {
                    log::debug!("subgradient step rejected ({e}); contracting");
                    step = step.scale(0.5);
                    shrink_attempts += 1;
                }
                Err(e) => return Err(e.into()),
            }
        };
        current = next;
        current_value = problem.objective(&current);
        if current_value < best_value {
            best_value = current_value;
            best_point = current.clone();
        }
        iteration += 1;
    }

    Ok(SolverReport {
        final_point: best_point,
        final_value: best_value,
        iterations: iteration,
        serious_steps: iteration,
        null_steps: 0,
        termination,
        trace,
        wall_time: start.elapsed().as_secs_f64(),
        negative_error_clamps: 0,
        null_search_exhaustions: 0,
        certificates: Vec::new(),
    })
}

#[cfg(test)]
mod tests;
