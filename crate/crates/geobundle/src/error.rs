//! Error types shared across the crate.

use thiserror::Error;

/// Errors raised by the geometry kernels.
#[derive(Debug, Clone, Error)]
pub enum GeometryError {
    /// Two values live on different manifolds.
    #[error("manifold kind mismatch: {expected} vs {found}")]
    KindMismatch { expected: String, found: String },

    /// A binary tangent operation received vectors based at different points.
    #[error("tangent vectors are based at different points on {kind}")]
    BaseMismatch { kind: String },

    /// The requested map is undefined at or beyond the cut locus.
    #[error("{manifold}: {detail}")]
    CutLocus {
        manifold: &'static str,
        detail: String,
    },

    /// A value violates the representation invariants of its manifold.
    #[error("invalid {what}: {detail}")]
    Invalid { what: &'static str, detail: String },
}

/// Errors raised by the simplex quadratic subproblem solver.
#[derive(Debug, Clone, Error)]
pub enum QpError {
    /// The input matrices violate the subproblem contract.
    #[error("invalid subproblem input: {0}")]
    InvalidInput(String),

    /// The active-set iteration budget was exhausted before reaching the
    /// requested KKT tolerance. Carries the best iterate found.
    #[error(
        "simplex QP stalled after {iterations} working-set changes (KKT residual {residual:.3e})"
    )]
    Stalled {
        iterations: usize,
        residual: f64,
        best: Vec<f64>,
    },
}

/// Errors raised by the outer solvers.
#[derive(Debug, Error)]
pub enum SolverError {
    /// A solver precondition was violated (e.g. the initial point is not
    /// interior to the domain).
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// Invalid solver parameters.
    #[error("invalid solver parameter: {0}")]
    InvalidParams(String),

    /// The domain backtracking loop exhausted its cap; the minimizer may lie
    /// on the boundary of the domain.
    #[error("domain backtracking exhausted after {attempts} contractions (step {step:.3e})")]
    StepFailure { attempts: usize, step: f64 },

    #[error(transparent)]
    Geometry(#[from] GeometryError),

    #[error(transparent)]
    Subproblem(#[from] QpError),
}
