//! Non-smooth geodesically convex optimization on Riemannian manifolds.
//!
//! The crate provides
//!
//! * closed-form geometry kernels (metric, distance, exponential/logarithmic
//!   maps, parallel transport) for Euclidean space, spheres, hyperbolic space
//!   in the hyperboloid model, symmetric positive definite matrices with the
//!   affine-invariant metric, the rotation groups, and power manifolds built
//!   from these ([`manifold`]),
//! * curvature comparison functions that turn sectional curvature bounds and
//!   a domain diameter into the transport remainder coefficient
//!   ([`curvature`]),
//! * a subgradient bundle with curvature-corrected linearization errors
//!   ([`bundle`]) and the simplex-constrained quadratic subproblem solver
//!   that aggregates it into a search direction ([`qp`]),
//! * the convex bundle solver itself plus a subgradient-method baseline
//!   ([`solver`]),
//! * benchmark objectives: Riemannian medians, total-variation signal
//!   denoising, and spectral Procrustes alignment ([`objectives`]),
//! * a benchmark harness that reproduces the experiment families at desk
//!   scale and emits machine-readable tables ([`bench`]).

pub mod bench;
pub mod bundle;
pub mod curvature;
pub mod error;
pub mod manifold;
pub mod objectives;
pub mod qp;
pub mod solver;

pub use bundle::{Bundle, BundleEntry};
pub use curvature::CurvatureProfile;
pub use error::{GeometryError, QpError, SolverError};
pub use manifold::{ManifoldKind, ManifoldPoint, TangentVector};
pub use qp::{SubproblemInput, SubproblemSolution};
pub use solver::{Problem, SolverParams, SolverReport, StepRule, Termination};
