//! Python bindings: manifold kernels, curvature comparison functions, and
//! the bundle/subgradient solvers on median problems.
//!
//! Points and tangent vectors cross the boundary as flat ambient coordinate
//! lists (column-major entries for the matrix manifolds), matching the
//! storage convention of the core crate.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use geobundle::curvature::{shrink, stretch, CurvatureProfile};
use geobundle::manifold::{
    canonical_base_point, random_point, random_tangent, ManifoldKind, ManifoldPoint, TangentVector,
};
use geobundle::objectives::{curvature_bounds_for, MedianProblem};
use geobundle::solver::{rcbm, sgm, SolverParams, SolverReport, StepRule};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_kind(name: &str, dim: usize) -> PyResult<ManifoldKind> {
    let kind = match name {
        "euclidean" => ManifoldKind::Euclidean(dim),
        "sphere" => ManifoldKind::Sphere(dim),
        "hyperbolic" => ManifoldKind::Hyperbolic(dim),
        "spd" => ManifoldKind::SymmetricPositiveDefinite(dim),
        "so" => ManifoldKind::SpecialOrthogonal(dim),
        other => {
            return Err(value_error(format!(
                "unknown manifold '{other}' (expected euclidean, sphere, hyperbolic, spd, or so)"
            )))
        }
    };
    kind.validate().map_err(value_error)?;
    Ok(kind)
}

/// One of the supported manifolds; all geometry goes through its methods.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Manifold {
    kind: ManifoldKind,
}

impl Manifold {
    fn point(&self, coords: Vec<f64>) -> PyResult<ManifoldPoint> {
        ManifoldPoint::new(self.kind.clone(), coords).map_err(value_error)
    }

    fn tangent(&self, base: Vec<f64>, coords: Vec<f64>) -> PyResult<TangentVector> {
        TangentVector::new(self.point(base)?, coords).map_err(value_error)
    }
}

#[pymethods]
impl Manifold {
    #[new]
    fn new(name: &str, dim: usize) -> PyResult<Self> {
        Ok(Self {
            kind: parse_kind(name, dim)?,
        })
    }

    /// Power manifold of `count` copies of this manifold.
    fn power(&self, count: usize) -> PyResult<Self> {
        Ok(Self {
            kind: ManifoldKind::power(self.kind.clone(), count).map_err(value_error)?,
        })
    }

    fn __repr__(&self) -> String {
        format!("Manifold({})", self.kind)
    }

    /// Number of ambient coordinates of a point.
    fn ambient_len(&self) -> usize {
        self.kind.ambient_len()
    }

    /// Canonical base point (origin, pole, or identity).
    fn base_point(&self) -> Vec<f64> {
        canonical_base_point(&self.kind).as_slice().to_vec()
    }

    /// Riemannian distance.
    fn distance(&self, p: Vec<f64>, q: Vec<f64>) -> PyResult<f64> {
        self.point(p)?
            .distance(&self.point(q)?)
            .map_err(value_error)
    }

    /// Exponential map `exp_p(x)`.
    fn exp(&self, p: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let point = self.point(p.clone())?;
        let tangent = self.tangent(p, x)?;
        Ok(point
            .exp(&tangent)
            .map_err(value_error)?
            .as_slice()
            .to_vec())
    }

    /// Logarithmic map `log_p(q)`.
    fn log(&self, p: Vec<f64>, q: Vec<f64>) -> PyResult<Vec<f64>> {
        let log = self.point(p)?.log(&self.point(q)?).map_err(value_error)?;
        Ok(log.as_slice().to_vec())
    }

    /// Parallel transport of `x` along the minimal geodesic from `p` to `q`.
    fn transport(&self, p: Vec<f64>, q: Vec<f64>, x: Vec<f64>) -> PyResult<Vec<f64>> {
        let moved = self
            .tangent(p, x)?
            .transport(&self.point(q)?)
            .map_err(value_error)?;
        Ok(moved.as_slice().to_vec())
    }

    /// Riemannian inner product of two tangents at `p`.
    fn inner(&self, p: Vec<f64>, x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
        self.tangent(p.clone(), x)?
            .inner(&self.tangent(p, y)?)
            .map_err(value_error)
    }

    /// Riemannian norm of a tangent at `p`.
    fn norm(&self, p: Vec<f64>, x: Vec<f64>) -> PyResult<f64> {
        Ok(self.tangent(p, x)?.norm())
    }

    /// Orthogonal projection of ambient coordinates onto the tangent space.
    fn project_tangent(&self, p: Vec<f64>, ambient: Vec<f64>) -> PyResult<Vec<f64>> {
        let projected = self
            .point(p)?
            .project_tangent(&ambient)
            .map_err(value_error)?;
        Ok(projected.as_slice().to_vec())
    }

    /// Seeded random point.
    fn random_point(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        random_point(&self.kind, &mut rng).as_slice().to_vec()
    }

    /// Seeded random tangent at `p` with the given ambient standard
    /// deviation.
    fn random_tangent(&self, p: Vec<f64>, seed: u64, stddev: f64) -> PyResult<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let point = self.point(p)?;
        Ok(random_tangent(&point, &mut rng, stddev).as_slice().to_vec())
    }

    /// Sectional curvature bounds `(lower, upper)`.
    fn curvature_bounds(&self) -> (f64, f64) {
        curvature_bounds_for(&self.kind)
    }
}

/// Outcome of a solver run.
#[pyclass]
struct SolveResult {
    #[pyo3(get)]
    point: Vec<f64>,
    #[pyo3(get)]
    objective: f64,
    #[pyo3(get)]
    iterations: usize,
    #[pyo3(get)]
    serious_steps: usize,
    #[pyo3(get)]
    null_steps: usize,
    #[pyo3(get)]
    termination: String,
    #[pyo3(get)]
    trace_objectives: Vec<f64>,
}

impl SolveResult {
    fn from_report(report: SolverReport) -> Self {
        Self {
            point: report.final_point.as_slice().to_vec(),
            objective: report.final_value,
            iterations: report.iterations,
            serious_steps: report.serious_steps,
            null_steps: report.null_steps,
            termination: report.termination.to_string(),
            trace_objectives: report.trace.iter().map(|r| r.objective).collect(),
        }
    }
}

/// Minimizes the weighted geometric median of `data` on `manifold` with the
/// bundle method (`solver="rcbm"`) or the subgradient baseline
/// (`solver="sgm"`). Restricted to flat and Hadamard manifolds, where the
/// objective is globally geodesically convex.
#[pyfunction]
#[pyo3(signature = (manifold, data, solver="rcbm", seed=0, tol=1e-8, max_iterations=None))]
fn minimize_median(
    manifold: &Manifold,
    data: Vec<Vec<f64>>,
    solver: &str,
    seed: u64,
    tol: f64,
    max_iterations: Option<usize>,
) -> PyResult<SolveResult> {
    let (lower, upper) = curvature_bounds_for(&manifold.kind);
    if upper > 0.0 {
        return Err(value_error(format!(
            "{} is not a Hadamard manifold; the unrestricted median is not geodesically convex there",
            manifold.kind
        )));
    }
    let points: Vec<ManifoldPoint> = data
        .into_iter()
        .map(|coords| manifold.point(coords))
        .collect::<PyResult<_>>()?;
    if points.is_empty() {
        return Err(value_error("need at least one data point"));
    }
    let mut max_dist: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            max_dist = max_dist.max(points[i].distance(&points[j]).map_err(value_error)?);
        }
    }
    let profile = if lower == 0.0 && upper == 0.0 {
        CurvatureProfile::flat()
    } else {
        CurvatureProfile::new(lower, upper, (2.0 * max_dist).max(1e-6)).map_err(value_error)?
    };
    let problem = MedianProblem::uniform(points, None, profile).map_err(value_error)?;
    let initial = problem.initial_point().clone();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let report = match solver {
        "rcbm" => {
            let params = SolverParams {
                tolerance: tol,
                max_iterations: max_iterations.unwrap_or(5000),
                ..SolverParams::default()
            };
            rcbm(&problem, &initial, &params, &mut rng).map_err(value_error)?
        }
        "sgm" => sgm(
            &problem,
            &initial,
            &StepRule::InverseSqrt(0.1),
            max_iterations.unwrap_or(10_000),
            &mut rng,
        )
        .map_err(value_error)?,
        other => return Err(value_error(format!("unknown solver '{other}'"))),
    };
    Ok(SolveResult::from_report(report))
}

/// Comparison factor of the lower curvature bound (>= 1).
#[pyfunction]
#[pyo3(name = "stretch")]
fn stretch_py(lower: f64, s: f64) -> PyResult<f64> {
    if s < 0.0 {
        return Err(value_error("arc length must be nonnegative"));
    }
    Ok(stretch(lower, s))
}

/// Comparison factor of the upper curvature bound (<= 1).
#[pyfunction]
#[pyo3(name = "shrink")]
fn shrink_py(upper: f64, s: f64) -> PyResult<f64> {
    if s < 0.0 {
        return Err(value_error("arc length must be nonnegative"));
    }
    shrink(upper, s).map_err(value_error)
}

/// Transport remainder coefficient of a curvature profile.
#[pyfunction]
fn remainder_coefficient(lower: f64, upper: f64, diameter: f64) -> PyResult<f64> {
    Ok(CurvatureProfile::new(lower, upper, diameter)
        .map_err(value_error)?
        .remainder_coefficient())
}

#[pymodule]
fn geobundle_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Manifold>()?;
    m.add_class::<SolveResult>()?;
    m.add_function(wrap_pyfunction!(minimize_median, m)?)?;
    m.add_function(wrap_pyfunction!(stretch_py, m)?)?;
    m.add_function(wrap_pyfunction!(shrink_py, m)?)?;
    m.add_function(wrap_pyfunction!(remainder_coefficient, m)?)?;
    Ok(())
}
