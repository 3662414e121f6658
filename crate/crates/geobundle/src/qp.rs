//! Simplex-constrained quadratic subproblem.
//!
//! Each iteration of the bundle method minimizes
//! `0.5 * lambda' G lambda + c' lambda` over the probability simplex, where
//! `G` holds the pairwise inner products of the transported bundle
//! subgradients and `c` the per-entry costs `e_j + r_j`. The minimizer is
//! found by a primal active-set method: the working set fixes entries at
//! zero, each step solves the equality-constrained KKT system on the free
//! entries, and bound/dual violations drive the exchanges. Dimensions never
//! exceed the bundle cap, so dense factorizations suffice.

use nalgebra::{DMatrix, DVector};

use crate::bundle::Bundle;
use crate::error::{GeometryError, QpError};
use crate::manifold::TangentVector;

/// Default KKT tolerance; two orders tighter than the outer stopping
/// tolerance of the solver defaults.
pub const DEFAULT_TOLERANCE: f64 = 1e-10;

/// Quadratic and linear costs of one subproblem.
#[derive(Debug, Clone)]
pub struct SubproblemInput {
    gram: DMatrix<f64>,
    linear: DVector<f64>,
}

impl SubproblemInput {
    /// Validates symmetry (1e-10), positive semidefiniteness (eigenvalues
    /// above -1e-9), and nonnegativity of the linear costs.
    pub fn new(gram: DMatrix<f64>, linear: DVector<f64>) -> Result<Self, QpError> {
        if gram.nrows() != gram.ncols() || gram.nrows() != linear.len() || linear.is_empty() {
            return Err(QpError::InvalidInput(format!(
                "dimension mismatch: gram is {}x{}, linear has {} entries",
                gram.nrows(),
                gram.ncols(),
                linear.len()
            )));
        }
        let asym = (&gram - gram.transpose()).amax();
        if asym > 1e-10 {
            return Err(QpError::InvalidInput(format!(
                "gram matrix asymmetry {asym:.3e}"
            )));
        }
        let eig = nalgebra::SymmetricEigen::new(gram.clone());
        let min = eig.eigenvalues.min();
        if min < -1e-9 {
            return Err(QpError::InvalidInput(format!(
                "gram matrix has eigenvalue {min:.3e}"
            )));
        }
        if linear.min() < 0.0 {
            return Err(QpError::InvalidInput(format!(
                "negative linear cost {:.3e}",
                linear.min()
            )));
        }
        Ok(Self { gram, linear })
    }

    /// Builds the subproblem of the bundle's current state.
    pub fn from_bundle(bundle: &Bundle) -> Result<Self, GeometryError> {
        let n = bundle.len();
        let transported: Vec<TangentVector> = (0..n).map(|j| bundle.transported(j)).collect();
        let mut gram = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = transported[i].inner(&transported[j])?;
                gram[(i, j)] = v;
                gram[(j, i)] = v;
            }
        }
        Ok(Self {
            gram,
            linear: bundle.linear_costs(),
        })
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn linear(&self) -> &DVector<f64> {
        &self.linear
    }

    /// Subproblem objective `0.5 * lambda' G lambda + c' lambda`.
    pub fn objective(&self, lambda: &DVector<f64>) -> f64 {
        0.5 * (&self.gram * lambda).dot(lambda) + self.linear.dot(lambda)
    }
}

/// Sums the bundle under the given weights: the aggregated subgradient `g`,
/// the weighted errors `epsilon` and remainders `sigma`, and the stationarity
/// scalar `xi = -|g|^2 - epsilon - sigma`.
#[derive(Debug, Clone)]
pub struct SubproblemSolution {
    /// Simplex weights.
    pub weights: DVector<f64>,
    /// Aggregated subgradient at the serious iterate; an element of the
    /// (epsilon + sigma)-subdifferential there. Its negative is the search
    /// direction.
    pub subgradient: TangentVector,
    /// Weighted linearization error.
    pub epsilon: f64,
    /// Weighted curvature remainder.
    pub sigma: f64,
    /// Stationarity scalar; termination once `-xi` drops below tolerance.
    pub xi: f64,
    /// Maximum KKT violation of the weights.
    pub kkt_residual: f64,
}

/// Minimizes `0.5 lambda' G lambda + c' lambda` over the probability simplex.
///
/// Returns the weight vector; fails with the best iterate attached if the
/// working-set budget (`10 * dim^2`) is exhausted before the KKT residual
/// drops below `tol`.
pub fn solve_simplex_qp(input: &SubproblemInput, tol: f64) -> Result<DVector<f64>, QpError> {
    let n = input.dim();
    if n == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    let gram = &input.gram;
    let linear = &input.linear;

    // Start at the vertex with the cheapest single-column objective.
    let mut start = 0;
    let mut best = f64::INFINITY;
    for j in 0..n {
        let v = 0.5 * gram[(j, j)] + linear[j];
        if v < best {
            best = v;
            start = j;
        }
    }
    let mut lambda = DVector::zeros(n);
    lambda[start] = 1.0;
    let mut free = vec![false; n];
    free[start] = true;

    let budget = 10 * n * n;
    for _ in 0..budget {
        // Degenerate pivots can dither without improving the iterate; exit
        // as soon as the current weights are certifiably optimal.
        if kkt_residual(input, &lambda) <= 0.5 * tol {
            return Ok(lambda);
        }
        let (target, xi) = solve_on_free_set(input, &free)?;

        let mut feasible = true;
        for j in 0..n {
            if free[j] && target[j] < -1e-13 {
                feasible = false;
                break;
            }
        }

        if feasible {
            lambda = target.map(|v| v.max(0.0));
            // Reduced costs of the entries pinned at zero.
            let grad = gram * &lambda + linear;
            let mut worst = 0.0;
            let mut worst_j = None;
            for j in 0..n {
                if !free[j] {
                    let reduced = grad[j] + xi;
                    if reduced < worst {
                        worst = reduced;
                        worst_j = Some(j);
                    }
                }
            }
            match worst_j {
                Some(j) if worst < -0.5 * tol => {
                    free[j] = true;
                }
                _ => return Ok(lambda),
            }
        } else {
            // Step toward the equality-constrained optimum until a bound blocks.
            let mut alpha = 1.0;
            let mut blocker = None;
            for j in 0..n {
                if free[j] {
                    let d = target[j] - lambda[j];
                    if d < -1e-16 {
                        let a = lambda[j] / (-d);
                        if a < alpha {
                            alpha = a;
                            blocker = Some(j);
                        }
                    }
                }
            }
            lambda = &lambda + (&target - &lambda) * alpha;
            if let Some(b) = blocker {
                lambda[b] = 0.0;
                free[b] = false;
            }
        }
    }

    Err(QpError::Stalled {
        iterations: budget,
        residual: kkt_residual(input, &lambda),
        best: lambda.as_slice().to_vec(),
    })
}

/// LU solve with a residual check; singular or nearly singular systems can
/// slip past the factorization with garbage solutions and must be rejected.
fn solve_checked(a: &DMatrix<f64>, b: &DVector<f64>) -> Option<DVector<f64>> {
    let x = a.clone().lu().solve(b)?;
    let residual = (a * &x - b).amax();
    let scale = a.amax().max(1.0);
    (residual <= 1e-9 * scale).then_some(x)
}

/// Solves the KKT system of the subproblem restricted to the free entries:
/// the quadratic stationarity rows plus the single sum-to-one constraint.
fn solve_on_free_set(
    input: &SubproblemInput,
    free: &[bool],
) -> Result<(DVector<f64>, f64), QpError> {
    let idx: Vec<usize> = (0..free.len()).filter(|j| free[*j]).collect();
    let k = idx.len();
    let n = input.dim();

    let assemble = |reg: f64| {
        let mut a = DMatrix::zeros(k + 1, k + 1);
        let mut b = DVector::zeros(k + 1);
        for (r, &i) in idx.iter().enumerate() {
            for (c, &j) in idx.iter().enumerate() {
                a[(r, c)] = input.gram[(i, j)];
            }
            a[(r, r)] += reg;
            a[(r, k)] = 1.0;
            a[(k, r)] = 1.0;
            b[r] = -input.linear[i];
        }
        b[k] = 1.0;
        (a, b)
    };

    // Transported subgradients can coincide or span a low-dimensional
    // tangent subspace, leaving the gram matrix rank deficient and the KKT
    // system consistent-but-singular, where a plain factorization returns an
    // arbitrary point of the solution set. The scaled Tikhonov term keeps
    // every face problem strictly convex and selects the minimum-norm face
    // point; its stationarity offset (~1e-14) sits far below the KKT
    // tolerance.
    let reg = (1e-12 * input.gram.trace() / n as f64).max(1e-14);
    let (a, b) = assemble(reg);
    let solution = match solve_checked(&a, &b) {
        Some(s) => s,
        None => {
            let svd = a.svd(true, true);
            svd.solve(&b, 1e-14)
                .map_err(|e| QpError::InvalidInput(format!("singular KKT system: {e}")))?
        }
    };

    let mut full = DVector::zeros(n);
    for (r, &i) in idx.iter().enumerate() {
        full[i] = solution[r];
    }
    Ok((full, solution[k]))
}

/// Maximum violation of the KKT conditions at `lambda`: simplex feasibility,
/// dual feasibility `G lambda + c + xi >= 0`, and complementary slackness,
/// with the multiplier recomputed as `xi = -lambda' G lambda - c' lambda`.
pub fn kkt_residual(input: &SubproblemInput, lambda: &DVector<f64>) -> f64 {
    let grad = &input.gram * lambda + &input.linear;
    let xi = -(grad.dot(lambda));
    let mut residual = (lambda.sum() - 1.0).abs();
    for j in 0..lambda.len() {
        residual = residual.max(-lambda[j]).max(-(grad[j] + xi));
        residual = residual.max((lambda[j] * (grad[j] + xi)).abs());
    }
    residual.max(0.0)
}

/// Combines the bundle under `weights` into the aggregated subgradient and
/// the scalars of the stopping test.
pub fn aggregate(
    bundle: &Bundle,
    input: &SubproblemInput,
    weights: &DVector<f64>,
) -> Result<SubproblemSolution, GeometryError> {
    assert_eq!(weights.len(), bundle.len(), "weight count mismatch");
    let mut subgradient = bundle.serious_point().zero_tangent();
    let mut epsilon = 0.0;
    let mut sigma = 0.0;
    for (j, entry) in bundle.entries().iter().enumerate() {
        subgradient.add_scaled(weights[j], &bundle.transported(j))?;
        epsilon += weights[j] * entry.linearization_error;
        sigma += weights[j] * entry.remainder;
    }
    let norm_sq = subgradient.inner(&subgradient)?;
    let xi = -norm_sq - epsilon - sigma;
    Ok(SubproblemSolution {
        kkt_residual: kkt_residual(input, weights),
        weights: weights.clone(),
        subgradient,
        epsilon,
        sigma,
        xi,
    })
}
