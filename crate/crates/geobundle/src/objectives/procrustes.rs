//! Spectral Procrustes alignment on the rotation group.
//!
//! Minimizes `f(p) = |A - B p|_2` (largest singular value) over `SO(d)`.
//! The spectral norm is convex in the Euclidean sense but not geodesically
//! convex on the rotation group; its Euclidean subgradient `-B' u v'` (top
//! singular pair of `A - B p`) is projected onto the tangent space as a
//! Clarke-type substitute.

use nalgebra::DMatrix;
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::curvature::CurvatureProfile;
use crate::error::GeometryError;
use crate::manifold::{ManifoldKind, ManifoldPoint, TangentVector};
use crate::solver::Problem;

/// Spectral Procrustes instance `argmin_{p in SO(d)} |A - B p|_2`.
#[derive(Debug, Clone)]
pub struct ProcrustesProblem {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    kind: ManifoldKind,
    curvature: CurvatureProfile,
}

impl ProcrustesProblem {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self, GeometryError> {
        let invalid = |detail: String| GeometryError::Invalid {
            what: "Procrustes problem",
            detail,
        };
        if a.shape() != b.shape() {
            return Err(invalid(format!(
                "shape mismatch: {:?} vs {:?}",
                a.shape(),
                b.shape()
            )));
        }
        let (rows, cols) = a.shape();
        if cols < 2 || rows < cols {
            return Err(invalid(format!(
                "need rows >= cols >= 2, got {rows}x{cols}"
            )));
        }
        // Curvature of the rotation group lies in [0, 1/4]; the diameter
        // parameter pi / (3 sqrt(upper)) keeps the profile admissible.
        let upper = 0.25;
        let curvature =
            CurvatureProfile::new(0.0, upper, std::f64::consts::PI / (3.0 * upper.sqrt()))?;
        Ok(Self {
            a,
            b,
            kind: ManifoldKind::SpecialOrthogonal(cols),
            curvature,
        })
    }

    /// Random instance with standard Gaussian entries.
    pub fn random_instance(
        rows: usize,
        cols: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Self, GeometryError> {
        let a = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
        let b = DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng));
        Self::new(a, b)
    }

    pub fn dimensions(&self) -> (usize, usize) {
        self.a.shape()
    }

    fn residual(&self, p: &ManifoldPoint) -> DMatrix<f64> {
        let rotation = p.as_matrix().expect("rotation point");
        &self.a - &self.b * rotation
    }

    /// Largest singular value of `A - B p`.
    pub fn value(&self, p: &ManifoldPoint) -> f64 {
        self.residual(p)
            .singular_values()
            .iter()
            .fold(0.0, |acc, s| acc.max(*s))
    }

    /// Tangent projection of the Euclidean spectral-norm subgradient.
    pub fn subgradient_at(&self, p: &ManifoldPoint) -> Result<TangentVector, GeometryError> {
        let svd = self.residual(p).svd(true, true);
        let u = svd.u.as_ref().expect("requested");
        let v_t = svd.v_t.as_ref().expect("requested");
        let mut top = 0;
        for (j, s) in svd.singular_values.iter().enumerate() {
            if *s > svd.singular_values[top] {
                top = j;
            }
        }
        let u_top = u.column(top);
        let v_top = v_t.row(top);
        let euclidean = -(self.b.transpose() * u_top) * v_top;
        p.project_tangent(euclidean.as_slice())
    }

    /// Closed-form minimizer of the orthogonal (Frobenius) Procrustes
    /// objective, projected onto `SO(d)`: the standard starting point.
    pub fn schoenemann_initial(&self) -> Result<ManifoldPoint, GeometryError> {
        let target = self.b.transpose() * &self.a;
        let svd = target.clone().svd(true, true);
        let smallest = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        let largest = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        if smallest <= 1e-12 * largest.max(1.0) {
            return Err(GeometryError::Invalid {
                what: "Procrustes initialization",
                detail: "B'A is numerically rank deficient".to_string(),
            });
        }
        let mut u = svd.u.expect("requested");
        let v_t = svd.v_t.expect("requested");
        let candidate = &u * &v_t;
        if candidate.determinant() < 0.0 {
            // Project onto SO(d): flip the column paired with the smallest
            // singular value.
            let mut idx = 0;
            for (j, s) in svd.singular_values.iter().enumerate() {
                if *s < svd.singular_values[idx] {
                    idx = j;
                }
            }
            for i in 0..u.nrows() {
                u[(i, idx)] = -u[(i, idx)];
            }
        }
        ManifoldPoint::from_matrix(self.kind.clone(), &(&u * &v_t))
    }
}

impl Problem for ProcrustesProblem {
    fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    fn objective(&self, p: &ManifoldPoint) -> f64 {
        self.value(p)
    }

    fn subgradient(
        &self,
        p: &ManifoldPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        self.subgradient_at(p)
    }

    fn is_interior(&self, _p: &ManifoldPoint) -> bool {
        true
    }

    fn curvature(&self) -> CurvatureProfile {
        self.curvature
    }
}
