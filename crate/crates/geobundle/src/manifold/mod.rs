//! Geometric kernel: points, tangent vectors, metric, distance,
//! exponential/logarithmic maps, and parallel transport.
//!
//! Points and tangent vectors are stored in ambient coordinates as flat
//! vectors: spheres and hyperbolic space use the embedding `R^{n+1}`
//! (hyperbolic space on the upper hyperboloid sheet with Minkowski signature
//! `(+, ..., +, -)`), matrix manifolds store column-major `d x d` entries,
//! and power manifolds concatenate their components. All arguments of
//! `acos`/`acosh` are clamped and every exponential re-normalizes its result
//! onto the manifold, so invariants survive long solver runs.

mod hyperbolic;
pub(crate) mod matrix_ops;
mod rotation;
mod spd;
mod sphere;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};

use crate::error::GeometryError;

/// Identifies one of the supported manifolds.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ManifoldKind {
    /// Flat `R^n`.
    Euclidean(usize),
    /// Unit sphere `S^n` embedded in `R^{n+1}`.
    Sphere(usize),
    /// Hyperbolic space `H^n`, hyperboloid model in `R^{n+1}`.
    Hyperbolic(usize),
    /// Symmetric positive definite `n x n` matrices, affine-invariant metric.
    SymmetricPositiveDefinite(usize),
    /// Rotation group `SO(d)` with the bi-invariant metric.
    SpecialOrthogonal(usize),
    /// Product of `count` copies of the inner manifold.
    Power(Box<ManifoldKind>, usize),
}

impl ManifoldKind {
    pub fn power(inner: ManifoldKind, count: usize) -> Result<Self, GeometryError> {
        let kind = ManifoldKind::Power(Box::new(inner), count);
        kind.validate()?;
        Ok(kind)
    }

    /// Checks the dimension constraints and the single-level power nesting.
    pub fn validate(&self) -> Result<(), GeometryError> {
        let invalid = |detail: String| GeometryError::Invalid {
            what: "manifold kind",
            detail,
        };
        match self {
            ManifoldKind::Euclidean(n)
            | ManifoldKind::Sphere(n)
            | ManifoldKind::Hyperbolic(n)
            | ManifoldKind::SymmetricPositiveDefinite(n) => {
                if *n < 1 {
                    return Err(invalid(format!("{self} needs dimension >= 1")));
                }
            }
            ManifoldKind::SpecialOrthogonal(d) => {
                if *d < 2 {
                    return Err(invalid(format!("{self} needs dimension >= 2")));
                }
            }
            ManifoldKind::Power(inner, count) => {
                if *count < 1 {
                    return Err(invalid("power manifold needs count >= 1".to_string()));
                }
                if matches!(**inner, ManifoldKind::Power(_, _)) {
                    return Err(invalid("power manifolds do not nest".to_string()));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }

    /// Number of ambient coordinates a point of this kind occupies.
    pub fn ambient_len(&self) -> usize {
        match self {
            ManifoldKind::Euclidean(n) => *n,
            ManifoldKind::Sphere(n) | ManifoldKind::Hyperbolic(n) => *n + 1,
            ManifoldKind::SymmetricPositiveDefinite(n) => n * n,
            ManifoldKind::SpecialOrthogonal(d) => d * d,
            ManifoldKind::Power(inner, count) => inner.ambient_len() * count,
        }
    }

    fn matrix_dim(&self) -> Option<usize> {
        match self {
            ManifoldKind::SymmetricPositiveDefinite(n) | ManifoldKind::SpecialOrthogonal(n) => {
                Some(*n)
            }
            _ => None,
        }
    }

    fn mismatch(&self, other: &ManifoldKind) -> GeometryError {
        GeometryError::KindMismatch {
            expected: self.to_string(),
            found: other.to_string(),
        }
    }
}

impl fmt::Display for ManifoldKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldKind::Euclidean(n) => write!(f, "Euclidean({n})"),
            ManifoldKind::Sphere(n) => write!(f, "Sphere({n})"),
            ManifoldKind::Hyperbolic(n) => write!(f, "Hyperbolic({n})"),
            ManifoldKind::SymmetricPositiveDefinite(n) => write!(f, "SPD({n})"),
            ManifoldKind::SpecialOrthogonal(d) => write!(f, "SO({d})"),
            ManifoldKind::Power(inner, count) => write!(f, "{inner}^{count}"),
        }
    }
}

/// A point on a manifold, stored in ambient coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldPoint {
    kind: ManifoldKind,
    coords: DVector<f64>,
}

impl ManifoldPoint {
    /// Validates the kind, the coordinate count, and the per-manifold
    /// representation invariants.
    pub fn new(kind: ManifoldKind, coords: Vec<f64>) -> Result<Self, GeometryError> {
        kind.validate()?;
        let coords = DVector::from_vec(coords);
        if coords.len() != kind.ambient_len() {
            return Err(GeometryError::Invalid {
                what: "point coordinates",
                detail: format!(
                    "{kind} expects {} ambient coordinates, got {}",
                    kind.ambient_len(),
                    coords.len()
                ),
            });
        }
        check_point_invariants(&kind, &coords)?;
        Ok(Self { kind, coords })
    }

    /// Builds a matrix-manifold point from a dense matrix.
    pub fn from_matrix(kind: ManifoldKind, m: &DMatrix<f64>) -> Result<Self, GeometryError> {
        let d = kind.matrix_dim().ok_or_else(|| GeometryError::Invalid {
            what: "point coordinates",
            detail: format!("{kind} is not a matrix manifold"),
        })?;
        if m.nrows() != d || m.ncols() != d {
            return Err(GeometryError::Invalid {
                what: "point coordinates",
                detail: format!("{kind} expects a {d}x{d} matrix"),
            });
        }
        Self::new(kind, m.as_slice().to_vec())
    }

    pub(crate) fn from_parts_unchecked(kind: ManifoldKind, coords: DVector<f64>) -> Self {
        debug_assert_eq!(coords.len(), kind.ambient_len());
        Self { kind, coords }
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    /// Column-major matrix view for the matrix manifolds.
    pub fn as_matrix(&self) -> Option<DMatrix<f64>> {
        let d = self.kind.matrix_dim()?;
        Some(DMatrix::from_column_slice(d, d, self.coords.as_slice()))
    }

    /// Riemannian distance to another point of the same kind.
    pub fn distance(&self, other: &ManifoldPoint) -> Result<f64, GeometryError> {
        self.expect_same_kind(other)?;
        dispatch_dist(&self.kind, &self.coords, &other.coords)
    }

    /// Exponential map: follow the geodesic with initial velocity `x` for
    /// unit time. The result is re-normalized onto the manifold.
    pub fn exp(&self, x: &TangentVector) -> Result<ManifoldPoint, GeometryError> {
        self.expect_base_of(x)?;
        let coords = dispatch_exp(&self.kind, &self.coords, &x.coords)?;
        Ok(ManifoldPoint::from_parts_unchecked(
            self.kind.clone(),
            coords,
        ))
    }

    /// Logarithmic map: initial velocity of the minimal geodesic to `other`.
    pub fn log(&self, other: &ManifoldPoint) -> Result<TangentVector, GeometryError> {
        self.expect_same_kind(other)?;
        let coords = dispatch_log(&self.kind, &self.coords, &other.coords)?;
        Ok(TangentVector {
            base: self.clone(),
            coords,
        })
    }

    /// Orthogonal projection of an ambient array onto the tangent space.
    pub fn project_tangent(&self, ambient: &[f64]) -> Result<TangentVector, GeometryError> {
        if ambient.len() != self.kind.ambient_len() {
            return Err(GeometryError::Invalid {
                what: "ambient coordinates",
                detail: format!(
                    "{} expects {} ambient coordinates, got {}",
                    self.kind,
                    self.kind.ambient_len(),
                    ambient.len()
                ),
            });
        }
        let a = DVector::from_column_slice(ambient);
        let coords = dispatch_project(&self.kind, &self.coords, &a);
        Ok(TangentVector {
            base: self.clone(),
            coords,
        })
    }

    /// Zero vector of the tangent space at this point.
    pub fn zero_tangent(&self) -> TangentVector {
        TangentVector {
            coords: DVector::zeros(self.coords.len()),
            base: self.clone(),
        }
    }

    /// Components of a power-manifold point.
    pub fn components(&self) -> Vec<ManifoldPoint> {
        match &self.kind {
            ManifoldKind::Power(inner, count) => {
                let len = inner.ambient_len();
                (0..*count)
                    .map(|i| {
                        ManifoldPoint::from_parts_unchecked(
                            (**inner).clone(),
                            self.coords.rows(i * len, len).into_owned(),
                        )
                    })
                    .collect()
            }
            _ => vec![self.clone()],
        }
    }

    /// Single component of a power-manifold point.
    pub fn component(&self, i: usize) -> ManifoldPoint {
        match &self.kind {
            ManifoldKind::Power(inner, count) => {
                assert!(i < *count, "component index out of range");
                let len = inner.ambient_len();
                ManifoldPoint::from_parts_unchecked(
                    (**inner).clone(),
                    self.coords.rows(i * len, len).into_owned(),
                )
            }
            _ => {
                assert_eq!(i, 0, "component index out of range");
                self.clone()
            }
        }
    }

    /// Assembles a power-manifold point from components of equal kind.
    pub fn power_from_components(parts: &[ManifoldPoint]) -> Result<ManifoldPoint, GeometryError> {
        let first = parts.first().ok_or_else(|| GeometryError::Invalid {
            what: "power components",
            detail: "need at least one component".to_string(),
        })?;
        let kind = ManifoldKind::power(first.kind.clone(), parts.len())?;
        let mut coords = Vec::with_capacity(kind.ambient_len());
        for p in parts {
            if p.kind != first.kind {
                return Err(first.kind.mismatch(&p.kind));
            }
            coords.extend_from_slice(p.as_slice());
        }
        Ok(ManifoldPoint::from_parts_unchecked(
            kind,
            DVector::from_vec(coords),
        ))
    }

    fn expect_same_kind(&self, other: &ManifoldPoint) -> Result<(), GeometryError> {
        if self.kind != other.kind {
            return Err(self.kind.mismatch(&other.kind));
        }
        Ok(())
    }

    fn expect_base_of(&self, x: &TangentVector) -> Result<(), GeometryError> {
        if x.base.kind != self.kind {
            return Err(self.kind.mismatch(&x.base.kind));
        }
        if x.base.coords != self.coords {
            return Err(GeometryError::BaseMismatch {
                kind: self.kind.to_string(),
            });
        }
        Ok(())
    }
}

/// A tangent vector, carrying its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: ManifoldPoint,
    coords: DVector<f64>,
}

impl TangentVector {
    /// Validates the tangency invariants at the base point.
    pub fn new(base: ManifoldPoint, coords: Vec<f64>) -> Result<Self, GeometryError> {
        let coords = DVector::from_vec(coords);
        if coords.len() != base.kind.ambient_len() {
            return Err(GeometryError::Invalid {
                what: "tangent coordinates",
                detail: format!(
                    "{} expects {} ambient coordinates, got {}",
                    base.kind,
                    base.kind.ambient_len(),
                    coords.len()
                ),
            });
        }
        check_tangent_invariants(&base.kind, &base.coords, &coords)?;
        Ok(Self { base, coords })
    }

    pub fn from_matrix(base: ManifoldPoint, m: &DMatrix<f64>) -> Result<Self, GeometryError> {
        Self::new(base, m.as_slice().to_vec())
    }

    pub(crate) fn from_parts_unchecked(base: ManifoldPoint, coords: DVector<f64>) -> Self {
        debug_assert_eq!(coords.len(), base.kind.ambient_len());
        Self { base, coords }
    }

    pub fn base(&self) -> &ManifoldPoint {
        &self.base
    }

    pub fn kind(&self) -> &ManifoldKind {
        &self.base.kind
    }

    pub fn coords(&self) -> &DVector<f64> {
        &self.coords
    }

    pub fn as_slice(&self) -> &[f64] {
        self.coords.as_slice()
    }

    pub fn as_matrix(&self) -> Option<DMatrix<f64>> {
        let d = self.base.kind.matrix_dim()?;
        Some(DMatrix::from_column_slice(d, d, self.coords.as_slice()))
    }

    /// Riemannian inner product with another vector at the same base point.
    pub fn inner(&self, other: &TangentVector) -> Result<f64, GeometryError> {
        self.base.expect_base_of(other)?;
        dispatch_inner(
            &self.base.kind,
            &self.base.coords,
            &self.coords,
            &other.coords,
        )
    }

    /// Riemannian norm.
    pub fn norm(&self) -> f64 {
        dispatch_inner(
            &self.base.kind,
            &self.base.coords,
            &self.coords,
            &self.coords,
        )
        .expect("inner product with self cannot mismatch")
        .max(0.0)
        .sqrt()
    }

    pub fn scale(&self, factor: f64) -> TangentVector {
        TangentVector {
            base: self.base.clone(),
            coords: &self.coords * factor,
        }
    }

    /// In-place `self += factor * other`.
    pub fn add_scaled(&mut self, factor: f64, other: &TangentVector) -> Result<(), GeometryError> {
        self.base.expect_base_of(other)?;
        self.coords.axpy(factor, &other.coords, 1.0);
        Ok(())
    }

    /// Parallel transport along the minimal geodesic to `to`.
    pub fn transport(&self, to: &ManifoldPoint) -> Result<TangentVector, GeometryError> {
        self.base.expect_same_kind(to)?;
        let coords =
            dispatch_transport(&self.base.kind, &self.base.coords, &to.coords, &self.coords)?;
        Ok(TangentVector {
            base: to.clone(),
            coords,
        })
    }

    /// Components of a power-manifold tangent vector.
    pub fn components(&self) -> Vec<TangentVector> {
        self.base
            .components()
            .into_iter()
            .enumerate()
            .map(|(i, base)| {
                let len = base.kind.ambient_len();
                TangentVector {
                    coords: self.coords.rows(i * len, len).into_owned(),
                    base,
                }
            })
            .collect()
    }

    /// Assembles a power-manifold tangent vector from per-component vectors.
    pub fn power_from_components(
        base: &ManifoldPoint,
        parts: &[TangentVector],
    ) -> Result<TangentVector, GeometryError> {
        let ManifoldKind::Power(inner, count) = &base.kind else {
            return Err(GeometryError::Invalid {
                what: "power components",
                detail: format!("base point is on {}, not a power manifold", base.kind),
            });
        };
        if parts.len() != *count {
            return Err(GeometryError::Invalid {
                what: "power components",
                detail: format!("expected {count} components, got {}", parts.len()),
            });
        }
        let len = inner.ambient_len();
        let mut coords = Vec::with_capacity(base.kind.ambient_len());
        for (i, part) in parts.iter().enumerate() {
            if part.base.kind != **inner {
                return Err(inner.mismatch(&part.base.kind));
            }
            if part.base.coords.as_slice() != base.coords.rows(i * len, len).as_slice() {
                return Err(GeometryError::BaseMismatch {
                    kind: base.kind.to_string(),
                });
            }
            coords.extend_from_slice(part.as_slice());
        }
        Ok(TangentVector {
            base: base.clone(),
            coords: DVector::from_vec(coords),
        })
    }
}

// ---------------------------------------------------------------------------
// dispatch

fn as_matrix(kind: &ManifoldKind, coords: &DVector<f64>) -> DMatrix<f64> {
    let d = kind.matrix_dim().expect("matrix manifold");
    DMatrix::from_column_slice(d, d, coords.as_slice())
}

fn mat_coords(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

fn power_parts(kind: &ManifoldKind) -> (&ManifoldKind, usize, usize) {
    let ManifoldKind::Power(inner, count) = kind else {
        unreachable!("caller matched Power");
    };
    (inner, *count, inner.ambient_len())
}

fn dispatch_inner(
    kind: &ManifoldKind,
    base: &DVector<f64>,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> Result<f64, GeometryError> {
    match kind {
        ManifoldKind::Euclidean(_) | ManifoldKind::Sphere(_) => Ok(x.dot(y)),
        ManifoldKind::Hyperbolic(_) => Ok(hyperbolic::minkowski(x, y)),
        ManifoldKind::SymmetricPositiveDefinite(_) => spd::inner(
            &as_matrix(kind, base),
            &as_matrix(kind, x),
            &as_matrix(kind, y),
        ),
        ManifoldKind::SpecialOrthogonal(_) => Ok(x.dot(y)),
        ManifoldKind::Power(inner, count) => {
            let len = inner.ambient_len();
            let mut acc = 0.0;
            for i in 0..*count {
                acc += dispatch_inner(
                    inner,
                    &base.rows(i * len, len).into_owned(),
                    &x.rows(i * len, len).into_owned(),
                    &y.rows(i * len, len).into_owned(),
                )?;
            }
            Ok(acc)
        }
    }
}

fn dispatch_dist(
    kind: &ManifoldKind,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<f64, GeometryError> {
    if p == q {
        return Ok(0.0);
    }
    match kind {
        ManifoldKind::Euclidean(_) => Ok((q - p).norm()),
        ManifoldKind::Sphere(_) => Ok(sphere::dist(p, q)),
        ManifoldKind::Hyperbolic(_) => Ok(hyperbolic::dist(p, q)),
        ManifoldKind::SymmetricPositiveDefinite(_) => {
            spd::dist(&as_matrix(kind, p), &as_matrix(kind, q))
        }
        ManifoldKind::SpecialOrthogonal(_) => {
            rotation::dist(&as_matrix(kind, p), &as_matrix(kind, q))
        }
        ManifoldKind::Power(_, _) => {
            let (inner, count, len) = power_parts(kind);
            let mut acc = 0.0;
            for i in 0..count {
                let d = dispatch_dist(
                    inner,
                    &p.rows(i * len, len).into_owned(),
                    &q.rows(i * len, len).into_owned(),
                )?;
                acc += d * d;
            }
            Ok(acc.sqrt())
        }
    }
}

fn dispatch_exp(
    kind: &ManifoldKind,
    p: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    match kind {
        ManifoldKind::Euclidean(_) => Ok(p + x),
        ManifoldKind::Sphere(_) => Ok(sphere::exp(p, x)),
        ManifoldKind::Hyperbolic(_) => Ok(hyperbolic::exp(p, x)),
        ManifoldKind::SymmetricPositiveDefinite(_) => {
            spd::exp(&as_matrix(kind, p), &as_matrix(kind, x)).map(|m| mat_coords(&m))
        }
        ManifoldKind::SpecialOrthogonal(_) => Ok(mat_coords(&rotation::exp(
            &as_matrix(kind, p),
            &as_matrix(kind, x),
        ))),
        ManifoldKind::Power(_, _) => {
            let (inner, count, len) = power_parts(kind);
            let mut out = DVector::zeros(p.len());
            for i in 0..count {
                let part = dispatch_exp(
                    inner,
                    &p.rows(i * len, len).into_owned(),
                    &x.rows(i * len, len).into_owned(),
                )?;
                out.rows_mut(i * len, len).copy_from(&part);
            }
            Ok(out)
        }
    }
}

fn dispatch_log(
    kind: &ManifoldKind,
    p: &DVector<f64>,
    q: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    if p == q {
        return Ok(DVector::zeros(p.len()));
    }
    match kind {
        ManifoldKind::Euclidean(_) => Ok(q - p),
        ManifoldKind::Sphere(_) => sphere::log(p, q),
        ManifoldKind::Hyperbolic(_) => Ok(hyperbolic::log(p, q)),
        ManifoldKind::SymmetricPositiveDefinite(_) => {
            spd::log(&as_matrix(kind, p), &as_matrix(kind, q)).map(|m| mat_coords(&m))
        }
        ManifoldKind::SpecialOrthogonal(_) => {
            rotation::log(&as_matrix(kind, p), &as_matrix(kind, q)).map(|m| mat_coords(&m))
        }
        ManifoldKind::Power(_, _) => {
            let (inner, count, len) = power_parts(kind);
            let mut out = DVector::zeros(p.len());
            for i in 0..count {
                let part = dispatch_log(
                    inner,
                    &p.rows(i * len, len).into_owned(),
                    &q.rows(i * len, len).into_owned(),
                )?;
                out.rows_mut(i * len, len).copy_from(&part);
            }
            Ok(out)
        }
    }
}

fn dispatch_transport(
    kind: &ManifoldKind,
    p: &DVector<f64>,
    q: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    if p == q {
        return Ok(x.clone());
    }
    match kind {
        ManifoldKind::Euclidean(_) => Ok(x.clone()),
        ManifoldKind::Sphere(_) => sphere::transport(p, q, x),
        ManifoldKind::Hyperbolic(_) => Ok(hyperbolic::transport(p, q, x)),
        ManifoldKind::SymmetricPositiveDefinite(_) => spd::transport(
            &as_matrix(kind, p),
            &as_matrix(kind, q),
            &as_matrix(kind, x),
        )
        .map(|m| mat_coords(&m)),
        ManifoldKind::SpecialOrthogonal(_) => rotation::transport(
            &as_matrix(kind, p),
            &as_matrix(kind, q),
            &as_matrix(kind, x),
        )
        .map(|m| mat_coords(&m)),
        ManifoldKind::Power(_, _) => {
            let (inner, count, len) = power_parts(kind);
            let mut out = DVector::zeros(p.len());
            for i in 0..count {
                let part = dispatch_transport(
                    inner,
                    &p.rows(i * len, len).into_owned(),
                    &q.rows(i * len, len).into_owned(),
                    &x.rows(i * len, len).into_owned(),
                )?;
                out.rows_mut(i * len, len).copy_from(&part);
            }
            Ok(out)
        }
    }
}

fn dispatch_project(kind: &ManifoldKind, p: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
    match kind {
        ManifoldKind::Euclidean(_) => a.clone(),
        ManifoldKind::Sphere(_) => sphere::project(p, a),
        ManifoldKind::Hyperbolic(_) => hyperbolic::project(p, a),
        ManifoldKind::SymmetricPositiveDefinite(_) => {
            mat_coords(&matrix_ops::symmetrize(&as_matrix(kind, a)))
        }
        ManifoldKind::SpecialOrthogonal(_) => {
            mat_coords(&rotation::project(&as_matrix(kind, p), &as_matrix(kind, a)))
        }
        ManifoldKind::Power(_, _) => {
            let (inner, count, len) = power_parts(kind);
            let mut out = DVector::zeros(p.len());
            for i in 0..count {
                let part = dispatch_project(
                    inner,
                    &p.rows(i * len, len).into_owned(),
                    &a.rows(i * len, len).into_owned(),
                );
                out.rows_mut(i * len, len).copy_from(&part);
            }
            out
        }
    }
}

// ---------------------------------------------------------------------------
// invariants

fn check_point_invariants(kind: &ManifoldKind, coords: &DVector<f64>) -> Result<(), GeometryError> {
    let invalid = |detail: String| GeometryError::Invalid {
        what: "point",
        detail,
    };
    match kind {
        ManifoldKind::Euclidean(_) => Ok(()),
        ManifoldKind::Sphere(_) => {
            let n = coords.dot(coords);
            if (n - 1.0).abs() > 1e-9 {
                return Err(invalid(format!("sphere point has squared norm {n}")));
            }
            Ok(())
        }
        ManifoldKind::Hyperbolic(_) => {
            let m = hyperbolic::minkowski(coords, coords);
            if (m + 1.0).abs() > 1e-9 {
                return Err(invalid(format!(
                    "hyperboloid point has Minkowski square {m}"
                )));
            }
            if coords[coords.len() - 1] <= 0.0 {
                return Err(invalid(
                    "hyperboloid point is not on the upper sheet".to_string(),
                ));
            }
            Ok(())
        }
        ManifoldKind::SymmetricPositiveDefinite(_) => {
            let m = as_matrix(kind, coords);
            let asym = (&m - m.transpose()).amax();
            if asym > 1e-9 {
                return Err(invalid(format!("SPD point has asymmetry {asym:.3e}")));
            }
            let eig = nalgebra::SymmetricEigen::new(matrix_ops::symmetrize(&m));
            let min = eig.eigenvalues.min();
            if min <= 1e-12 {
                return Err(invalid(format!("SPD point has eigenvalue {min:.3e}")));
            }
            Ok(())
        }
        ManifoldKind::SpecialOrthogonal(d) => {
            let m = as_matrix(kind, coords);
            let defect = (m.transpose() * &m - DMatrix::identity(*d, *d)).amax();
            if defect > 1e-8 {
                return Err(invalid(format!(
                    "rotation point has orthogonality defect {defect:.3e}"
                )));
            }
            if m.determinant() <= 0.0 {
                return Err(invalid(
                    "rotation point has negative determinant".to_string(),
                ));
            }
            Ok(())
        }
        ManifoldKind::Power(_, _) => {
            let (inner, count, len) = power_parts(kind);
            for i in 0..count {
                check_point_invariants(inner, &coords.rows(i * len, len).into_owned())?;
            }
            Ok(())
        }
    }
}

fn check_tangent_invariants(
    kind: &ManifoldKind,
    base: &DVector<f64>,
    coords: &DVector<f64>,
) -> Result<(), GeometryError> {
    let invalid = |detail: String| GeometryError::Invalid {
        what: "tangent vector",
        detail,
    };
    match kind {
        ManifoldKind::Euclidean(_) => Ok(()),
        ManifoldKind::Sphere(_) => {
            let d = base.dot(coords);
            if d.abs() > 1e-9 {
                return Err(invalid(format!("sphere tangent has radial part {d:.3e}")));
            }
            Ok(())
        }
        ManifoldKind::Hyperbolic(_) => {
            let d = hyperbolic::minkowski(base, coords);
            if d.abs() > 1e-9 {
                return Err(invalid(format!(
                    "hyperboloid tangent has normal part {d:.3e}"
                )));
            }
            Ok(())
        }
        ManifoldKind::SymmetricPositiveDefinite(_) => {
            let m = as_matrix(kind, coords);
            let asym = (&m - m.transpose()).amax();
            if asym > 1e-9 {
                return Err(invalid(format!("SPD tangent has asymmetry {asym:.3e}")));
            }
            Ok(())
        }
        ManifoldKind::SpecialOrthogonal(_) => {
            let p = as_matrix(kind, base);
            let x = as_matrix(kind, coords);
            let defect = (&p * x.transpose() + &x * p.transpose()).amax();
            if defect > 1e-8 {
                return Err(invalid(format!(
                    "rotation tangent violates the tangent-space condition by {defect:.3e}"
                )));
            }
            Ok(())
        }
        ManifoldKind::Power(_, _) => {
            let (inner, count, len) = power_parts(kind);
            for i in 0..count {
                check_tangent_invariants(
                    inner,
                    &base.rows(i * len, len).into_owned(),
                    &coords.rows(i * len, len).into_owned(),
                )?;
            }
            Ok(())
        }
    }
}

// ---------------------------------------------------------------------------
// random sampling

fn gaussian_vector(len: usize, stddev: f64, rng: &mut dyn RngCore) -> DVector<f64> {
    DVector::from_fn(len, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z * stddev
    })
}

/// Seeded random point on the manifold.
pub fn random_point(kind: &ManifoldKind, rng: &mut dyn RngCore) -> ManifoldPoint {
    let coords = match kind {
        ManifoldKind::Euclidean(n) => gaussian_vector(*n, 1.0, rng),
        ManifoldKind::Sphere(n) => {
            let mut v = gaussian_vector(n + 1, 1.0, rng);
            while v.norm() < 1e-6 {
                v = gaussian_vector(n + 1, 1.0, rng);
            }
            let n = v.norm();
            v / n
        }
        ManifoldKind::Hyperbolic(n) => {
            let w = gaussian_vector(*n, 1.0, rng);
            lift_to_hyperboloid(w.as_slice()).coords
        }
        ManifoldKind::SymmetricPositiveDefinite(n) => {
            let g = DMatrix::from_fn(*n, *n, |_, _| {
                let z: f64 = StandardNormal.sample(rng);
                z * 0.5 / (*n as f64).sqrt()
            });
            mat_coords(&matrix_ops::spd_exp(&matrix_ops::symmetrize(&g)))
        }
        ManifoldKind::SpecialOrthogonal(d) => {
            let g = DMatrix::from_fn(*d, *d, |_, _| StandardNormal.sample(rng));
            mat_coords(&matrix_ops::project_rotation(&g))
        }
        ManifoldKind::Power(inner, count) => {
            let len = inner.ambient_len();
            let mut coords = DVector::zeros(kind.ambient_len());
            for i in 0..*count {
                let part = random_point(inner, rng);
                coords.rows_mut(i * len, len).copy_from(&part.coords);
            }
            coords
        }
    };
    ManifoldPoint::from_parts_unchecked(kind.clone(), coords)
}

/// Seeded random tangent: ambient Gaussian coordinates with the given
/// per-coordinate standard deviation, projected onto the tangent space.
pub fn random_tangent(p: &ManifoldPoint, rng: &mut dyn RngCore, stddev: f64) -> TangentVector {
    let ambient = gaussian_vector(p.kind.ambient_len(), stddev, rng);
    let coords = dispatch_project(&p.kind, &p.coords, &ambient);
    TangentVector {
        base: p.clone(),
        coords,
    }
}

/// Random unit-norm tangent vector (Gaussian sample normalized in the
/// Riemannian metric), used as a distance subgradient at coincident points.
pub fn random_unit_tangent(p: &ManifoldPoint, rng: &mut dyn RngCore) -> TangentVector {
    loop {
        let t = random_tangent(p, rng, 1.0);
        let n = t.norm();
        if n > 1e-9 {
            return t.scale(1.0 / n);
        }
    }
}

/// The canonical base point of each manifold: the origin of flat space, the
/// last-coordinate pole of spheres and hyperbolic space, and the identity of
/// the matrix manifolds.
pub fn canonical_base_point(kind: &ManifoldKind) -> ManifoldPoint {
    let coords = match kind {
        ManifoldKind::Euclidean(n) => DVector::zeros(*n),
        ManifoldKind::Sphere(n) | ManifoldKind::Hyperbolic(n) => {
            let mut v = DVector::zeros(n + 1);
            v[*n] = 1.0;
            v
        }
        ManifoldKind::SymmetricPositiveDefinite(n) | ManifoldKind::SpecialOrthogonal(n) => {
            mat_coords(&DMatrix::identity(*n, *n))
        }
        ManifoldKind::Power(inner, count) => {
            let base = canonical_base_point(inner);
            let len = inner.ambient_len();
            let mut coords = DVector::zeros(kind.ambient_len());
            for i in 0..*count {
                coords.rows_mut(i * len, len).copy_from(base.coords());
            }
            coords
        }
    };
    ManifoldPoint::from_parts_unchecked(kind.clone(), coords)
}

/// The plane-to-hyperboloid lift `w -> (w, sqrt(|w|^2 + 1))`.
pub fn lift_to_hyperboloid(plane: &[f64]) -> ManifoldPoint {
    let mut coords = DVector::zeros(plane.len() + 1);
    let mut sq = 0.0;
    for (i, w) in plane.iter().enumerate() {
        coords[i] = *w;
        sq += w * w;
    }
    coords[plane.len()] = (sq + 1.0).sqrt();
    ManifoldPoint::from_parts_unchecked(ManifoldKind::Hyperbolic(plane.len()), coords)
}
