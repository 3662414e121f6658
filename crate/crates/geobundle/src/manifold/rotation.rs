//! Special orthogonal group with the bi-invariant metric.
//!
//! Geodesics through `p` are `t -> p mexp(t p^T X)`; the logarithm is the
//! principal matrix logarithm of `p^T q`, and parallel transport along the
//! geodesic with Lie-algebra direction `W = p^T log_p q` is
//! `A -> q mexp(-W/2) (p^T A) mexp(W/2)`.

use nalgebra::DMatrix;

use super::matrix_ops::{project_rotation, rotation_log, skew_part};
use crate::error::GeometryError;

pub(super) fn dist(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64, GeometryError> {
    Ok(rotation_log(&(p.transpose() * q))?.norm())
}

pub(super) fn project(p: &DMatrix<f64>, ambient: &DMatrix<f64>) -> DMatrix<f64> {
    p * skew_part(&(p.transpose() * ambient))
}

pub(super) fn exp(p: &DMatrix<f64>, x: &DMatrix<f64>) -> DMatrix<f64> {
    let generator = skew_part(&(p.transpose() * x));
    project_rotation(&(p * generator.exp()))
}

pub(super) fn log(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    Ok(p * rotation_log(&(p.transpose() * q))?)
}

pub(super) fn transport(
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>, GeometryError> {
    let w = rotation_log(&(p.transpose() * q))?;
    let half_back = (w.clone() * -0.5).exp();
    let half_fwd = (w * 0.5).exp();
    Ok(q * (half_back * (p.transpose() * x) * half_fwd))
}
