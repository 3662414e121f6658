//! Symmetric positive definite matrices with the affine-invariant metric.
//!
//! All maps go through symmetric eigendecompositions:
//! `exp_P(X) = P^{1/2} mexp(P^{-1/2} X P^{-1/2}) P^{1/2}` and its inverse,
//! with parallel transport by the congruence `X -> E X E^T`,
//! `E = P^{1/2} mexp(mlog(P^{-1/2} Q P^{-1/2}) / 2) P^{-1/2}`.

use nalgebra::DMatrix;

use super::matrix_ops::{spd_exp, spd_log, spd_sqrt_pair, symmetrize};
use crate::error::GeometryError;

pub(super) fn inner(
    p: &DMatrix<f64>,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
) -> Result<f64, GeometryError> {
    let (_, isqrt) = spd_sqrt_pair(p)?;
    let a = &isqrt * x * &isqrt;
    let b = &isqrt * y * &isqrt;
    // trace(P^-1 X P^-1 Y) written congruence-symmetrically for stability.
    Ok(a.dot(&b))
}

pub(super) fn dist(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64, GeometryError> {
    let (_, isqrt) = spd_sqrt_pair(p)?;
    let m = spd_log(&(&isqrt * q * &isqrt))?;
    Ok(m.norm())
}

pub(super) fn exp(p: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let (sqrt, isqrt) = spd_sqrt_pair(p)?;
    let innerved = spd_exp(&(&isqrt * x * &isqrt));
    Ok(symmetrize(&(&sqrt * innerved * &sqrt)))
}

pub(super) fn log(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let (sqrt, isqrt) = spd_sqrt_pair(p)?;
    let innerved = spd_log(&(&isqrt * q * &isqrt))?;
    Ok(symmetrize(&(&sqrt * innerved * &sqrt)))
}

pub(super) fn transport(
    p: &DMatrix<f64>,
    q: &DMatrix<f64>,
    x: &DMatrix<f64>,
) -> Result<DMatrix<f64>, GeometryError> {
    let (sqrt, isqrt) = spd_sqrt_pair(p)?;
    let half = spd_log(&(&isqrt * q * &isqrt))? * 0.5;
    let e = &sqrt * spd_exp(&half) * &isqrt;
    Ok(symmetrize(&(&e * x * e.transpose())))
}
