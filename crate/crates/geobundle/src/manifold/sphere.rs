//! Unit sphere embedded in its ambient Euclidean space.

use nalgebra::DVector;

use crate::error::GeometryError;

/// Rejection of `q` from the radial direction at `p`, i.e. the unnormalized
/// logarithm direction. Tangent at `p` up to rounding.
fn rejection(p: &DVector<f64>, q: &DVector<f64>, c: f64) -> DVector<f64> {
    let mut v = q - p * c;
    // Kill the radial residue left by rounding; near-coincident points are
    // almost purely radial and would otherwise leak an invalid direction.
    let radial = p.dot(&v);
    v -= p * radial;
    v
}

pub(super) fn dist(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    let c = p.dot(q);
    // atan2 of (sin, cos) stays accurate at both ends of [0, pi], unlike
    // acos, which loses half the digits near coincident points.
    let n = (q - p * c).norm();
    n.atan2(c)
}

pub(super) fn project(p: &DVector<f64>, ambient: &DVector<f64>) -> DVector<f64> {
    ambient - p * p.dot(ambient)
}

pub(super) fn exp(p: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let theta = x.norm();
    if theta < 1e-300 {
        return p.clone();
    }
    let mut q = p * theta.cos() + x * (theta.sin() / theta);
    let n = q.norm();
    q /= n;
    q
}

pub(super) fn log(p: &DVector<f64>, q: &DVector<f64>) -> Result<DVector<f64>, GeometryError> {
    let c = p.dot(q);
    if c <= -1.0 + 1e-12 {
        return Err(GeometryError::CutLocus {
            manifold: "sphere",
            detail: "points are antipodal; the minimal geodesic is not unique".to_string(),
        });
    }
    let v = rejection(p, q, c);
    let n = v.norm();
    if n < 1e-300 {
        return Ok(DVector::zeros(p.len()));
    }
    let theta = n.atan2(c);
    Ok(v * (theta / n))
}

pub(super) fn transport(
    p: &DVector<f64>,
    q: &DVector<f64>,
    x: &DVector<f64>,
) -> Result<DVector<f64>, GeometryError> {
    let u = log(p, q)?;
    let theta = u.norm();
    if theta < 1e-300 {
        return Ok(x.clone());
    }
    let e = &u / theta;
    let a = e.dot(x);
    // The component along the geodesic rotates in the (p, e) plane; the
    // orthogonal complement is carried unchanged.
    let moved = x + (&e * (theta.cos() - 1.0) - p * theta.sin()) * a;
    Ok(project(q, &moved))
}
