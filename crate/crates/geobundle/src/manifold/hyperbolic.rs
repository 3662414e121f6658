//! Hyperbolic space in the hyperboloid model.
//!
//! Points live on the upper sheet `<p, p>_M = -1` of the hyperboloid in
//! Minkowski space with signature `(+, ..., +, -)`; the last coordinate is
//! the time-like one.

use nalgebra::DVector;

const CLAMP_SLACK: f64 = 1e-12;

/// Minkowski bilinear form.
pub(super) fn minkowski(u: &DVector<f64>, v: &DVector<f64>) -> f64 {
    let n = u.len();
    let mut acc = 0.0;
    for i in 0..n - 1 {
        acc += u[i] * v[i];
    }
    acc - u[n - 1] * v[n - 1]
}

pub(super) fn project(p: &DVector<f64>, ambient: &DVector<f64>) -> DVector<f64> {
    ambient + p * minkowski(p, ambient)
}

/// Tangent norm; the Minkowski form restricted to a tangent space is
/// positive definite, the `max(0)` guards rounding at zero.
pub(super) fn tangent_norm(x: &DVector<f64>) -> f64 {
    minkowski(x, x).max(0.0).sqrt()
}

/// Unnormalized logarithm direction, projected back onto the tangent space
/// to kill the normal residue of rounding.
fn direction(p: &DVector<f64>, q: &DVector<f64>, c: f64) -> DVector<f64> {
    let v = q - p * c;
    project(p, &v)
}

pub(super) fn dist(p: &DVector<f64>, q: &DVector<f64>) -> f64 {
    let c = -minkowski(p, q);
    // asinh of sinh(theta) keeps full accuracy near zero, where
    // acosh(1 + x) would lose half the digits.
    let v = direction(p, q, c);
    tangent_norm(&v).asinh()
}

/// Rescales onto the hyperboloid sheet after rounding drift.
fn renormalize(mut p: DVector<f64>) -> DVector<f64> {
    let s = (-minkowski(&p, &p)).max(CLAMP_SLACK).sqrt();
    p /= s;
    let n = p.len();
    if p[n - 1] < 0.0 {
        p = -p;
    }
    p
}

pub(super) fn exp(p: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let theta = tangent_norm(x);
    if theta < 1e-300 {
        return p.clone();
    }
    renormalize(p * theta.cosh() + x * (theta.sinh() / theta))
}

pub(super) fn log(p: &DVector<f64>, q: &DVector<f64>) -> DVector<f64> {
    let c = -minkowski(p, q);
    let v = direction(p, q, c);
    let n = tangent_norm(&v);
    if n < 1e-300 {
        return DVector::zeros(p.len());
    }
    let theta = n.asinh();
    v * (theta / n)
}

pub(super) fn transport(p: &DVector<f64>, q: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
    let u = log(p, q);
    let theta = tangent_norm(&u);
    if theta < 1e-300 {
        return x.clone();
    }
    let e = &u / theta;
    let a = minkowski(&e, x);
    let moved = x + (&e * (theta.cosh() - 1.0) + p * theta.sinh()) * a;
    project(q, &moved)
}
