//! Dense matrix helpers for the SPD and rotation kernels.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::GeometryError;

pub(crate) fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub(crate) fn skew_part(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m - m.transpose()) * 0.5
}

/// Applies `f` to the eigenvalues of a symmetric matrix: `Q f(L) Q^T`.
pub(crate) fn symmetric_map(
    m: &DMatrix<f64>,
    f: impl Fn(f64) -> Result<f64, GeometryError>,
) -> Result<DMatrix<f64>, GeometryError> {
    let eig = SymmetricEigen::new(symmetrize(m));
    let mut diag = eig.eigenvalues.clone();
    for v in diag.iter_mut() {
        *v = f(*v)?;
    }
    let mapped = &eig.eigenvectors * DMatrix::from_diagonal(&diag) * eig.eigenvectors.transpose();
    Ok(symmetrize(&mapped))
}

pub(crate) fn spd_sqrt_pair(
    p: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>), GeometryError> {
    let eig = SymmetricEigen::new(symmetrize(p));
    let mut sqrt = eig.eigenvalues.clone();
    let mut isqrt = eig.eigenvalues.clone();
    for (s, i) in sqrt.iter_mut().zip(isqrt.iter_mut()) {
        if *s <= 0.0 {
            return Err(GeometryError::Invalid {
                what: "SPD matrix",
                detail: format!("eigenvalue {s:.3e} is not positive"),
            });
        }
        let r = s.sqrt();
        *s = r;
        *i = 1.0 / r;
    }
    let q = &eig.eigenvectors;
    let a = q * DMatrix::from_diagonal(&sqrt) * q.transpose();
    let b = q * DMatrix::from_diagonal(&isqrt) * q.transpose();
    Ok((symmetrize(&a), symmetrize(&b)))
}

pub(crate) fn spd_log(m: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    symmetric_map(m, |v| {
        if v <= 0.0 {
            Err(GeometryError::Invalid {
                what: "SPD matrix",
                detail: format!("eigenvalue {v:.3e} is not positive"),
            })
        } else {
            Ok(v.ln())
        }
    })
}

pub(crate) fn spd_exp(m: &DMatrix<f64>) -> DMatrix<f64> {
    symmetric_map(m, |v| Ok(v.exp())).expect("exponential map never fails on symmetric input")
}

/// `theta / sin(theta)` with `cos(theta) = c`, stable near `theta = 0`.
fn angle_over_sine(c: f64) -> f64 {
    let theta = c.clamp(-1.0, 1.0).acos();
    if theta < 1e-4 {
        let t2 = theta * theta;
        1.0 + t2 / 6.0 + 7.0 * t2 * t2 / 360.0
    } else {
        theta / theta.sin()
    }
}

/// Principal logarithm of a rotation matrix, returned as a skew-symmetric
/// matrix. Rotations with an eigenvalue at -1 lie on the cut locus of the
/// identity and are rejected.
///
/// A rotation is normal, so its symmetric part carries `cos(theta)` on the
/// invariant planes and its skew part `sin(theta)`; both share eigenspaces.
/// Rescaling the skew part by `theta / sin(theta)` per eigenvalue pair of
/// the symmetric part recovers the logarithm. This route only needs a
/// symmetric eigendecomposition, which converges unconditionally, unlike
/// the unsymmetric Schur iteration on the clustered spectra rotations have.
pub(crate) fn rotation_log(r: &DMatrix<f64>) -> Result<DMatrix<f64>, GeometryError> {
    let d = r.nrows();
    let eig = SymmetricEigen::new(symmetrize(r));
    for c in eig.eigenvalues.iter() {
        if *c <= -1.0 + 1e-12 {
            return Err(GeometryError::CutLocus {
                manifold: "rotation group",
                detail: "relative rotation has an eigenvalue at -1 (half-turn); the principal logarithm is not unique".to_string(),
            });
        }
    }
    // Skew part expressed in the eigenbasis of the symmetric part; entries
    // across well-separated eigenvalues vanish up to rounding.
    let basis = &eig.eigenvectors;
    let b = basis.transpose() * skew_part(r) * basis;
    let mut scaled = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            if i != j {
                let c = 0.5 * (eig.eigenvalues[i] + eig.eigenvalues[j]);
                scaled[(i, j)] = angle_over_sine(c) * b[(i, j)];
            }
        }
    }
    let log = basis * scaled * basis.transpose();
    Ok(skew_part(&log))
}

/// Nearest orthogonal matrix with positive determinant (polar projection).
pub(crate) fn project_rotation(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    let mut r = &u * &v_t;
    if r.determinant() < 0.0 {
        // Flip the column of U paired with the smallest singular value.
        let mut idx = 0;
        for (j, s) in svd.singular_values.iter().enumerate() {
            if *s < svd.singular_values[idx] {
                idx = j;
            }
        }
        let mut u = u;
        for i in 0..u.nrows() {
            u[(i, idx)] = -u[(i, idx)];
        }
        r = &u * &v_t;
    }
    r
}
