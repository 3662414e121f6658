//! Benchmark objectives: Riemannian medians, total-variation signal
//! denoising, and spectral Procrustes alignment.

pub mod median;
pub mod procrustes;
pub mod tv;

pub use median::MedianProblem;
pub use procrustes::ProcrustesProblem;
pub use tv::{mse, square_wave_signal, TvProblem};

use crate::manifold::{ManifoldKind, ManifoldPoint};

/// Sectional curvature bounds `(lower, upper)` of the supported manifolds.
///
/// Spheres are pinched at 1, hyperbolic space at -1; SPD matrices with the
/// affine-invariant metric lie in [-1/2, 0]; the rotation groups in
/// [0, 1/4]. Product manifolds contain flat mixed planes, so their bounds
/// always include zero.
pub fn curvature_bounds_for(kind: &ManifoldKind) -> (f64, f64) {
    match kind {
        ManifoldKind::Euclidean(_) => (0.0, 0.0),
        ManifoldKind::Sphere(_) => (1.0, 1.0),
        ManifoldKind::Hyperbolic(_) => (-1.0, -1.0),
        ManifoldKind::SymmetricPositiveDefinite(_) => (-0.5, 0.0),
        ManifoldKind::SpecialOrthogonal(_) => (0.0, 0.25),
        ManifoldKind::Power(inner, _) => {
            let (lower, upper) = curvature_bounds_for(inner);
            (lower.min(0.0), upper.max(0.0))
        }
    }
}

/// A geodesic ball restricting an objective's effective domain.
#[derive(Debug, Clone)]
pub struct GeodesicBall {
    pub center: ManifoldPoint,
    pub radius: f64,
}

impl GeodesicBall {
    /// Strict interior test with a fixed guard against boundary rounding.
    pub fn contains_interior(&self, p: &ManifoldPoint) -> bool {
        match self.center.distance(p) {
            Ok(d) => d < self.radius - 1e-10,
            Err(_) => false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_curvature_bounds() {
        assert_eq!(
            curvature_bounds_for(&ManifoldKind::Hyperbolic(2)),
            (-1.0, -1.0)
        );
        assert_eq!(
            curvature_bounds_for(&ManifoldKind::SymmetricPositiveDefinite(3)),
            (-0.5, 0.0)
        );
        assert_eq!(
            curvature_bounds_for(&ManifoldKind::SpecialOrthogonal(20)),
            (0.0, 0.25)
        );
        assert_eq!(curvature_bounds_for(&ManifoldKind::Sphere(2)), (1.0, 1.0));
        assert_eq!(
            curvature_bounds_for(&ManifoldKind::Euclidean(5)),
            (0.0, 0.0)
        );
    }

    #[test]
    fn power_bounds_include_the_flat_mixed_planes() {
        let hyp_power = ManifoldKind::power(ManifoldKind::Hyperbolic(2), 4).unwrap();
        assert_eq!(curvature_bounds_for(&hyp_power), (-1.0, 0.0));
        let sph_power = ManifoldKind::power(ManifoldKind::Sphere(2), 4).unwrap();
        assert_eq!(curvature_bounds_for(&sph_power), (0.0, 1.0));
    }
}
