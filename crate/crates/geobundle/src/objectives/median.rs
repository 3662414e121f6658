//! Weighted Riemannian geometric median.
//!
//! `f(p) = sum_j w_j dist(p, q_j)` with the distance subgradient
//! `-log_p q_j / dist(p, q_j)` away from the data and a random unit tangent
//! at coincident points, where the subdifferential is the whole unit ball.

use rand::RngCore;

use super::{curvature_bounds_for, GeodesicBall};
use crate::curvature::CurvatureProfile;
use crate::error::GeometryError;
use crate::manifold::{
    canonical_base_point, random_tangent, random_unit_tangent, ManifoldKind, ManifoldPoint,
    TangentVector,
};
use crate::solver::Problem;

/// Distances below this count as coincidence with a data point.
const COINCIDENCE_TOLERANCE: f64 = 1e-14;

/// Weighted geometric median problem, optionally restricted to a geodesic
/// ball (the objective is `+inf` outside it).
#[derive(Debug, Clone)]
pub struct MedianProblem {
    kind: ManifoldKind,
    data: Vec<ManifoldPoint>,
    weights: Vec<f64>,
    domain: Option<GeodesicBall>,
    curvature: CurvatureProfile,
    initial: ManifoldPoint,
}

impl MedianProblem {
    pub fn new(
        data: Vec<ManifoldPoint>,
        weights: Vec<f64>,
        domain: Option<GeodesicBall>,
        curvature: CurvatureProfile,
    ) -> Result<Self, GeometryError> {
        let first = data.first().ok_or_else(|| GeometryError::Invalid {
            what: "median data",
            detail: "need at least one data point".to_string(),
        })?;
        let kind = first.kind().clone();
        let invalid = |detail: String| GeometryError::Invalid {
            what: "median problem",
            detail,
        };
        if weights.len() != data.len() {
            return Err(invalid(format!(
                "{} weights for {} data points",
                weights.len(),
                data.len()
            )));
        }
        if weights.iter().any(|w| *w < 0.0) {
            return Err(invalid("weights must be nonnegative".to_string()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("weights sum to {total}, not 1")));
        }
        for q in &data {
            if q.kind() != &kind {
                return Err(kind_mismatch(&kind, q.kind()));
            }
            if let Some(ball) = &domain {
                if !ball.contains_interior(q) {
                    return Err(invalid("data point outside the domain ball".to_string()));
                }
            }
        }
        let (_, far_index) = max_pairwise_distance(&data)?;
        let initial = data[far_index].clone();
        Ok(Self {
            kind,
            data,
            weights,
            domain,
            curvature,
            initial,
        })
    }

    /// Uniform weights `1/N`.
    pub fn uniform(
        data: Vec<ManifoldPoint>,
        domain: Option<GeodesicBall>,
        curvature: CurvatureProfile,
    ) -> Result<Self, GeometryError> {
        let n = data.len().max(1);
        Self::new(data, vec![1.0 / n as f64; n], domain, curvature)
    }

    /// Gaussian data on a Hadamard manifold: tangents at the canonical base
    /// point pushed through the exponential map. The domain diameter is set
    /// to twice the maximal pairwise distance of the data.
    pub fn gaussian_hadamard(
        kind: &ManifoldKind,
        n_data: usize,
        dispersion: f64,
        rng: &mut dyn RngCore,
    ) -> Result<Self, GeometryError> {
        let (lower, upper) = curvature_bounds_for(kind);
        if upper > 0.0 {
            return Err(GeometryError::Invalid {
                what: "median problem",
                detail: format!("{kind} is not a Hadamard manifold"),
            });
        }
        let base = canonical_base_point(kind);
        let data: Vec<ManifoldPoint> = (0..n_data.max(1))
            .map(|_| base.exp(&random_tangent(&base, rng, dispersion)))
            .collect::<Result<_, _>>()?;
        let (max_dist, _) = max_pairwise_distance(&data)?;
        let curvature = if lower == 0.0 && upper == 0.0 {
            CurvatureProfile::flat()
        } else {
            CurvatureProfile::new(lower, upper, (2.0 * max_dist).max(1e-6))?
        };
        Self::uniform(data, None, curvature)
    }

    /// Data in the ball of radius pi/6 around the pole of a sphere, with the
    /// objective restricted to that ball (diameter pi/3) and extended to
    /// `+inf` outside. The objective is not geodesically convex here.
    pub fn sphere_cap(
        dim: usize,
        n_data: usize,
        rng: &mut dyn RngCore,
    ) -> Result<Self, GeometryError> {
        let kind = ManifoldKind::Sphere(dim);
        kind.validate()?;
        let pole = canonical_base_point(&kind);
        let cap_radius = std::f64::consts::PI / 6.0;
        let data: Vec<ManifoldPoint> = (0..n_data.max(1))
            .map(|_| {
                // Resample until the tangent stays strictly inside the cap.
                loop {
                    let x = random_tangent(&pole, rng, cap_radius / 3.0);
                    if x.norm() < cap_radius - 1e-3 {
                        return pole.exp(&x);
                    }
                }
            })
            .collect::<Result<_, _>>()?;
        let curvature = CurvatureProfile::new(1.0, 1.0, 2.0 * cap_radius)?;
        let ball = GeodesicBall {
            center: pole,
            radius: cap_radius,
        };
        Self::uniform(data, Some(ball), curvature)
    }

    pub fn data(&self) -> &[ManifoldPoint] {
        &self.data
    }

    pub fn domain(&self) -> Option<&GeodesicBall> {
        self.domain.as_ref()
    }

    /// One of the two data points realizing the maximal pairwise distance;
    /// the standard starting point for the benchmark runs.
    pub fn initial_point(&self) -> &ManifoldPoint {
        &self.initial
    }

    /// Weighted distance sum at an interior point.
    pub fn value(&self, p: &ManifoldPoint) -> f64 {
        self.data
            .iter()
            .zip(&self.weights)
            .map(|(q, w)| w * p.distance(q).expect("same manifold"))
            .sum()
    }

    /// One subgradient of the objective at `p`; randomized only at points
    /// coinciding with a data point.
    pub fn subgradient_at(
        &self,
        p: &ManifoldPoint,
        rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        let mut total = p.zero_tangent();
        for (q, w) in self.data.iter().zip(&self.weights) {
            let d = p.distance(q)?;
            if d < COINCIDENCE_TOLERANCE {
                total.add_scaled(*w, &random_unit_tangent(p, rng))?;
            } else {
                total.add_scaled(-w / d, &p.log(q)?)?;
            }
        }
        Ok(total)
    }
}

fn kind_mismatch(expected: &ManifoldKind, found: &ManifoldKind) -> GeometryError {
    GeometryError::KindMismatch {
        expected: expected.to_string(),
        found: found.to_string(),
    }
}

/// Maximal pairwise distance and the index of the first point of a pair
/// realizing it.
fn max_pairwise_distance(data: &[ManifoldPoint]) -> Result<(f64, usize), GeometryError> {
    let mut best = (0.0, 0);
    for i in 0..data.len() {
        for j in (i + 1)..data.len() {
            let d = data[i].distance(&data[j])?;
            if d > best.0 {
                best = (d, i);
            }
        }
    }
    Ok(best)
}

impl Problem for MedianProblem {
    fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    fn objective(&self, p: &ManifoldPoint) -> f64 {
        if let Some(ball) = &self.domain {
            if !ball.contains_interior(p) {
                return f64::INFINITY;
            }
        }
        self.value(p)
    }

    fn subgradient(
        &self,
        p: &ManifoldPoint,
        rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        self.subgradient_at(p, rng)
    }

    fn is_interior(&self, p: &ManifoldPoint) -> bool {
        match &self.domain {
            Some(ball) => ball.contains_interior(p),
            None => true,
        }
    }

    fn curvature(&self) -> CurvatureProfile {
        self.curvature
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(42)
    }

    fn euclidean(x: f64) -> ManifoldPoint {
        ManifoldPoint::new(ManifoldKind::Euclidean(1), vec![x]).unwrap()
    }

    #[test]
    fn single_coincident_data_point() {
        let problem =
            MedianProblem::uniform(vec![euclidean(2.0)], None, CurvatureProfile::flat()).unwrap();
        let p = euclidean(2.0);
        assert_eq!(problem.value(&p), 0.0);
        let g = problem.subgradient_at(&p, &mut rng()).unwrap();
        assert_relative_eq!(g.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn symmetric_data_cancels_at_the_midpoint() {
        let problem = MedianProblem::uniform(
            vec![euclidean(-1.0), euclidean(1.0)],
            None,
            CurvatureProfile::flat(),
        )
        .unwrap();
        let p = euclidean(0.0);
        assert_eq!(problem.value(&p), 1.0);
        let g = problem.subgradient_at(&p, &mut rng()).unwrap();
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn sphere_single_summand_is_the_normalized_log() {
        let mut rng = rng();
        let kind = ManifoldKind::Sphere(2);
        let pole = canonical_base_point(&kind);
        let problem = MedianProblem::uniform(
            vec![pole.clone()],
            Some(GeodesicBall {
                center: pole.clone(),
                radius: std::f64::consts::PI / 6.0,
            }),
            CurvatureProfile::new(1.0, 1.0, std::f64::consts::PI / 3.0).unwrap(),
        )
        .unwrap();
        // A point strictly inside the ball but away from the pole.
        let p = pole
            .exp(&pole.project_tangent(&[0.2, 0.1, 0.0]).unwrap())
            .unwrap();
        let g = problem.subgradient_at(&p, &mut rng).unwrap();
        let d = p.distance(&pole).unwrap();
        let expected = p.log(&pole).unwrap().scale(-1.0 / d);
        assert_relative_eq!(
            (g.coords() - expected.coords()).norm(),
            0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(g.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn weights_must_form_a_distribution() {
        let data = vec![euclidean(0.0), euclidean(1.0)];
        assert!(
            MedianProblem::new(data.clone(), vec![0.7, 0.7], None, CurvatureProfile::flat())
                .is_err()
        );
        assert!(MedianProblem::new(data, vec![1.5, -0.5], None, CurvatureProfile::flat()).is_err());
    }

    #[test]
    fn initial_point_realizes_the_maximal_spread() {
        let problem = MedianProblem::uniform(
            vec![euclidean(0.0), euclidean(10.0), euclidean(3.0)],
            None,
            CurvatureProfile::flat(),
        )
        .unwrap();
        assert_eq!(problem.initial_point().as_slice(), &[0.0]);
    }

    #[test]
    fn sphere_cap_respects_the_domain_ball() {
        let mut rng = rng();
        let problem = MedianProblem::sphere_cap(2, 50, &mut rng).unwrap();
        let pole = canonical_base_point(&ManifoldKind::Sphere(2));
        for q in problem.data() {
            assert!(q.distance(&pole).unwrap() < std::f64::consts::PI / 6.0);
        }
        assert!(problem.is_interior(problem.initial_point()));
        // Outside the ball the objective is extended by +inf.
        let outside = ManifoldPoint::new(ManifoldKind::Sphere(2), vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(problem.objective(&outside), f64::INFINITY);
    }

    #[test]
    fn bundle_solver_finds_the_fermat_point_of_an_equilateral_triangle() {
        // The geometric median of an equilateral triangle is its centroid;
        // with unit circumradius the optimal value is 1.
        let vertices: Vec<ManifoldPoint> = (0..3)
            .map(|k| {
                let angle = 2.0 * std::f64::consts::PI * k as f64 / 3.0;
                ManifoldPoint::new(ManifoldKind::Euclidean(2), vec![angle.cos(), angle.sin()])
                    .unwrap()
            })
            .collect();
        let problem = MedianProblem::uniform(vertices, None, CurvatureProfile::flat()).unwrap();
        let report = crate::solver::rcbm(
            &problem,
            problem.initial_point(),
            &crate::solver::SolverParams::default(),
            &mut rng(),
        )
        .unwrap();
        assert!((report.final_value - 1.0).abs() <= 1e-3);
        assert!(report.final_point.coords().norm() <= 1e-3);
    }

    #[test]
    fn hadamard_subgradient_inequality() {
        // Geodesic convexity: f(q) >= f(p) + <g, log_p q> for random pairs.
        let mut rng = rng();
        for kind in [
            ManifoldKind::Hyperbolic(2),
            ManifoldKind::SymmetricPositiveDefinite(2),
        ] {
            let problem = MedianProblem::gaussian_hadamard(&kind, 20, 1.0, &mut rng).unwrap();
            for _ in 0..25 {
                let base = canonical_base_point(&kind);
                let p = base.exp(&random_tangent(&base, &mut rng, 0.8)).unwrap();
                let q = base.exp(&random_tangent(&base, &mut rng, 0.8)).unwrap();
                let g = problem.subgradient_at(&p, &mut rng).unwrap();
                let lower = problem.value(&p) + g.inner(&p.log(&q).unwrap()).unwrap();
                assert!(
                    problem.value(&q) >= lower - 1e-8,
                    "subgradient inequality violated on {kind}"
                );
            }
        }
    }

    #[test]
    fn subgradient_matches_finite_differences_on_smooth_regions() {
        let mut rng = rng();
        let kind = ManifoldKind::Hyperbolic(2);
        let problem = MedianProblem::gaussian_hadamard(&kind, 15, 1.0, &mut rng).unwrap();
        let base = canonical_base_point(&kind);
        let p = base.exp(&random_tangent(&base, &mut rng, 0.37)).unwrap();
        let g = problem.subgradient_at(&p, &mut rng).unwrap();
        let h = 1e-5;
        for _ in 0..10 {
            let v = random_unit_tangent(&p, &mut rng);
            let plus = problem.value(&p.exp(&v.scale(h)).unwrap());
            let minus = problem.value(&p.exp(&v.scale(-h)).unwrap());
            let fd = (plus - minus) / (2.0 * h);
            let analytic = g.inner(&v).unwrap();
            assert_relative_eq!(fd, analytic, max_relative = 1e-5, epsilon = 1e-9);
        }
    }
}
