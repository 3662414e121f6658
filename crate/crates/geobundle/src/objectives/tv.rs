//! Total-variation denoising of manifold-valued signals.
//!
//! The objective on the power manifold `N^n` is
//! `f(p) = (1/n) (g(p, q) + alpha TV(p))` with the fidelity term
//! `g(p, q) = 1/2 sum_i dist(p_i, q_i)^2` and
//! `TV(p) = sum_i dist(p_i, p_{i+1})`.

use rand::RngCore;

use super::curvature_bounds_for;
use crate::curvature::CurvatureProfile;
use crate::error::GeometryError;
use crate::manifold::{
    lift_to_hyperboloid, random_tangent, random_unit_tangent, ManifoldKind, ManifoldPoint,
    TangentVector,
};
use crate::solver::Problem;

const COINCIDENCE_TOLERANCE: f64 = 1e-14;

/// Total-variation denoising problem against a fixed noisy signal.
#[derive(Debug, Clone)]
pub struct TvProblem {
    kind: ManifoldKind,
    noisy: ManifoldPoint,
    noisy_components: Vec<ManifoldPoint>,
    alpha: f64,
    curvature: CurvatureProfile,
}

impl TvProblem {
    /// Builds the problem from a noisy signal on a power manifold. The
    /// domain diameter behind the curvature profile is set to three times
    /// the maximal pairwise distance between the noisy signal values.
    pub fn new(noisy: ManifoldPoint, alpha: f64) -> Result<Self, GeometryError> {
        let kind = noisy.kind().clone();
        let ManifoldKind::Power(_, count) = &kind else {
            return Err(GeometryError::Invalid {
                what: "denoising problem",
                detail: format!("signal must live on a power manifold, got {kind}"),
            });
        };
        if *count < 2 {
            return Err(GeometryError::Invalid {
                what: "denoising problem",
                detail: "signal length must be at least 2".to_string(),
            });
        }
        if alpha < 0.0 {
            return Err(GeometryError::Invalid {
                what: "denoising problem",
                detail: format!("negative regularization weight {alpha}"),
            });
        }
        let noisy_components = noisy.components();
        let mut max_dist: f64 = 0.0;
        for i in 0..noisy_components.len() {
            for j in (i + 1)..noisy_components.len() {
                max_dist = max_dist.max(noisy_components[i].distance(&noisy_components[j])?);
            }
        }
        let (lower, upper) = curvature_bounds_for(&kind);
        let curvature = if lower == 0.0 && upper == 0.0 {
            CurvatureProfile::flat()
        } else {
            CurvatureProfile::new(lower, upper, (3.0 * max_dist).max(1e-6))?
        };
        Ok(Self {
            kind,
            noisy,
            noisy_components,
            alpha,
            curvature,
        })
    }

    pub fn len(&self) -> usize {
        self.noisy_components.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn noisy(&self) -> &ManifoldPoint {
        &self.noisy
    }

    /// Squared-distance data term `1/2 sum_i dist(p_i, q_i)^2`.
    pub fn fidelity(&self, p: &ManifoldPoint) -> f64 {
        p.components()
            .iter()
            .zip(&self.noisy_components)
            .map(|(pi, qi)| {
                let d = pi.distance(qi).expect("same manifold");
                0.5 * d * d
            })
            .sum()
    }

    /// First-difference total variation `sum_i dist(p_i, p_{i+1})`.
    pub fn total_variation(p: &ManifoldPoint) -> f64 {
        let parts = p.components();
        parts
            .windows(2)
            .map(|w| w[0].distance(&w[1]).expect("same manifold"))
            .sum()
    }

    /// Objective `(1/n) (fidelity + alpha * TV)`.
    pub fn value(&self, p: &ManifoldPoint) -> f64 {
        (self.fidelity(p) + self.alpha * Self::total_variation(p)) / self.len() as f64
    }

    /// Componentwise subgradient: the fidelity gradient `-log_{p_i} q_i`
    /// plus `alpha` times the distance subgradients of both neighboring
    /// differences, scaled by `1/n`. Coincident neighbors contribute random
    /// unit tangents.
    pub fn subgradient_at(
        &self,
        p: &ManifoldPoint,
        rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        let parts = p.components();
        let n = parts.len();
        let mut slots: Vec<TangentVector> = parts.iter().map(|pi| pi.zero_tangent()).collect();
        for (i, (pi, qi)) in parts.iter().zip(&self.noisy_components).enumerate() {
            slots[i].add_scaled(-1.0, &pi.log(qi)?)?;
        }
        for i in 0..n - 1 {
            let d = parts[i].distance(&parts[i + 1])?;
            if d < COINCIDENCE_TOLERANCE {
                slots[i].add_scaled(self.alpha, &random_unit_tangent(&parts[i], rng))?;
                slots[i + 1].add_scaled(self.alpha, &random_unit_tangent(&parts[i + 1], rng))?;
            } else {
                slots[i].add_scaled(-self.alpha / d, &parts[i].log(&parts[i + 1])?)?;
                slots[i + 1].add_scaled(-self.alpha / d, &parts[i + 1].log(&parts[i])?)?;
            }
        }
        let combined = TangentVector::power_from_components(p, &slots)?;
        Ok(combined.scale(1.0 / n as f64))
    }
}

impl Problem for TvProblem {
    fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    fn objective(&self, p: &ManifoldPoint) -> f64 {
        self.value(p)
    }

    fn subgradient(
        &self,
        p: &ManifoldPoint,
        rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        self.subgradient_at(p, rng)
    }

    fn is_interior(&self, _p: &ManifoldPoint) -> bool {
        true
    }

    fn curvature(&self) -> CurvatureProfile {
        self.curvature
    }
}

/// Mean squared error between two signals: `dist(p, q) / n`, the power
/// distance divided by the signal length.
pub fn mse(p: &ManifoldPoint, q: &ManifoldPoint) -> Result<f64, GeometryError> {
    let n = match p.kind() {
        ManifoldKind::Power(_, count) => *count,
        _ => 1,
    };
    Ok(p.distance(q)? / n as f64)
}

/// Builds the square-wave test signal on the hyperbolic plane.
///
/// The wave `t -> (t, sgn(sin(2 pi t / period)))` is sampled on `n_grid`
/// points of `[a, b]`; the first point, the last point, and the two points
/// adjacent to each jump are lifted onto the hyperboloid by
/// `(w, sqrt(|w|^2 + 1))`, and `floor(n_grid * period / (2 (b - a)))` points
/// are sampled uniformly from each geodesic joining consecutive lifted
/// pairs. The noisy copy perturbs every clean point by the exponential of a
/// Gaussian tangent with the given standard deviation.
pub fn square_wave_signal(
    a: f64,
    b: f64,
    period: f64,
    n_grid: usize,
    noise_stddev: f64,
    rng: &mut dyn RngCore,
) -> Result<(ManifoldPoint, ManifoldPoint), GeometryError> {
    if !(b > a) || !(period > 0.0) || n_grid < 4 {
        return Err(GeometryError::Invalid {
            what: "square wave parameters",
            detail: format!(
                "need b > a, period > 0, n_grid >= 4; got [{a}, {b}], {period}, {n_grid}"
            ),
        });
    }
    let tau = (b - a) / n_grid as f64;
    let level = |t: f64| (2.0 * std::f64::consts::PI * t / period).sin().signum();
    let grid: Vec<(f64, f64)> = (0..n_grid)
        .map(|i| {
            let t = a + i as f64 * tau;
            (t, level(t))
        })
        .collect();

    // First point, last point, and both neighbors of every jump, in order.
    let mut marked = vec![false; n_grid];
    marked[0] = true;
    marked[n_grid - 1] = true;
    for i in 1..n_grid - 1 {
        if grid[i].1 != grid[i + 1].1 {
            marked[i] = true;
            marked[i + 1] = true;
        }
    }
    let anchors: Vec<ManifoldPoint> = marked
        .iter()
        .enumerate()
        .filter(|(_, m)| **m)
        .map(|(i, _)| lift_to_hyperboloid(&[grid[i].0, grid[i].1]))
        .collect();
    if anchors.len() % 2 != 0 {
        return Err(GeometryError::Invalid {
            what: "square wave parameters",
            detail: format!("{} anchor points, expected an even count", anchors.len()),
        });
    }

    let samples_per_segment = (n_grid as f64 * period / (2.0 * (b - a))).floor() as usize;
    if samples_per_segment == 0 {
        return Err(GeometryError::Invalid {
            what: "square wave parameters",
            detail: "period too short for the grid: no samples per segment".to_string(),
        });
    }
    let mut clean_parts = Vec::with_capacity(samples_per_segment * anchors.len() / 2);
    for pair in anchors.chunks_exact(2) {
        let from = &pair[0];
        let direction = from.log(&pair[1])?;
        for j in 0..samples_per_segment {
            let t = if samples_per_segment == 1 {
                0.0
            } else {
                j as f64 / (samples_per_segment - 1) as f64
            };
            clean_parts.push(from.exp(&direction.scale(t))?);
        }
    }
    let clean = ManifoldPoint::power_from_components(&clean_parts)?;

    let noisy_parts: Vec<ManifoldPoint> = clean_parts
        .iter()
        .map(|q| q.exp(&random_tangent(q, rng, noise_stddev)))
        .collect::<Result<_, _>>()?;
    let noisy = ManifoldPoint::power_from_components(&noisy_parts)?;
    Ok((clean, noisy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    fn scalar_signal(values: &[f64]) -> ManifoldPoint {
        let parts: Vec<ManifoldPoint> = values
            .iter()
            .map(|v| ManifoldPoint::new(ManifoldKind::Euclidean(1), vec![*v]).unwrap())
            .collect();
        ManifoldPoint::power_from_components(&parts).unwrap()
    }

    #[test]
    fn constant_signal_at_the_data_has_zero_objective() {
        let q = scalar_signal(&[2.0, 2.0, 2.0]);
        let problem = TvProblem::new(q.clone(), 0.5).unwrap();
        assert_eq!(problem.value(&q), 0.0);
    }

    #[test]
    fn hand_evaluated_two_sample_case() {
        // q = (0, 0), p = (0, 1), alpha = 1:
        // (1/2) * (1/2 * 1 + 1 * 1) = 0.75
        let problem = TvProblem::new(scalar_signal(&[0.0, 0.0]), 1.0).unwrap();
        let p = scalar_signal(&[0.0, 1.0]);
        assert_relative_eq!(problem.value(&p), 0.75, epsilon = 1e-15);
    }

    #[test]
    fn value_decomposes_into_nonnegative_parts() {
        let mut rng = rng();
        let q = scalar_signal(&[0.0, 1.0, -0.5, 2.0]);
        let problem = TvProblem::new(q, 0.5).unwrap();
        for _ in 0..10 {
            let parts: Vec<f64> = (0..4)
                .map(|_| rand_distr::Distribution::sample(&rand_distr::StandardNormal, &mut rng))
                .collect();
            let p = scalar_signal(&parts);
            let fid = problem.fidelity(&p);
            let tv = TvProblem::total_variation(&p);
            assert!(fid >= 0.0 && tv >= 0.0);
            assert_relative_eq!(
                problem.value(&p),
                (fid + 0.5 * tv) / 4.0,
                max_relative = 1e-14
            );
        }
    }

    #[test]
    fn zero_alpha_reduces_to_the_fidelity_gradient() {
        let q = scalar_signal(&[0.0, 0.0, 0.0]);
        let problem = TvProblem::new(q, 0.0).unwrap();
        let p = scalar_signal(&[1.0, -2.0, 0.5]);
        let g = problem.subgradient_at(&p, &mut rng()).unwrap();
        // -(1/n) log_p q = (1/3) (p - q)
        assert_relative_eq!(g.as_slice()[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(g.as_slice()[1], -2.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(g.as_slice()[2], 0.5 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn subgradient_matches_finite_differences_off_the_kinks() {
        let mut rng = rng();
        let (_, noisy) = square_wave_signal(-2.0, 2.0, 2.0, 16, 0.1, &mut rng).unwrap();
        let problem = TvProblem::new(noisy.clone(), 0.5).unwrap();
        // The noisy signal has pairwise-distinct neighbors, so the objective
        // is differentiable in a neighborhood.
        let g = problem.subgradient_at(&noisy, &mut rng).unwrap();
        let h = 1e-6;
        for _ in 0..5 {
            let v = random_unit_tangent(&noisy, &mut rng);
            let plus = problem.value(&noisy.exp(&v.scale(h)).unwrap());
            let minus = problem.value(&noisy.exp(&v.scale(-h)).unwrap());
            let fd = (plus - minus) / (2.0 * h);
            assert_relative_eq!(
                fd,
                g.inner(&v).unwrap(),
                max_relative = 1e-4,
                epsilon = 1e-8
            );
        }
    }

    #[test]
    fn mse_examples() {
        let p = scalar_signal(&[0.0, 1.0, 2.0, 3.0]);
        assert_eq!(mse(&p, &p).unwrap(), 0.0);
        let q = scalar_signal(&[1.0, 2.0, 3.0, 4.0]);
        // (1/4) sqrt(4) = 0.5
        assert_relative_eq!(mse(&p, &q).unwrap(), 0.5, epsilon = 1e-15);
        let a = ManifoldPoint::new(ManifoldKind::Euclidean(1), vec![0.0]).unwrap();
        let b = ManifoldPoint::new(ManifoldKind::Euclidean(1), vec![3.0]).unwrap();
        assert_eq!(mse(&a, &b).unwrap(), 3.0);
    }

    #[test]
    fn paper_scale_square_wave_has_the_documented_length() {
        let mut rng = rng();
        let (clean, noisy) = square_wave_signal(-6.0, 6.0, 3.0, 496, 0.1, &mut rng).unwrap();
        assert_eq!(clean.components().len(), 496);
        assert_eq!(noisy.components().len(), 496);
    }

    #[test]
    fn desk_scale_square_wave_has_length_64() {
        let mut rng = rng();
        let (clean, _) = square_wave_signal(-6.0, 6.0, 3.0, 64, 0.1, &mut rng).unwrap();
        assert_eq!(clean.components().len(), 64);
    }

    #[test]
    fn zero_noise_copies_the_clean_signal() {
        let mut rng = rng();
        let (clean, noisy) = square_wave_signal(-6.0, 6.0, 3.0, 64, 0.0, &mut rng).unwrap();
        assert_eq!(clean.as_slice(), noisy.as_slice());
    }

    #[test]
    fn degenerate_intervals_are_rejected() {
        let mut rng = rng();
        assert!(square_wave_signal(2.0, 2.0, 1.0, 64, 0.1, &mut rng).is_err());
        assert!(square_wave_signal(0.0, 1.0, -1.0, 64, 0.1, &mut rng).is_err());
    }
}
