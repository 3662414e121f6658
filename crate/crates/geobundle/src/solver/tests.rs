use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::error::GeometryError;
use crate::manifold::{random_unit_tangent, ManifoldKind, ManifoldPoint, TangentVector};

/// f(x) = |x| on the real line with a deterministic oracle (slope +1 at 0).
struct AbsValue {
    kind: ManifoldKind,
}

impl AbsValue {
    fn new() -> Self {
        Self {
            kind: ManifoldKind::Euclidean(1),
        }
    }
}

impl Problem for AbsValue {
    fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    fn objective(&self, p: &ManifoldPoint) -> f64 {
        p.as_slice()[0].abs()
    }

    fn subgradient(
        &self,
        p: &ManifoldPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        let slope = if p.as_slice()[0] < 0.0 { -1.0 } else { 1.0 };
        TangentVector::new(p.clone(), vec![slope])
    }

    fn is_interior(&self, _p: &ManifoldPoint) -> bool {
        true
    }

    fn curvature(&self) -> CurvatureProfile {
        CurvatureProfile::flat()
    }
}

/// Constant objective with an exactly zero subgradient.
struct Constant {
    kind: ManifoldKind,
}

impl Problem for Constant {
    fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    fn objective(&self, _p: &ManifoldPoint) -> f64 {
        3.5
    }

    fn subgradient(
        &self,
        p: &ManifoldPoint,
        _rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        Ok(p.zero_tangent())
    }

    fn is_interior(&self, _p: &ManifoldPoint) -> bool {
        true
    }

    fn curvature(&self) -> CurvatureProfile {
        CurvatureProfile::flat()
    }
}

/// Distance to the north pole on the sphere, restricted to a ball around it.
struct SphereBall {
    kind: ManifoldKind,
    center: ManifoldPoint,
    radius: f64,
}

impl SphereBall {
    fn new(radius: f64) -> Self {
        let center = ManifoldPoint::new(ManifoldKind::Sphere(2), vec![0.0, 0.0, 1.0]).unwrap();
        Self {
            kind: ManifoldKind::Sphere(2),
            center,
            radius,
        }
    }
}

impl Problem for SphereBall {
    fn kind(&self) -> &ManifoldKind {
        &self.kind
    }

    fn objective(&self, p: &ManifoldPoint) -> f64 {
        if self.is_interior(p) {
            p.distance(&self.center).unwrap()
        } else {
            f64::INFINITY
        }
    }

    fn subgradient(
        &self,
        p: &ManifoldPoint,
        rng: &mut dyn RngCore,
    ) -> Result<TangentVector, GeometryError> {
        let d = p.distance(&self.center)?;
        if d < 1e-14 {
            return Ok(random_unit_tangent(p, rng));
        }
        Ok(p.log(&self.center)?.scale(-1.0 / d))
    }

    fn is_interior(&self, p: &ManifoldPoint) -> bool {
        p.distance(&self.center).unwrap() < self.radius - 1e-10
    }

    fn curvature(&self) -> CurvatureProfile {
        CurvatureProfile::new(1.0, 1.0, 2.0 * self.radius).unwrap()
    }
}

fn euclidean_point(x: f64) -> ManifoldPoint {
    ManifoldPoint::new(ManifoldKind::Euclidean(1), vec![x]).unwrap()
}

fn rng() -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(1234)
}

#[test]
fn rcbm_minimizes_the_absolute_value() {
    let problem = AbsValue::new();
    let params = SolverParams {
        max_iterations: 200,
        ..SolverParams::default()
    };
    let report = rcbm(&problem, &euclidean_point(1.0), &params, &mut rng()).unwrap();
    assert_eq!(report.termination, Termination::ToleranceMet);
    assert!(report.final_point.as_slice()[0].abs() <= 1e-4);
    assert!(report.final_value <= 1e-4);
    assert!(report.iterations <= 200);
    // Flat space: no curvature remainder ever.
    assert!(report.trace.iter().all(|r| r.sigma == 0.0));
}

#[test]
fn rcbm_serious_objectives_are_monotone() {
    let problem = AbsValue::new();
    let report = rcbm(
        &problem,
        &euclidean_point(7.3),
        &SolverParams::default(),
        &mut rng(),
    )
    .unwrap();
    let serious: Vec<f64> = report
        .trace
        .iter()
        .filter(|r| r.step == StepType::Serious || r.step == StepType::Final)
        .map(|r| r.objective)
        .collect();
    for pair in serious.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-12);
    }
    // Sign invariants hold at every iteration.
    for record in &report.trace {
        assert!(record.epsilon >= 0.0);
        assert!(record.sigma >= 0.0);
        assert!(record.xi <= 1e-12);
    }
}

#[test]
fn rcbm_on_a_constant_objective_stops_immediately() {
    let problem = Constant {
        kind: ManifoldKind::Euclidean(2),
    };
    let p0 = ManifoldPoint::new(ManifoldKind::Euclidean(2), vec![1.0, 2.0]).unwrap();
    let report = rcbm(&problem, &p0, &SolverParams::default(), &mut rng()).unwrap();
    assert_eq!(report.termination, Termination::ToleranceMet);
    assert!(report.iterations <= 1);
    assert_eq!(report.final_value, 3.5);
}

#[test]
fn rcbm_rejects_exterior_initial_points() {
    let problem = SphereBall::new(0.5);
    let outside = ManifoldPoint::new(ManifoldKind::Sphere(2), vec![1.0, 0.0, 0.0]).unwrap();
    assert!(matches!(
        rcbm(&problem, &outside, &SolverParams::default(), &mut rng()),
        Err(SolverError::Precondition(_))
    ));
}

#[test]
fn params_validation_catches_bad_ranges() {
    let mut params = SolverParams::default();
    params.descent_coefficient = 1.0;
    assert!(params.validate().is_err());
    let mut params = SolverParams::default();
    params.contraction = 0.0;
    assert!(params.validate().is_err());
    let mut params = SolverParams::default();
    params.tolerance = 0.0;
    assert!(params.validate().is_err());
}

#[test]
fn domain_backtrack_accepts_full_steps_in_flat_space() {
    let problem = AbsValue::new();
    let p = euclidean_point(2.0);
    let d = TangentVector::new(p.clone(), vec![-5.0]).unwrap();
    let (t, q) = domain_backtrack(&problem, &p, &d, &SolverParams::default()).unwrap();
    assert_eq!(t, 1.0);
    assert_eq!(q.as_slice()[0], -3.0);
}

#[test]
fn domain_backtrack_contracts_to_the_interior() {
    // Ball of radius 0.5 around the pole; a step of length 2 must contract
    // until t * 2 < 0.5, i.e. the first power of beta below 0.25.
    let problem = SphereBall::new(0.5);
    let params = SolverParams {
        contraction: 0.5,
        ..SolverParams::default()
    };
    let pole = ManifoldPoint::new(ManifoldKind::Sphere(2), vec![0.0, 0.0, 1.0]).unwrap();
    let d = TangentVector::new(pole.clone(), vec![2.0, 0.0, 0.0]).unwrap();
    let (t, q) = domain_backtrack(&problem, &pole, &d, &params).unwrap();
    assert_eq!(t, 0.125);
    assert!(problem.is_interior(&q));
}

#[test]
fn domain_backtrack_detects_wrap_around() {
    // No domain restriction, but a step of length 3 pi / 2 wraps around the
    // sphere: the travelled distance is only pi / 2. At t = 0.5 the step
    // stays below the injectivity radius and is accepted.
    struct FreeSphere(ManifoldKind);
    impl Problem for FreeSphere {
        fn kind(&self) -> &ManifoldKind {
            &self.0
        }
        fn objective(&self, _p: &ManifoldPoint) -> f64 {
            0.0
        }
        fn subgradient(
            &self,
            p: &ManifoldPoint,
            _rng: &mut dyn RngCore,
        ) -> Result<TangentVector, GeometryError> {
            Ok(p.zero_tangent())
        }
        fn is_interior(&self, _p: &ManifoldPoint) -> bool {
            true
        }
        fn curvature(&self) -> CurvatureProfile {
            CurvatureProfile::new(1.0, 1.0, 1.0).unwrap()
        }
    }
    let problem = FreeSphere(ManifoldKind::Sphere(2));
    let params = SolverParams {
        contraction: 0.5,
        ..SolverParams::default()
    };
    let p = ManifoldPoint::new(ManifoldKind::Sphere(2), vec![0.0, 0.0, 1.0]).unwrap();
    let d = TangentVector::new(p.clone(), vec![1.5 * std::f64::consts::PI, 0.0, 0.0]).unwrap();
    let (t, _) = domain_backtrack(&problem, &p, &d, &params).unwrap();
    assert_eq!(t, 0.5);
}

#[test]
fn domain_backtrack_reports_exhaustion() {
    // Empty interior: every candidate is rejected.
    struct NoInterior(ManifoldKind);
    impl Problem for NoInterior {
        fn kind(&self) -> &ManifoldKind {
            &self.0
        }
        fn objective(&self, _p: &ManifoldPoint) -> f64 {
            f64::INFINITY
        }
        fn subgradient(
            &self,
            p: &ManifoldPoint,
            _rng: &mut dyn RngCore,
        ) -> Result<TangentVector, GeometryError> {
            Ok(p.zero_tangent())
        }
        fn is_interior(&self, _p: &ManifoldPoint) -> bool {
            false
        }
        fn curvature(&self) -> CurvatureProfile {
            CurvatureProfile::flat()
        }
    }
    let problem = NoInterior(ManifoldKind::Euclidean(1));
    let p = euclidean_point(0.0);
    let d = TangentVector::new(p.clone(), vec![1.0]).unwrap();
    assert!(matches!(
        domain_backtrack(&problem, &p, &d, &SolverParams::default()),
        Err(SolverError::StepFailure { .. })
    ));
}

#[test]
fn null_step_search_stops_immediately_in_flat_space() {
    // Hand trace on f(x) = |x|: serious point 1 (f = 1), aggregated
    // subgradient 2, xi = -4, trial t = 1 lands at -1. There
    // e = 1 - 1 - (-1)(1 - (-1)) = 2 and <P X, t d> = (-1)(-2) = 2, so the
    // stopping inequality m t xi < t * slope - e - r reads -3.6 < 0: zero
    // contractions, the crossing candidate is kept.
    let problem = AbsValue::new();
    let params = SolverParams {
        descent_coefficient: 0.9,
        contraction: 0.5,
        ..SolverParams::default()
    };
    let serious = euclidean_point(1.0);
    let aggregated = TangentVector::new(serious.clone(), vec![2.0]).unwrap();
    let candidate = euclidean_point(-1.0);
    let candidate_sub = TangentVector::new(candidate.clone(), vec![-1.0]).unwrap();
    let outcome = null_step_search(
        &problem,
        &serious,
        1.0,
        &aggregated,
        -4.0,
        1.0,
        candidate,
        1.0,
        candidate_sub,
        0.0,
        &params,
        &mut rng(),
    )
    .unwrap();
    assert!(!outcome.exhausted);
    assert_eq!(outcome.step_size, 1.0);
    assert_eq!(outcome.candidate.as_slice()[0], -1.0);
    assert_eq!(outcome.linearization_error, 2.0);
    assert_eq!(outcome.remainder, 0.0);
}

#[test]
fn null_step_search_flags_exhaustion() {
    // A bogus constant oracle keeps the shrinking condition satisfied
    // forever; the search must stop at its cap and say so.
    struct BogusOracle(ManifoldKind);
    impl Problem for BogusOracle {
        fn kind(&self) -> &ManifoldKind {
            &self.0
        }
        fn objective(&self, _p: &ManifoldPoint) -> f64 {
            0.0
        }
        fn subgradient(
            &self,
            p: &ManifoldPoint,
            _rng: &mut dyn RngCore,
        ) -> Result<TangentVector, GeometryError> {
            TangentVector::new(p.clone(), vec![1.0])
        }
        fn is_interior(&self, _p: &ManifoldPoint) -> bool {
            true
        }
        fn curvature(&self) -> CurvatureProfile {
            CurvatureProfile::flat()
        }
    }
    let problem = BogusOracle(ManifoldKind::Euclidean(1));
    let params = SolverParams {
        null_search_cap: 7,
        ..SolverParams::default()
    };
    let serious = euclidean_point(0.0);
    let aggregated = TangentVector::new(serious.clone(), vec![1.0]).unwrap();
    let candidate = euclidean_point(-1.0);
    let candidate_sub = TangentVector::new(candidate.clone(), vec![1.0]).unwrap();
    let outcome = null_step_search(
        &problem,
        &serious,
        0.0,
        &aggregated,
        -1.0,
        1.0,
        candidate,
        0.0,
        candidate_sub,
        0.0,
        &params,
        &mut rng(),
    )
    .unwrap();
    assert!(outcome.exhausted);
    // Seven contractions of beta = 0.975 from t = 1.
    let expected = 0.975_f64.powi(7);
    assert!((outcome.step_size - expected).abs() < 1e-12);
}

#[test]
fn rcbm_reports_failure_when_the_domain_pins_the_iterate() {
    // Only a hair-thin neighborhood of the start is interior, so every
    // trial step is rejected and the backtracking cap converts the run
    // into a diagnosable subproblem failure at the best iterate.
    struct Pinned(ManifoldKind);
    impl Problem for Pinned {
        fn kind(&self) -> &ManifoldKind {
            &self.0
        }
        fn objective(&self, p: &ManifoldPoint) -> f64 {
            p.as_slice()[0]
        }
        fn subgradient(
            &self,
            p: &ManifoldPoint,
            _rng: &mut dyn RngCore,
        ) -> Result<TangentVector, GeometryError> {
            TangentVector::new(p.clone(), vec![1.0])
        }
        fn is_interior(&self, p: &ManifoldPoint) -> bool {
            (p.as_slice()[0] - 1.0).abs() < 1e-6
        }
        fn curvature(&self) -> CurvatureProfile {
            CurvatureProfile::flat()
        }
    }
    let problem = Pinned(ManifoldKind::Euclidean(1));
    let report = rcbm(
        &problem,
        &euclidean_point(1.0),
        &SolverParams::default(),
        &mut rng(),
    )
    .unwrap();
    assert_eq!(report.termination, Termination::SubproblemFailure);
    assert_eq!(report.final_point.as_slice(), &[1.0]);
}

#[test]
fn sgm_minimizes_the_absolute_value() {
    let problem = AbsValue::new();
    let report = sgm(
        &problem,
        &euclidean_point(1.0),
        &StepRule::InverseIteration(1.0),
        200,
        &mut rng(),
    )
    .unwrap();
    assert!(report.final_value <= 1e-2);
}

#[test]
fn sgm_stays_put_on_zero_subgradients() {
    let problem = Constant {
        kind: ManifoldKind::Euclidean(1),
    };
    let report = sgm(
        &problem,
        &euclidean_point(0.7),
        &StepRule::Constant(0.1),
        50,
        &mut rng(),
    )
    .unwrap();
    assert_eq!(report.termination, Termination::ToleranceMet);
    assert_eq!(report.final_point.as_slice()[0], 0.7);
}

#[test]
fn seeded_runs_are_identical() {
    // The ball objective uses the randomized coincidence rule at the pole,
    // so the oracle stream matters.
    let problem = SphereBall::new(0.5);
    let pole = ManifoldPoint::new(ManifoldKind::Sphere(2), vec![0.0, 0.0, 1.0]).unwrap();
    let run = |seed: u64| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        sgm(
            &problem,
            &pole,
            &StepRule::InverseIteration(0.1),
            40,
            &mut rng,
        )
        .unwrap()
    };
    let a = run(5);
    let b = run(5);
    assert_eq!(a.final_point.as_slice(), b.final_point.as_slice());
    assert_eq!(a.final_value, b.final_value);
    let values_a: Vec<f64> = a.trace.iter().map(|r| r.objective).collect();
    let values_b: Vec<f64> = b.trace.iter().map(|r| r.objective).collect();
    assert_eq!(values_a, values_b);
}
