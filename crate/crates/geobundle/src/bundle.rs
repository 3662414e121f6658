//! Subgradient bundle: candidate points, their subgradients, linearization
//! errors, curvature remainders, and weight-based purging.
//!
//! Subgradients are stored at their origin points; the copy transported into
//! the current serious iterate is cached per entry and recomputed whenever
//! the serious iterate moves. Transport is path dependent on curved
//! manifolds, so cached copies are never chained across serious steps.

use nalgebra::DVector;

use crate::error::GeometryError;
use crate::manifold::{ManifoldPoint, TangentVector};

/// Weights at or below this threshold count as zero when purging.
pub const WEIGHT_THRESHOLD: f64 = 1e-12;

/// Linearization errors this far below zero are attributed to rounding;
/// anything worse signals a non-convex objective or an oracle violation and
/// is clamped with a diagnostic count.
pub const NEGATIVE_ERROR_TOLERANCE: f64 = 1e-10;

/// Gap between the serious value and the cutting plane of one candidate.
///
/// Returns `f(p) - f(q) - <X_q, log_q p>`, clamped at zero from below.
/// Nonnegative up to rounding whenever `X_q` is a true subgradient of a
/// geodesically convex objective.
pub fn linearization_error(
    serious_value: f64,
    candidate_value: f64,
    subgradient: &TangentVector,
    serious_point: &ManifoldPoint,
) -> Result<f64, GeometryError> {
    let raw = raw_linearization_error(serious_value, candidate_value, subgradient, serious_point)?;
    if raw < -NEGATIVE_ERROR_TOLERANCE {
        log::debug!("clamping negative linearization error {raw:.3e}");
    }
    Ok(raw.max(0.0))
}

fn raw_linearization_error(
    serious_value: f64,
    candidate_value: f64,
    subgradient: &TangentVector,
    serious_point: &ManifoldPoint,
) -> Result<f64, GeometryError> {
    let back = subgradient.base().log(serious_point)?;
    Ok(serious_value - candidate_value - subgradient.inner(&back)?)
}

/// Curvature remainder `rho * |X_q| * |log_q p|` compensating the transport
/// of a subgradient into the serious iterate.
pub fn remainder(
    rho: f64,
    subgradient: &TangentVector,
    serious_point: &ManifoldPoint,
) -> Result<f64, GeometryError> {
    let back = subgradient.base().log(serious_point)?;
    Ok(rho * subgradient.norm() * back.norm())
}

/// One bundle element: a candidate point with its subgradient and the
/// quantities measured against the current serious iterate.
#[derive(Debug, Clone)]
pub struct BundleEntry {
    /// Iteration at which the candidate was generated.
    pub index: usize,
    /// The candidate point.
    pub point: ManifoldPoint,
    /// Subgradient sampled at the candidate, based there.
    pub subgradient: TangentVector,
    /// Objective value at the candidate.
    pub value: f64,
    /// Linearization error against the serious iterate (>= 0).
    pub linearization_error: f64,
    /// Curvature remainder against the serious iterate (>= 0).
    pub remainder: f64,
    /// Simplex weight from the latest subproblem solve.
    pub weight: f64,
    transported: DVector<f64>,
}

impl BundleEntry {
    /// Cached subgradient coordinates transported to the serious iterate.
    pub fn transported_coords(&self) -> &DVector<f64> {
        &self.transported
    }
}

/// The bundle: entries in index order plus the serious iterate they are
/// measured against.
#[derive(Debug, Clone)]
pub struct Bundle {
    entries: Vec<BundleEntry>,
    serious_point: ManifoldPoint,
    serious_value: f64,
    cap: usize,
    negative_error_clamps: usize,
}

impl Bundle {
    /// Starts a bundle at the initial iterate with its first subgradient.
    pub fn new(
        serious_point: ManifoldPoint,
        serious_value: f64,
        subgradient: TangentVector,
        cap: usize,
    ) -> Result<Self, GeometryError> {
        assert!(cap >= 1, "bundle cap must be positive");
        let transported = subgradient.transport(&serious_point)?.coords().clone();
        let entry = BundleEntry {
            index: 0,
            point: serious_point.clone(),
            subgradient,
            value: serious_value,
            linearization_error: 0.0,
            remainder: 0.0,
            weight: 1.0,
            transported,
        };
        Ok(Self {
            entries: vec![entry],
            serious_point,
            serious_value,
            cap,
            negative_error_clamps: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[BundleEntry] {
        &self.entries
    }

    pub fn serious_point(&self) -> &ManifoldPoint {
        &self.serious_point
    }

    pub fn serious_value(&self) -> f64 {
        self.serious_value
    }

    /// How many linearization errors were clamped from below zero.
    pub fn negative_error_clamps(&self) -> usize {
        self.negative_error_clamps
    }

    /// The cached transported subgradient of entry `j`, based at the serious
    /// iterate.
    pub fn transported(&self, j: usize) -> TangentVector {
        TangentVector::from_parts_unchecked(
            self.serious_point.clone(),
            self.entries[j].transported.clone(),
        )
    }

    /// Per-entry subproblem costs `e_j + r_j`.
    pub fn linear_costs(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.entries.len(),
            self.entries
                .iter()
                .map(|e| e.linearization_error + e.remainder),
        )
    }

    /// Stores the simplex weights of the latest subproblem solve.
    pub fn set_weights(&mut self, weights: &DVector<f64>) {
        assert_eq!(weights.len(), self.entries.len(), "weight count mismatch");
        debug_assert!(
            (weights.sum() - 1.0).abs() <= 1e-8,
            "weights do not form a distribution"
        );
        for (entry, w) in self.entries.iter_mut().zip(weights.iter()) {
            debug_assert!(*w >= -WEIGHT_THRESHOLD && *w <= 1.0 + WEIGHT_THRESHOLD);
            entry.weight = *w;
        }
    }

    /// Appends the newest candidate. Its weight is set to one so it always
    /// survives the next purge; `refresh` recomputes its errors if the
    /// serious iterate moved.
    pub fn push_candidate(
        &mut self,
        index: usize,
        point: ManifoldPoint,
        subgradient: TangentVector,
        value: f64,
        linearization_error: f64,
        remainder: f64,
    ) -> Result<(), GeometryError> {
        let transported = subgradient.transport(&self.serious_point)?.coords().clone();
        self.entries.push(BundleEntry {
            index,
            point,
            subgradient,
            value,
            linearization_error,
            remainder,
            weight: 1.0,
            transported,
        });
        Ok(())
    }

    /// Recomputes every entry's linearization error, remainder, and
    /// transported subgradient against a new serious iterate. A null step
    /// (unchanged iterate) leaves the stored values untouched.
    pub fn refresh(
        &mut self,
        new_point: &ManifoldPoint,
        new_value: f64,
        rho: f64,
    ) -> Result<(), GeometryError> {
        if new_point.coords() == self.serious_point.coords() {
            return Ok(());
        }
        self.serious_point = new_point.clone();
        self.serious_value = new_value;
        for entry in &mut self.entries {
            let back = entry.point.log(&self.serious_point)?;
            let raw = new_value - entry.value - entry.subgradient.inner(&back)?;
            if raw < -NEGATIVE_ERROR_TOLERANCE {
                self.negative_error_clamps += 1;
                log::debug!(
                    "entry {}: clamping negative linearization error {raw:.3e}",
                    entry.index
                );
            }
            entry.linearization_error = raw.max(0.0);
            entry.remainder = rho * entry.subgradient.norm() * back.norm();
            entry.transported = entry
                .subgradient
                .transport(&self.serious_point)?
                .coords()
                .clone();
        }
        Ok(())
    }

    /// Drops entries whose weight vanished in the latest solve, then enforces
    /// the size cap: the oldest entry goes, unless it coincides with the last
    /// serious iterate, in which case the second-oldest goes.
    pub fn purge(&mut self) {
        self.entries.retain(|e| e.weight > WEIGHT_THRESHOLD);
        while self.entries.len() > self.cap {
            let victim = if self.entries[0].point.coords() == self.serious_point.coords() {
                1
            } else {
                0
            };
            self.entries.remove(victim);
        }
    }

    /// Cutting-plane model value at `q`:
    /// `f(p) + max_j { -e_j + <X_j, log_{q_j} q - log_{q_j} p> }`.
    pub fn model_value(&self, q: &ManifoldPoint) -> Result<f64, GeometryError> {
        let mut best = f64::NEG_INFINITY;
        for entry in &self.entries {
            let to_q = entry.point.log(q)?;
            let to_p = entry.point.log(&self.serious_point)?;
            let slope = entry.subgradient.inner(&to_q)? - entry.subgradient.inner(&to_p)?;
            best = best.max(-entry.linearization_error + slope);
        }
        Ok(self.serious_value + best)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldKind;
    use approx::assert_relative_eq;

    fn euclidean_point(x: f64) -> ManifoldPoint {
        ManifoldPoint::new(ManifoldKind::Euclidean(1), vec![x]).unwrap()
    }

    fn euclidean_tangent(at: f64, dx: f64) -> TangentVector {
        TangentVector::new(euclidean_point(at), vec![dx]).unwrap()
    }

    /// Bundle of f(x) = |x| entries with serious point 2.
    fn abs_bundle() -> Bundle {
        let mut bundle =
            Bundle::new(euclidean_point(2.0), 2.0, euclidean_tangent(2.0, 1.0), 25).unwrap();
        bundle
            .push_candidate(
                1,
                euclidean_point(1.0),
                euclidean_tangent(1.0, 1.0),
                1.0,
                0.0,
                0.0,
            )
            .unwrap();
        bundle
            .push_candidate(
                2,
                euclidean_point(-1.0),
                euclidean_tangent(-1.0, -1.0),
                1.0,
                4.0,
                0.0,
            )
            .unwrap();
        bundle
    }

    #[test]
    fn linearization_error_vanishes_at_the_serious_point() {
        let p = euclidean_point(2.0);
        let x = euclidean_tangent(2.0, 1.0);
        assert_eq!(linearization_error(2.0, 2.0, &x, &p).unwrap(), 0.0);
    }

    #[test]
    fn linearization_error_abs_value_cases() {
        // f(x) = |x|, serious point 2 with f = 2.
        let p = euclidean_point(2.0);
        let same_side = euclidean_tangent(1.0, 1.0);
        assert_eq!(linearization_error(2.0, 1.0, &same_side, &p).unwrap(), 0.0);
        let other_side = euclidean_tangent(-1.0, -1.0);
        assert_eq!(linearization_error(2.0, 1.0, &other_side, &p).unwrap(), 4.0);
    }

    #[test]
    fn linearization_error_clamps_below_zero() {
        // A deliberately wrong oracle slope makes the raw error negative.
        let p = euclidean_point(1.0);
        let bogus = euclidean_tangent(0.0, 5.0);
        assert_eq!(linearization_error(1.0, 0.0, &bogus, &p).unwrap(), 0.0);
    }

    #[test]
    fn remainder_is_the_scaled_product() {
        let p = euclidean_point(3.0);
        let x = euclidean_tangent(0.0, 2.0);
        // rho = 0.5, |X| = 2, |log| = 3
        assert_relative_eq!(remainder(0.5, &x, &p).unwrap(), 3.0, epsilon = 1e-15);
        // flat problems use rho = 0
        assert_eq!(remainder(0.0, &x, &p).unwrap(), 0.0);
        // coincident points have zero logarithm
        let at_p = euclidean_tangent(3.0, 2.0);
        assert_eq!(remainder(0.5, &at_p, &p).unwrap(), 0.0);
    }

    #[test]
    fn refresh_is_a_no_op_on_null_steps() {
        let mut bundle = abs_bundle();
        let before: Vec<(f64, f64)> = bundle
            .entries()
            .iter()
            .map(|e| (e.linearization_error, e.remainder))
            .collect();
        bundle.refresh(&euclidean_point(2.0), 2.0, 0.0).unwrap();
        let after: Vec<(f64, f64)> = bundle
            .entries()
            .iter()
            .map(|e| (e.linearization_error, e.remainder))
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn refresh_recomputes_against_the_new_serious_point() {
        let mut bundle = abs_bundle();
        // Move the serious point across the kink to -1 (f = 1). The entry at
        // q = 1 with slope +1 predicts -1 there; the convex gap is 2.
        bundle.refresh(&euclidean_point(-1.0), 1.0, 0.0).unwrap();
        let e_values: Vec<f64> = bundle
            .entries()
            .iter()
            .map(|e| e.linearization_error)
            .collect();
        assert_eq!(e_values[1], 2.0);
        assert!(bundle.entries().iter().all(|e| e.remainder == 0.0));
    }

    #[test]
    fn refresh_single_entry_at_serious_point() {
        let mut bundle =
            Bundle::new(euclidean_point(1.0), 1.0, euclidean_tangent(1.0, 1.0), 25).unwrap();
        bundle.refresh(&euclidean_point(1.0), 1.0, 0.5).unwrap();
        assert_eq!(bundle.entries()[0].linearization_error, 0.0);
        assert_eq!(bundle.entries()[0].remainder, 0.0);
    }

    #[test]
    fn purge_keeps_positive_weights() {
        let mut bundle = abs_bundle();
        bundle.set_weights(&DVector::from_vec(vec![0.5, 0.5, 0.0]));
        bundle.purge();
        assert_eq!(bundle.len(), 2);
        assert_eq!(bundle.entries()[0].index, 0);
        assert_eq!(bundle.entries()[1].index, 1);
    }

    #[test]
    fn purge_respects_the_cap_and_spares_the_serious_iterate() {
        // cap 2, three positive-weight entries, oldest sits at the serious point
        let mut bundle =
            Bundle::new(euclidean_point(2.0), 2.0, euclidean_tangent(2.0, 1.0), 2).unwrap();
        bundle
            .push_candidate(
                1,
                euclidean_point(1.0),
                euclidean_tangent(1.0, 1.0),
                1.0,
                0.0,
                0.0,
            )
            .unwrap();
        bundle
            .push_candidate(
                2,
                euclidean_point(0.5),
                euclidean_tangent(0.5, 1.0),
                0.5,
                0.0,
                0.0,
            )
            .unwrap();
        bundle.set_weights(&DVector::from_vec(vec![0.4, 0.3, 0.3]));
        bundle.purge();
        let indices: Vec<usize> = bundle.entries().iter().map(|e| e.index).collect();
        // entry 0 coincides with the serious iterate, so entry 1 was removed
        assert_eq!(indices, vec![0, 2]);
    }

    #[test]
    fn purge_removes_oldest_otherwise() {
        let mut bundle =
            Bundle::new(euclidean_point(2.0), 2.0, euclidean_tangent(2.0, 1.0), 2).unwrap();
        bundle
            .push_candidate(
                1,
                euclidean_point(1.0),
                euclidean_tangent(1.0, 1.0),
                1.0,
                0.0,
                0.0,
            )
            .unwrap();
        bundle
            .push_candidate(
                2,
                euclidean_point(0.5),
                euclidean_tangent(0.5, 1.0),
                0.5,
                0.0,
                0.0,
            )
            .unwrap();
        // Serious point moved to the newest candidate; the oldest is fair game.
        bundle.refresh(&euclidean_point(0.5), 0.5, 0.0).unwrap();
        bundle.set_weights(&DVector::from_vec(vec![0.4, 0.3, 0.3]));
        bundle.purge();
        let indices: Vec<usize> = bundle.entries().iter().map(|e| e.index).collect();
        assert_eq!(indices, vec![1, 2]);
    }

    #[test]
    fn model_value_at_serious_point_with_own_entry() {
        let bundle =
            Bundle::new(euclidean_point(2.0), 2.0, euclidean_tangent(2.0, 1.0), 25).unwrap();
        assert_eq!(bundle.model_value(&euclidean_point(2.0)).unwrap(), 2.0);
    }

    #[test]
    fn model_value_matches_the_kink_construction() {
        // entries at +-1 with slopes +-1; both planes evaluate to 0 at x = 0
        let bundle = abs_bundle();
        assert_relative_eq!(
            bundle.model_value(&euclidean_point(0.0)).unwrap(),
            0.0,
            epsilon = 1e-14
        );
    }

    #[test]
    fn model_stays_below_the_objective() {
        let bundle = abs_bundle();
        for i in -20..=20 {
            let x = i as f64 * 0.25;
            let model = bundle.model_value(&euclidean_point(x)).unwrap();
            assert!(model <= x.abs() + 1e-8, "model {model} exceeds |{x}|");
        }
    }
}
