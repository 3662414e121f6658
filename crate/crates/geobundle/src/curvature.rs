//! Curvature bound bookkeeping and comparison functions.
//!
//! Transporting a subgradient through curved space costs accuracy. The
//! functions here bound that cost: [`stretch`] (>= 1) grows with negative
//! curvature, [`shrink`] (<= 1) decays with positive curvature, and
//! [`CurvatureProfile::remainder_coefficient`] combines them at the domain
//! diameter into the single coefficient that scales bundle remainders.

use crate::error::GeometryError;

/// Comparison factor from the lower sectional curvature bound.
///
/// Returns 1 for `lower >= 0`, otherwise `sqrt(-lower) * s * coth(sqrt(-lower) * s)`,
/// continuously extended to 1 at `s = 0`. Always >= 1.
pub fn stretch(lower: f64, s: f64) -> f64 {
    debug_assert!(s >= 0.0, "arc length must be nonnegative");
    if lower >= 0.0 {
        return 1.0;
    }
    let x = (-lower).sqrt() * s;
    if x == 0.0 {
        1.0
    } else {
        // x * coth(x) = x * cosh(x) / sinh(x)
        x / x.tanh()
    }
}

/// Comparison factor from the upper sectional curvature bound.
///
/// Returns 1 for `upper <= 0`, otherwise `sqrt(upper) * s * cot(sqrt(upper) * s)`,
/// continuously extended to 1 at `s = 0`. Always <= 1 on its domain
/// `s < pi / sqrt(upper)`.
pub fn shrink(upper: f64, s: f64) -> Result<f64, GeometryError> {
    debug_assert!(s >= 0.0, "arc length must be nonnegative");
    if upper <= 0.0 {
        return Ok(1.0);
    }
    let x = upper.sqrt() * s;
    if x >= std::f64::consts::PI {
        return Err(GeometryError::Invalid {
            what: "comparison argument",
            detail: format!(
                "sqrt(upper) * s = {x:.6} exceeds pi; the comparison function is undefined there"
            ),
        });
    }
    if x == 0.0 {
        Ok(1.0)
    } else {
        Ok(x * x.cos() / x.sin())
    }
}

/// Sectional curvature bounds and the diameter of the objective's domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureProfile {
    lower: f64,
    upper: f64,
    diameter: f64,
}

impl CurvatureProfile {
    /// Builds a profile, validating the standing assumptions: `lower <= upper`;
    /// a curved space (`lower < 0` or `upper > 0`) requires a finite diameter;
    /// a positively curved space requires `diameter < pi / sqrt(upper)`.
    pub fn new(lower: f64, upper: f64, diameter: f64) -> Result<Self, GeometryError> {
        if !(lower <= upper) {
            return Err(GeometryError::Invalid {
                what: "curvature profile",
                detail: format!("lower bound {lower} exceeds upper bound {upper}"),
            });
        }
        if diameter <= 0.0 {
            return Err(GeometryError::Invalid {
                what: "curvature profile",
                detail: format!("diameter {diameter} must be positive"),
            });
        }
        if (lower < 0.0 || upper > 0.0) && !diameter.is_finite() {
            return Err(GeometryError::Invalid {
                what: "curvature profile",
                detail: "curved spaces require a finite domain diameter".to_string(),
            });
        }
        if upper > 0.0 && diameter >= std::f64::consts::PI / upper.sqrt() {
            return Err(GeometryError::Invalid {
                what: "curvature profile",
                detail: format!(
                    "diameter {diameter:.6} reaches pi / sqrt(upper) = {:.6}; such sets need not be strongly convex",
                    std::f64::consts::PI / upper.sqrt()
                ),
            });
        }
        Ok(Self {
            lower,
            upper,
            diameter,
        })
    }

    /// A flat profile with unbounded domain (the only case where an infinite
    /// diameter is admissible).
    pub fn flat() -> Self {
        Self {
            lower: 0.0,
            upper: 0.0,
            diameter: f64::INFINITY,
        }
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// The remainder coefficient `max(stretch - 1, 1 - shrink)` evaluated at
    /// the domain diameter. Zero exactly on flat profiles.
    pub fn remainder_coefficient(&self) -> f64 {
        if self.lower == 0.0 && self.upper == 0.0 {
            return 0.0;
        }
        let gain = stretch(self.lower, self.diameter) - 1.0;
        // The constructor guarantees diameter < pi / sqrt(upper).
        let loss = 1.0 - shrink(self.upper, self.diameter).expect("validated diameter");
        gain.max(loss).max(0.0)
    }
}
