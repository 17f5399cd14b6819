//! Coefficient sets shared by the benchmarks.

use coopfront::{CoefficientSet, CoefficientSpec as S};

/// Constant coefficients with `σ = 1`, `r = κ = 1` and `μ = 0.5`.
pub fn symmetric() -> CoefficientSet {
    CoefficientSet::new(
        1.0,
        S::constant(1.0),
        S::constant(1.0),
        S::constant(1.0),
        S::constant(1.0),
        S::constant(1.0),
        S::constant(0.5),
        S::constant(0.5),
    )
    .expect("valid constant set")
}

/// Oscillating growth rates with a phase shift between the species.
pub fn oscillating() -> CoefficientSet {
    CoefficientSet::new(
        1.0,
        S::constant(1.0),
        S::cosine(1.0, 0.8, 0.0),
        S::cosine(0.5, 0.5, 0.6 * std::f64::consts::PI),
        S::constant(1.0),
        S::constant(1.0),
        S::constant(0.3),
        S::constant(0.3),
    )
    .expect("valid oscillating set")
}
