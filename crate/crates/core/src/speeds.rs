//! Spreading speeds from the `k(λ)` curve.

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSet, HomogenizedSet};
use crate::eigen::{dirichlet_sweep, GridSpec, KCurve};
use crate::error::{Error, Result};
use crate::ode::{lambda_a, HomParams};
use crate::optimize::golden_section;

/// Sign decisions within `±SIGN_BAND` of zero are reported as inconclusive.
pub const SIGN_BAND: f64 = 1e-4;
/// Smallest `|λ|` searched for the speed minimization.
pub const LAMBDA_FLOOR: f64 = 1e-4;
/// Golden-section bracket width at termination.
pub const LAMBDA_TOL: f64 = 1e-6;
const MAX_EXPANSIONS: usize = 20;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpeedBounds {
    /// `2√(σ_min r_min)`, present iff `r_min > 0`.
    pub low: Option<f64>,
    /// `2√(σ_max r_max)`.
    pub high: f64,
}

pub fn speed_bounds(set: &CoefficientSet) -> SpeedBounds {
    let e = set.extrema();
    SpeedBounds {
        low: (e.r_min > 0.0).then(|| 2.0 * (e.sigma_min * e.r_min).sqrt()),
        high: 2.0 * (e.sigma_max * e.r_max.max(0.0)).sqrt(),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpeedReport {
    pub c_right: f64,
    pub c_left: f64,
    /// Minimizer of `k(λ)/λ` over `λ > 0`.
    pub argmin_lambda_right: f64,
    /// Minimizer of `k(λ)/(−λ)` over `λ < 0`.
    pub argmin_lambda_left: f64,
    /// `k(0)`, the periodic principal eigenvalue.
    pub k_zero: f64,
    pub k_min: f64,
    pub argmin_k: f64,
    pub bound_low: Option<f64>,
    pub bound_high: f64,
    pub hair_trigger: bool,
}

/// Upper end of the initial search bracket, `2√(r_max/σ_min) + 1`.
fn lambda_hi(set: &CoefficientSet) -> f64 {
    let e = set.extrema();
    2.0 * (e.r_max.max(0.0) / e.sigma_min).sqrt() + 1.0
}

/// Minimizes `k(sign·λ)/λ` over `λ ∈ [LAMBDA_FLOOR, λ_hi]`, doubling `λ_hi`
/// while the minimizer sits at the upper end.
fn directional_speed(curve: &mut KCurve, sign: f64, mut hi: f64) -> Result<(f64, f64)> {
    for _ in 0..MAX_EXPANSIONS {
        let m = golden_section(
            |l| Ok(curve.eval(sign * l)?.value / l),
            LAMBDA_FLOOR,
            hi,
            LAMBDA_TOL,
        )?;
        if hi - m.x > 10.0 * LAMBDA_TOL {
            return Ok((m.value, sign * m.x));
        }
        hi *= 2.0;
    }
    Err(Error::numerical(format!(
        "speed minimizer escaped the bracket after {MAX_EXPANSIONS} expansions (lambda_hi = {hi})"
    )))
}

/// `min_λ k(λ)` and its location. `k` is convex, and the quadratic bounds
/// confine the minimizer to `|λ| ≤ √((r_max − r_min)/σ_min)`.
pub fn k_minimum(set: &CoefficientSet, grid: GridSpec) -> Result<(f64, f64)> {
    let mut curve = KCurve::new(set, grid)?;
    k_minimum_on(&mut curve)
}

fn k_minimum_on(curve: &mut KCurve) -> Result<(f64, f64)> {
    let e = curve.set().extrema();
    let reach = ((e.r_max - e.r_min) / e.sigma_min).sqrt().max(lambda_hi(curve.set())) + LAMBDA_TOL;
    let m = golden_section(|l| Ok(curve.eval(l)?.value), -reach, reach, LAMBDA_TOL)?;
    Ok((m.value, m.x))
}

/// Right and left spreading speeds with their minimizers and bounds.
pub fn spreading_speeds(set: &CoefficientSet, grid: GridSpec) -> Result<SpeedReport> {
    let mut curve = KCurve::new(set, grid)?;
    let k_zero = curve.eval(0.0)?.value;
    if k_zero <= 0.0 {
        return Err(Error::Precondition(format!(
            "spreading requires a positive periodic principal eigenvalue, got k(0) = {k_zero}"
        )));
    }
    let hi = lambda_hi(set);
    let (c_right, argmin_lambda_right) = directional_speed(&mut curve, 1.0, hi)?;
    let (c_left, argmin_lambda_left) = directional_speed(&mut curve, -1.0, hi)?;
    let (k_min, argmin_k) = k_minimum_on(&mut curve)?;
    let bounds = speed_bounds(set);
    Ok(SpeedReport {
        c_right,
        c_left,
        argmin_lambda_right,
        argmin_lambda_left,
        k_zero,
        k_min,
        argmin_k,
        bound_low: bounds.low,
        bound_high: bounds.high,
        hair_trigger: k_min > 0.0,
    })
}

/// Outcome of one sign test.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Indicator {
    True,
    False,
    /// The deciding quantity lies within `±SIGN_BAND` of zero.
    Inconclusive,
    /// The quantity is undefined because a hypothesis fails.
    NotApplicable,
}

impl Indicator {
    fn from_sign(x: f64) -> Self {
        if x > SIGN_BAND {
            Indicator::True
        } else if x < -SIGN_BAND {
            Indicator::False
        } else {
            Indicator::Inconclusive
        }
    }

    pub fn as_bool(self) -> Option<bool> {
        match self {
            Indicator::True => Some(true),
            Indicator::False => Some(false),
            _ => None,
        }
    }
}

/// The three equivalent persistence conditions, evaluated independently.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HairTriggerReport {
    /// Some `λ₁^R > 0` over `R ∈ {L, 2L, …, 64L}`.
    pub dirichlet: Indicator,
    /// `min_λ k(λ) > 0`.
    pub k_min: Indicator,
    /// Both spreading speeds positive.
    pub speeds: Indicator,
    pub dirichlet_radii: Vec<f64>,
    pub dirichlet_values: Vec<f64>,
    pub k_min_value: f64,
    pub c_right: Option<f64>,
    pub c_left: Option<f64>,
}

impl HairTriggerReport {
    /// Whether all decided indicators agree.
    pub fn consistent(&self) -> bool {
        let decided: Vec<bool> = [self.dirichlet, self.k_min, self.speeds]
            .iter()
            .filter_map(|i| i.as_bool())
            .collect();
        decided.windows(2).all(|w| w[0] == w[1])
    }
}

pub fn hair_trigger_check(set: &CoefficientSet, grid: GridSpec, cells_per_period: usize) -> Result<HairTriggerReport> {
    let radii: Vec<f64> = (0..7).map(|j| set.period() * (1u32 << j) as f64).collect();
    let sweep = dirichlet_sweep(set, &radii, cells_per_period)?;
    let dirichlet_values: Vec<f64> = sweep.iter().map(|(_, e)| e.value).collect();
    let best = dirichlet_values.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (k_min_value, _) = k_minimum(set, grid)?;

    let (speeds, c_right, c_left) = match spreading_speeds(set, grid) {
        Ok(r) => (
            Indicator::from_sign(r.c_right.min(r.c_left)),
            Some(r.c_right),
            Some(r.c_left),
        ),
        Err(Error::Precondition(_)) => (Indicator::NotApplicable, None, None),
        Err(e) => return Err(e),
    };
    Ok(HairTriggerReport {
        dirichlet: Indicator::from_sign(best),
        k_min: Indicator::from_sign(k_min_value),
        speeds,
        dirichlet_radii: radii,
        dirichlet_values,
        k_min_value,
        c_right,
        c_left,
    })
}

/// `2√(σ_H λ_A)` with `λ_A` computed from the mean coefficients.
pub fn homogenized_speed(h: &HomogenizedSet) -> Result<f64> {
    let p = HomParams::from_homogenized(h)?;
    let la = lambda_a(&p);
    if la <= 0.0 {
        return Err(Error::Precondition(format!(
            "homogenized lambda_A = {la} is not positive"
        )));
    }
    Ok(2.0 * (h.sigma_h * la).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::CoefficientSpec as S;
    use crate::eigen::k_of_lambda;
    use approx::assert_relative_eq;

    fn grid() -> GridSpec {
        GridSpec::periodic(32)
    }

    fn hom(sigma: f64, r_u: f64, r_v: f64, mu_u: f64, mu_v: f64) -> CoefficientSet {
        CoefficientSet::homogeneous(sigma, r_u, r_v, 1.0, 1.0, mu_u, mu_v).unwrap()
    }

    #[test]
    fn homogeneous_speeds() {
        let r = spreading_speeds(&hom(1.0, 1.0, 1.0, 0.5, 0.5), grid()).unwrap();
        assert!((r.c_right - 2.0).abs() < 1e-6);
        assert!((r.c_left - 2.0).abs() < 1e-6);
        assert!((r.argmin_lambda_right - 1.0).abs() < 1e-3);
        assert!((r.argmin_lambda_left + 1.0).abs() < 1e-3);
        assert!((r.k_min - 1.0).abs() < 1e-9);
        assert!(r.hair_trigger);

        // λ_A = √2 from the 2×2 growth matrix
        let r = spreading_speeds(&hom(2.0, 2.0, 0.0, 1.0, 1.0), grid()).unwrap();
        let expect = 2.0 * (2.0 * 2f64.sqrt()).sqrt();
        assert!((r.c_right - expect).abs() < 1e-6);
        assert!((expect - 3.363586).abs() < 1e-6);
    }

    #[test]
    fn speed_is_the_curve_ratio_at_the_minimizer() {
        let set = CoefficientSet::new(
            1.0,
            S::cosine(1.0, 0.3, 0.0),
            S::cosine(1.0, 0.5, 0.4),
            S::cosine(0.3, 0.2, 1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(0.4),
            S::constant(0.2),
        )
        .unwrap();
        let r = spreading_speeds(&set, grid()).unwrap();
        let k = k_of_lambda(&set, r.argmin_lambda_right, grid()).unwrap().value;
        assert!((k / r.argmin_lambda_right - r.c_right).abs() < 1e-9);
        let k = k_of_lambda(&set, r.argmin_lambda_left, grid()).unwrap().value;
        assert!((k / -r.argmin_lambda_left - r.c_left).abs() < 1e-9);
        let b = speed_bounds(&set);
        assert!(r.c_right <= b.high + 1e-6 && r.c_left <= b.high + 1e-6);
        if let Some(low) = b.low {
            assert!(r.c_right >= low - 1e-6 && r.c_left >= low - 1e-6);
        }
    }

    #[test]
    fn equal_mutation_rates_give_equal_speeds() {
        let set = CoefficientSet::new(
            1.0,
            S::constant(1.0),
            S::cosine(1.0, 0.6, 0.9),
            S::Cosine {
                mean: 0.5,
                amplitude: 0.3,
                phase: 0.0,
                harmonics: vec![[2.0, 0.2, 0.7]],
            },
            S::constant(1.0),
            S::constant(1.0),
            S::constant(0.3),
            S::constant(0.3),
        )
        .unwrap();
        let r = spreading_speeds(&set, grid()).unwrap();
        assert!((r.c_right - r.c_left).abs() < 1e-6);
    }

    #[test]
    fn bounds_examples() {
        let b = speed_bounds(&hom(1.0, 1.0, 1.0, 0.5, 0.5));
        assert_eq!((b.low, b.high), (Some(2.0), 2.0));

        let set = CoefficientSet::new(
            1.0,
            S::piecewise(vec![0.0, 0.5], vec![1.0, 4.0]),
            S::piecewise(vec![0.0, 0.5], vec![0.5, 2.0]),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(0.5),
            S::constant(0.5),
        )
        .unwrap();
        let b = speed_bounds(&set);
        assert_relative_eq!(b.low.unwrap(), 2f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(b.high, 4.0 * 2f64.sqrt(), epsilon = 1e-12);

        let b = speed_bounds(&hom(1.0, -0.1, 1.0, 0.5, 0.5));
        assert!(b.low.is_none() && b.high.is_finite());
    }

    #[test]
    fn negative_growth_fails_precondition() {
        let set = hom(1.0, -0.5, -0.5, 0.5, 0.5);
        assert!(matches!(spreading_speeds(&set, grid()), Err(Error::Precondition(_))));
    }

    #[test]
    fn hair_trigger_indicators() {
        let r = hair_trigger_check(&hom(1.0, 1.0, 1.0, 0.5, 0.5), grid(), 32).unwrap();
        assert_eq!((r.dirichlet, r.k_min, r.speeds), (Indicator::True, Indicator::True, Indicator::True));
        assert!((r.k_min_value - 1.0).abs() < 1e-9);
        assert!(r.consistent());

        let r = hair_trigger_check(&hom(1.0, -0.5, -0.5, 0.5, 0.5), grid(), 32).unwrap();
        assert_eq!(
            (r.dirichlet, r.k_min, r.speeds),
            (Indicator::False, Indicator::False, Indicator::NotApplicable)
        );
        assert!((r.k_min_value + 0.5).abs() < 1e-9);
        assert!(r.consistent());
    }

    #[test]
    fn homogenized_speed_examples() {
        let h = HomogenizedSet {
            mean_sigma: 2.5,
            sigma_h: 1.6,
            mean_r_u: 1.0,
            mean_r_v: 1.0,
            mean_kappa_u: 1.0,
            mean_kappa_v: 1.0,
            mean_mu_u: 0.3,
            mean_mu_v: 0.7,
        };
        assert_relative_eq!(homogenized_speed(&h).unwrap(), 2.0 * 1.6f64.sqrt(), epsilon = 1e-12);
        assert!((homogenized_speed(&h).unwrap() - 2.529822).abs() < 1e-6);

        let set = hom(1.3, 0.8, 0.2, 0.4, 0.6);
        let direct = spreading_speeds(&set, grid()).unwrap().c_right;
        let via_means = homogenized_speed(&set.homogenize().unwrap()).unwrap();
        assert!((direct - via_means).abs() < 1e-6);

        let bad = HomogenizedSet {
            mean_r_u: -1.0,
            mean_r_v: -1.0,
            ..h
        };
        assert!(matches!(homogenized_speed(&bad), Err(Error::Precondition(_))));
    }
}
