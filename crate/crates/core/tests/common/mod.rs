#![allow(dead_code)]

use coopfront::coefficients::CoefficientSpec as S;
use coopfront::CoefficientSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// σ = 1, r = 1, κ = 1, μ = 0.5 for both species: λ_A = 1, c* = 2.
pub fn symmetric() -> CoefficientSet {
    CoefficientSet::homogeneous(1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5).unwrap()
}

/// Unit-period set with cosine reproduction rates out of phase with each other.
pub fn oscillating_rates() -> CoefficientSet {
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
    .unwrap()
}

/// Cosine perturbations of every coefficient, amplitudes at most half the mean.
pub fn random_periodic(seed: u64) -> CoefficientSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut spec = |lo: f64, hi: f64| {
        let mean = rng.gen_range(lo..hi);
        let amp = rng.gen_range(0.0..0.5) * mean;
        let phase = rng.gen_range(0.0..std::f64::consts::TAU);
        S::cosine(mean, amp, phase)
    };
    let sigma = spec(0.3, 2.0);
    let r_u = spec(0.2, 2.0);
    let r_v = spec(0.2, 2.0);
    let kappa_u = spec(0.5, 2.0);
    let kappa_v = spec(0.5, 2.0);
    let mu_u = spec(0.05, 1.0);
    let mu_v = spec(0.05, 1.0);
    let period = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed).gen_range(0.5..3.0);
    CoefficientSet::new(period, sigma, r_u, r_v, kappa_u, kappa_v, mu_u, mu_v).unwrap()
}

/// Equal mutation rates and a reproduction rate for `u` with no reflection symmetry.
pub fn skewed_rates() -> CoefficientSet {
    let r_u = S::Cosine {
        mean: 1.0,
        amplitude: 0.6,
        phase: 0.4,
        harmonics: vec![[2.0, 0.3, 1.1]],
    };
    CoefficientSet::new(
        1.0,
        S::cosine(1.0, 0.3, 0.9),
        r_u,
        S::constant(0.6),
        S::constant(1.0),
        S::constant(1.5),
        S::constant(0.4),
        S::constant(0.4),
    )
    .unwrap()
}

/// `u` the stronger competitor, `v` the faster grower: small mutation rates
/// give a pioneer hump on `v`.
pub fn pioneer(mu: f64) -> CoefficientSet {
    CoefficientSet::homogeneous(1.0, 1.0, 2.0, 1.0, 4.0, mu, mu).unwrap()
}

/// Node index closest to `x`.
pub fn nearest(xs: &[f64], x: f64) -> usize {
    xs.iter()
        .enumerate()
        .min_by(|a, b| (a.1 - x).abs().total_cmp(&(b.1 - x).abs()))
        .unwrap()
        .0
}
