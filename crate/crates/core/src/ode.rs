//! Spatially homogeneous analysis: growth matrix, positive equilibrium,
//! linear stability, Lyapunov weight and trajectory integration.

use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSet, HomogenizedSet};
use crate::error::{Error, Result};

/// Values of `λ_A` inside `±THRESHOLD_BAND` count as zero.
pub const THRESHOLD_BAND: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;
const BLOW_UP: f64 = 1e6;

/// Constant coefficients of the homogeneous system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HomParams {
    pub sigma: f64,
    pub r_u: f64,
    pub r_v: f64,
    pub kappa_u: f64,
    pub kappa_v: f64,
    pub mu_u: f64,
    pub mu_v: f64,
}

impl HomParams {
    pub fn new(sigma: f64, r_u: f64, r_v: f64, kappa_u: f64, kappa_v: f64, mu_u: f64, mu_v: f64) -> Result<Self> {
        let p = HomParams {
            sigma,
            r_u,
            r_v,
            kappa_u,
            kappa_v,
            mu_u,
            mu_v,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r_u", self.r_u), ("r_v", self.r_v)] {
            if !v.is_finite() {
                return Err(Error::Validation(format!("{name} must be finite, got {v}")));
            }
        }
        for (name, v) in [
            ("sigma", self.sigma),
            ("kappa_u", self.kappa_u),
            ("kappa_v", self.kappa_v),
            ("mu_u", self.mu_u),
            ("mu_v", self.mu_v),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Parameters built from the means of a homogenized set, with `σ = σ_H`.
    pub fn from_homogenized(h: &HomogenizedSet) -> Result<Self> {
        HomParams::new(
            h.sigma_h,
            h.mean_r_u,
            h.mean_r_v,
            h.mean_kappa_u,
            h.mean_kappa_v,
            h.mean_mu_u,
            h.mean_mu_v,
        )
    }

    pub fn to_coefficient_set(&self) -> Result<CoefficientSet> {
        CoefficientSet::homogeneous(
            self.sigma,
            self.r_u,
            self.r_v,
            self.kappa_u,
            self.kappa_v,
            self.mu_u,
            self.mu_v,
        )
    }

    /// Right-hand side of the ODE system.
    pub fn rhs(&self, u: f64, v: f64) -> (f64, f64) {
        let s = u + v;
        (
            (self.r_u - self.kappa_u * s) * u + self.mu_v * v - self.mu_u * u,
            (self.r_v - self.kappa_v * s) * v + self.mu_u * u - self.mu_v * v,
        )
    }
}

/// Largest eigenvalue of `A = [[r_u − μ_u, μ_v], [μ_u, r_v − μ_v]]`.
pub fn lambda_a(p: &HomParams) -> f64 {
    let a = p.r_u - p.mu_u;
    let d = p.r_v - p.mu_v;
    (a + d + ((a - d).powi(2) + 4.0 * p.mu_u * p.mu_v).sqrt()) / 2.0
}

/// Sign of `λ_A` with the `±THRESHOLD_BAND` band mapped to zero.
pub fn lambda_a_sign(p: &HomParams) -> i8 {
    let l = lambda_a(p);
    if l > THRESHOLD_BAND {
        1
    } else if l < -THRESHOLD_BAND {
        -1
    } else {
        0
    }
}

/// Linearization `[[a, b], [c, d]]` of the ODE right-hand side.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Jacobian {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Jacobian {
    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `a < 0`, `d < 0`, `a + d < 0`, `ad − bc > 0`.
    pub fn is_stable_certificate(&self) -> bool {
        self.a < 0.0 && self.d < 0.0 && self.trace() < 0.0 && self.det() > 0.0
    }
}

pub fn jacobian(p: &HomParams, u: f64, v: f64) -> Jacobian {
    Jacobian {
        a: p.r_u - p.mu_u - p.kappa_u * (2.0 * u + v),
        b: p.mu_v - p.kappa_u * u,
        c: p.mu_u - p.kappa_v * v,
        d: p.r_v - p.mu_v - p.kappa_v * (u + 2.0 * v),
    }
}

/// The unique positive equilibrium, which exists iff `λ_A > 0`.
pub fn equilibrium(p: &HomParams) -> Result<(f64, f64)> {
    p.validate()?;
    if lambda_a_sign(p) <= 0 {
        return Err(Error::Precondition(format!(
            "lambda_A = {} is not positive; the only nonnegative equilibrium is (0, 0)",
            lambda_a(p)
        )));
    }
    let ratio = p.kappa_u / p.kappa_v;
    let b = p.r_u - p.mu_u - ratio * (p.r_v - p.mu_v);
    let c4 = 4.0 * ratio * p.mu_u * p.mu_v;
    let root = (b * b + c4).sqrt();
    // b + √(b² + 4c) without cancellation when b < 0
    let sum = if b >= 0.0 { b + root } else { c4 / (root - b) };
    let q = p.kappa_v / (2.0 * p.mu_u * p.kappa_u) * sum;
    let s = (p.r_v + p.mu_u * q - p.mu_v) / p.kappa_v;
    let (mut u, mut v) = (s * q / (1.0 + q), s / (1.0 + q));

    // Newton polish: the closed form can lose a few digits to cancellation.
    for _ in 0..4 {
        let (f, g) = p.rhs(u, v);
        if f.abs().max(g.abs()) < 1e-14 * (1.0 + u + v) {
            break;
        }
        let j = jacobian(p, u, v);
        let det = j.det();
        if det == 0.0 {
            break;
        }
        u -= (j.d * f - j.b * g) / det;
        v -= (-j.c * f + j.a * g) / det;
    }
    let (f, g) = p.rhs(u, v);
    if !(u > 0.0 && v > 0.0) || f.abs().max(g.abs()) >= RESIDUAL_TOL {
        return Err(Error::numerical_with(
            format!("equilibrium ({u}, {v}) fails the residual check"),
            f.abs().max(g.abs()),
        ));
    }
    check_box(p, u, v)?;
    Ok((u, v))
}

/// Location bounds for the equilibrium in terms of `r − μ`, `μ` and `κ`.
fn check_box(p: &HomParams, u: f64, v: f64) -> Result<()> {
    let slack = 1e-12 * (1.0 + u.max(v));
    let within = |x: f64, growth: f64, inflow: f64, kappa: f64| {
        if growth > 0.0 {
            let lo = growth.min(inflow) / kappa;
            let hi = growth.max(inflow) / kappa;
            x >= lo - slack && x <= hi + slack
        } else {
            x < inflow / kappa + slack
        }
    };
    if !within(u, p.r_u - p.mu_u, p.mu_v, p.kappa_u) || !within(v, p.r_v - p.mu_v, p.mu_u, p.kappa_v) {
        return Err(Error::Contradiction(format!(
            "equilibrium ({u}, {v}) lies outside its a priori bounds"
        )));
    }
    Ok(())
}

/// Weight `K` making `F_u + K·F_v` a strict Lyapunov function.
///
/// Chooses the vertex of `P(K) = −C²K² + (4AD − 2BC)K − B²`, which
/// maximizes the positive-definiteness margin of `Q(U, V)`.
///
/// The construction needs `BC < AD`. That is guaranteed when
/// `r_u − μ_u ≥ μ_v` or `r_v − μ_v ≥ μ_u` (then `B ≥ 0` or `C ≥ 0` with the
/// other factor below its bound or of opposite sign), but can fail when both
/// growth excesses are smaller than the inflow rates, e.g.
/// `r = (0.7, −0.4)`, `κ = (1, 1)`, `μ = (0.5, 0.5)`. Such inputs yield a
/// `Contradiction` error.
pub fn lyapunov_k(p: &HomParams) -> Result<f64> {
    let (u, v) = equilibrium(p)?;
    if (p.r_u - p.mu_u).max(p.r_v - p.mu_v) <= 0.0 {
        return Err(Error::Precondition(
            "Lyapunov weight needs max(r_u - mu_u, r_v - mu_v) > 0".into(),
        ));
    }
    let w = LyapunovCoefficients::at(p, u, v);
    if w.b * w.c >= w.a * w.d {
        return Err(Error::Contradiction(format!(
            "BC = {} is not below AD = {}",
            w.b * w.c,
            w.a * w.d
        )));
    }
    let lin = 4.0 * w.a * w.d - 2.0 * w.b * w.c;
    let k = if w.c.abs() <= 1e-14 * w.d {
        (w.b * w.b + 1.0) / lin
    } else {
        lin / (2.0 * w.c * w.c)
    };
    let pk = w.p(k);
    if !(k > 0.0 && pk > 0.0) {
        return Err(Error::Contradiction(format!("P({k}) = {pk} is not positive")));
    }
    Ok(k)
}

/// `A = κ_u`, `B = κ_u − μ_v/u*`, `C = κ_v − μ_u/v*`, `D = κ_v`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LyapunovCoefficients {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl LyapunovCoefficients {
    pub fn at(p: &HomParams, u_star: f64, v_star: f64) -> Self {
        LyapunovCoefficients {
            a: p.kappa_u,
            b: p.kappa_u - p.mu_v / u_star,
            c: p.kappa_v - p.mu_u / v_star,
            d: p.kappa_v,
        }
    }

    pub fn p(&self, k: f64) -> f64 {
        -self.c * self.c * k * k + (4.0 * self.a * self.d - 2.0 * self.b * self.c) * k - self.b * self.b
    }

    /// `Q(U, V) = AU² + (B + KC)UV + KDV²`.
    pub fn q(&self, k: f64, big_u: f64, big_v: f64) -> f64 {
        self.a * big_u * big_u + (self.b + k * self.c) * big_u * big_v + k * self.d * big_v * big_v
    }
}

/// `F_u(u) + K·F_v(v)` with `F_w(w) = w − w* − w*·ln(w/w*)`.
pub fn lyapunov_value(u: f64, v: f64, u_star: f64, v_star: f64, k: f64) -> Result<f64> {
    if !(u > 0.0 && v > 0.0) {
        return Err(Error::Domain(format!(
            "Lyapunov function needs u, v > 0, got ({u}, {v})"
        )));
    }
    let f = |w: f64, ws: f64| w - ws - ws * (w / ws).ln();
    Ok(f(u, u_star) + k * f(v, v_star))
}

#[derive(Clone, Debug, Serialize)]
pub struct OdeAnalysis {
    pub params: HomParams,
    pub lambda_a: f64,
    pub equilibrium: Option<(f64, f64)>,
    /// Jacobian at the positive equilibrium, or at the origin when there is none.
    pub jacobian: Jacobian,
    pub lyapunov_k: Option<f64>,
    /// Why no Lyapunov weight is reported, when the hypotheses hold but the
    /// quadratic-form construction fails.
    pub lyapunov_note: Option<String>,
}

pub fn analyze(p: &HomParams) -> Result<OdeAnalysis> {
    p.validate()?;
    let la = lambda_a(p);
    let equilibrium = if lambda_a_sign(p) > 0 { Some(equilibrium(p)?) } else { None };
    let jac = match equilibrium {
        Some((u, v)) => jacobian(p, u, v),
        None => jacobian(p, 0.0, 0.0),
    };
    let (lyapunov_k, lyapunov_note) = match equilibrium {
        Some(_) if (p.r_u - p.mu_u).max(p.r_v - p.mu_v) > 0.0 => match lyapunov_k(p) {
            Ok(k) => (Some(k), None),
            Err(Error::Contradiction(msg)) => {
                log::warn!("no Lyapunov weight for {p:?}: {msg}");
                (None, Some(msg))
            }
            Err(e) => return Err(e),
        },
        _ => (None, None),
    };
    Ok(OdeAnalysis {
        params: *p,
        lambda_a: la,
        equilibrium,
        jacobian: jac,
        lyapunov_k,
        lyapunov_note,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct OdeSample {
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub lyapunov: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Trajectory {
    pub samples: Vec<OdeSample>,
    /// Number of steps in which a negative component was clipped to zero.
    pub clipped_steps: usize,
    /// Equilibrium (or origin) the run is compared against.
    pub target: (f64, f64),
    /// First time from which the state stayed within `1e-6` of the target for
    /// 1000 consecutive steps.
    pub converged_at: Option<f64>,
    /// Whether the Lyapunov function never increased by more than `1e-12`
    /// between consecutive steps; `None` when it does not apply.
    pub lyapunov_nonincreasing: Option<bool>,
}

impl Trajectory {
    pub fn last(&self) -> &OdeSample {
        self.samples.last().expect("trajectory has at least the initial sample")
    }
}

/// Classical RK4 with fixed step `dt` up to time `t_end`, recording every
/// `record_every` steps plus the final state.
pub fn integrate(p: &HomParams, u0: f64, v0: f64, t_end: f64, dt: f64, record_every: usize) -> Result<Trajectory> {
    p.validate()?;
    if !(u0 >= 0.0 && v0 >= 0.0 && u0.is_finite() && v0.is_finite()) {
        return Err(Error::Validation(format!("initial data must be nonnegative, got ({u0}, {v0})")));
    }
    if !(dt > 0.0 && dt.is_finite()) || !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::Validation(format!("need dt > 0 and T >= 0, got dt = {dt}, T = {t_end}")));
    }
    let record_every = record_every.max(1);
    let analysis = analyze(p)?;
    let target = analysis.equilibrium.unwrap_or((0.0, 0.0));
    let lyap = match (analysis.equilibrium, analysis.lyapunov_k) {
        (Some((us, vs)), Some(k)) => Some((us, vs, k)),
        _ => None,
    };
    let lyap_at = |u: f64, v: f64| lyap.and_then(|(us, vs, k)| lyapunov_value(u, v, us, vs, k).ok());

    let steps = (t_end / dt).round() as usize;
    let mut samples = vec![OdeSample {
        t: 0.0,
        u: u0,
        v: v0,
        lyapunov: lyap_at(u0, v0),
    }];
    let (mut u, mut v) = (u0, v0);
    let mut clipped_steps = 0;
    let mut near_since: Option<usize> = None;
    let mut converged_at = None;
    let mut monotone = lyap.map(|_| true);
    let mut prev_f = lyap_at(u, v);

    for step in 1..=steps {
        let (k1u, k1v) = p.rhs(u, v);
        let (k2u, k2v) = p.rhs(u + 0.5 * dt * k1u, v + 0.5 * dt * k1v);
        let (k3u, k3v) = p.rhs(u + 0.5 * dt * k2u, v + 0.5 * dt * k2v);
        let (k4u, k4v) = p.rhs(u + dt * k3u, v + dt * k3v);
        u += dt / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
        v += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
        if !(u.abs() + v.abs() <= BLOW_UP) {
            return Err(Error::numerical(format!(
                "trajectory left the bounded region at t = {}",
                step as f64 * dt
            )));
        }
        if u < 0.0 || v < 0.0 {
            if u.min(v) < -1e-14 {
                log::warn!("ODE step {step} clipped a negative value {}", u.min(v));
            }
            u = u.max(0.0);
            v = v.max(0.0);
            clipped_steps += 1;
        }

        let dist = (u - target.0).abs().max((v - target.1).abs());
        if dist < 1e-6 {
            let since = *near_since.get_or_insert(step);
            if converged_at.is_none() && step - since >= 1000 {
                converged_at = Some(since as f64 * dt);
            }
        } else {
            near_since = None;
            converged_at = None;
        }

        let f = lyap_at(u, v);
        if let (Some(prev), Some(cur)) = (prev_f, f) {
            if cur > prev + 1e-12 {
                monotone = Some(false);
            }
        }
        prev_f = f;

        if step % record_every == 0 || step == steps {
            samples.push(OdeSample {
                t: step as f64 * dt,
                u,
                v,
                lyapunov: f,
            });
        }
    }
    Ok(Trajectory {
        samples,
        clipped_steps,
        target,
        converged_at,
        lyapunov_nonincreasing: monotone,
    })
}
