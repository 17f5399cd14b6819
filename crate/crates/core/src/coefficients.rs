//! Periodic coefficient functions and the seven-coefficient sets that drive the system.
//!
//! A [`CoefficientSpec`] is a scalar function of one variable, periodic with the
//! period of the [`CoefficientSet`] that owns it. Specs are evaluated through
//! the reduced coordinate `x mod L`, so periodicity is exact up to rounding in
//! the reduction itself.
//!
//! JSON layout (internally tagged by `kind`):
//!
//! ```json
//! {"kind": "constant", "value": 1.0}
//! {"kind": "cosine", "mean": 1.0, "amplitude": 0.5, "phase": 0.0, "harmonics": [[2, 0.1, 0.0]]}
//! {"kind": "piecewise_constant", "breakpoints": [0.0, 0.5], "values": [1.0, 4.0]}
//! {"kind": "table", "samples": [1.0, 2.0, 3.0]}
//! {"kind": "combination", "terms": [{"weight": 2.0, "spec": {"kind": "constant", "value": 1.0}}]}
//! ```

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform probe points per period used for extrema and positivity checks.
pub const PROBE_POINTS: usize = 8192;

const QUADRATURE_START: usize = 4096;
const QUADRATURE_CAP: usize = 1 << 22;
const QUADRATURE_RTOL: f64 = 1e-10;

/// A periodic scalar function.
///
/// Piecewise breakpoints are absolute positions in `[0, L)`; every other kind is
/// parametrized relative to the period, so rescaling the period rescales the
/// function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CoefficientSpec {
    Constant {
        value: f64,
    },
    /// `mean + amplitude·cos(2πx/L + phase) + Σ a_k·cos(2π m_k x/L + φ_k)` with
    /// harmonics given as `[m_k, a_k, φ_k]`, `m_k` a positive integer.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        harmonics: Vec<[f64; 3]>,
    },
    /// `values[k]` on `[breakpoints[k], breakpoints[k+1])`; the last piece wraps
    /// around to the first breakpoint.
    PiecewiseConstant {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    /// Samples at `jL/n`, `j = 0..n`, joined by periodic linear interpolation.
    Table {
        samples: Vec<f64>,
    },
    /// Weighted sum of other specs; produced when a linear combination has no
    /// closed form in a single kind.
    Combination {
        terms: Vec<WeightedSpec>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightedSpec {
    pub weight: f64,
    pub spec: CoefficientSpec,
}

fn reduce(x: f64, period: f64) -> f64 {
    let s = x.rem_euclid(period);
    if s >= period {
        0.0
    } else {
        s
    }
}

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

impl CoefficientSpec {
    pub fn constant(value: f64) -> Self {
        CoefficientSpec::Constant { value }
    }

    pub fn cosine(mean: f64, amplitude: f64, phase: f64) -> Self {
        CoefficientSpec::Cosine {
            mean,
            amplitude,
            phase,
            harmonics: Vec::new(),
        }
    }

    pub fn piecewise(breakpoints: Vec<f64>, values: Vec<f64>) -> Self {
        CoefficientSpec::PiecewiseConstant {
            breakpoints,
            values,
        }
    }

    pub fn table(samples: Vec<f64>) -> Self {
        CoefficientSpec::Table { samples }
    }

    /// Structural checks against a period; positivity is checked by the owning set.
    pub fn validate(&self, period: f64) -> Result<()> {
        if !(period.is_finite() && period > 0.0) {
            return Err(Error::Validation(format!(
                "period must be positive and finite, got {period}"
            )));
        }
        match self {
            CoefficientSpec::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Validation("constant value is not finite".into()));
                }
            }
            CoefficientSpec::Cosine {
                mean,
                amplitude,
                phase,
                harmonics,
            } => {
                if !all_finite(&[*mean, *amplitude, *phase]) {
                    return Err(Error::Validation("cosine parameters must be finite".into()));
                }
                for h in harmonics {
                    if !all_finite(h) {
                        return Err(Error::Validation("harmonic entries must be finite".into()));
                    }
                    let m = h[0];
                    if m < 1.0 || m.fract() != 0.0 {
                        return Err(Error::Validation(format!(
                            "harmonic multiple must be a positive integer, got {m}"
                        )));
                    }
                }
            }
            CoefficientSpec::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                if breakpoints.is_empty() {
                    return Err(Error::Validation("piecewise spec has no pieces".into()));
                }
                if breakpoints.len() != values.len() {
                    return Err(Error::Validation(format!(
                        "piecewise spec has {} breakpoints but {} values",
                        breakpoints.len(),
                        values.len()
                    )));
                }
                if !all_finite(breakpoints) || !all_finite(values) {
                    return Err(Error::Validation("piecewise entries must be finite".into()));
                }
                if breakpoints[0] < 0.0 || *breakpoints.last().unwrap() >= period {
                    return Err(Error::Validation(format!(
                        "breakpoints must lie in [0, {period})"
                    )));
                }
                if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::Validation(
                        "breakpoints must be strictly increasing".into(),
                    ));
                }
            }
            CoefficientSpec::Table { samples } => {
                if samples.is_empty() {
                    return Err(Error::Validation("table spec has no samples".into()));
                }
                if !all_finite(samples) {
                    return Err(Error::Validation("table samples must be finite".into()));
                }
            }
            CoefficientSpec::Combination { terms } => {
                if terms.is_empty() {
                    return Err(Error::Validation("combination has no terms".into()));
                }
                for t in terms {
                    if !t.weight.is_finite() {
                        return Err(Error::Validation("combination weight not finite".into()));
                    }
                    t.spec.validate(period)?;
                }
            }
        }
        Ok(())
    }

    /// Value at `x` for a function of period `period`.
    pub fn evaluate(&self, x: f64, period: f64) -> f64 {
        match self {
            CoefficientSpec::Constant { value } => *value,
            CoefficientSpec::Cosine {
                mean,
                amplitude,
                phase,
                harmonics,
            } => {
                let theta = TAU * reduce(x, period) / period;
                let mut value = mean + amplitude * (theta + phase).cos();
                for &[m, a, p] in harmonics {
                    value += a * (m * theta + p).cos();
                }
                value
            }
            CoefficientSpec::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let s = reduce(x, period);
                let idx = breakpoints.partition_point(|&b| b <= s);
                if idx == 0 {
                    *values.last().unwrap()
                } else {
                    values[idx - 1]
                }
            }
            CoefficientSpec::Table { samples } => {
                let n = samples.len();
                let pos = reduce(x, period) / period * n as f64;
                let j = (pos.floor() as usize).min(n - 1);
                let frac = pos - j as f64;
                (1.0 - frac) * samples[j] + frac * samples[(j + 1) % n]
            }
            CoefficientSpec::Combination { terms } => terms
                .iter()
                .map(|t| t.weight * t.spec.evaluate(x, period))
                .sum(),
        }
    }

    /// First derivative: exact for cosine, centered differences of the samples
    /// for tables, zero inside the pieces of piecewise specs.
    pub fn derivative(&self, x: f64, period: f64) -> f64 {
        match self {
            CoefficientSpec::Constant { .. } | CoefficientSpec::PiecewiseConstant { .. } => 0.0,
            CoefficientSpec::Cosine {
                amplitude,
                phase,
                harmonics,
                ..
            } => {
                let k = TAU / period;
                let theta = k * reduce(x, period);
                let mut d = -amplitude * k * (theta + phase).sin();
                for &[m, a, p] in harmonics {
                    d -= a * m * k * (m * theta + p).sin();
                }
                d
            }
            CoefficientSpec::Table { samples } => {
                let n = samples.len();
                let dx = period / n as f64;
                let centered = |j: usize| {
                    (samples[(j + 1) % n] - samples[(j + n - 1) % n]) / (2.0 * dx)
                };
                let pos = reduce(x, period) / dx;
                let j = (pos.floor() as usize).min(n - 1);
                let frac = pos - j as f64;
                (1.0 - frac) * centered(j) + frac * centered((j + 1) % n)
            }
            CoefficientSpec::Combination { terms } => terms
                .iter()
                .map(|t| t.weight * t.spec.derivative(x, period))
                .sum(),
        }
    }

    /// Whether the function is continuously differentiable.
    pub fn is_smooth(&self) -> bool {
        match self {
            CoefficientSpec::Constant { .. } | CoefficientSpec::Cosine { .. } => true,
            CoefficientSpec::PiecewiseConstant { breakpoints, values } => {
                breakpoints.len() == 1 || values.windows(2).all(|w| w[0] == w[1])
            }
            CoefficientSpec::Table { .. } => false,
            CoefficientSpec::Combination { terms } => terms.iter().all(|t| t.spec.is_smooth()),
        }
    }

    /// Points in `[0, period)` where the function may fail to be smooth.
    pub fn kinks(&self, period: f64) -> Vec<f64> {
        let mut out = match self {
            CoefficientSpec::Constant { .. } | CoefficientSpec::Cosine { .. } => Vec::new(),
            CoefficientSpec::PiecewiseConstant { breakpoints, .. } => breakpoints.clone(),
            CoefficientSpec::Table { samples } => {
                let n = samples.len();
                (0..n).map(|j| j as f64 * period / n as f64).collect()
            }
            CoefficientSpec::Combination { terms } => {
                terms.iter().flat_map(|t| t.spec.kinks(period)).collect()
            }
        };
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }

    /// The same function written for a period `factor` times longer:
    /// `x ↦ f(x / factor)` when evaluated with period `factor·L`.
    pub fn rescaled(&self, factor: f64) -> Self {
        match self {
            CoefficientSpec::PiecewiseConstant {
                breakpoints,
                values,
            } => CoefficientSpec::PiecewiseConstant {
                breakpoints: breakpoints.iter().map(|b| b * factor).collect(),
                values: values.clone(),
            },
            CoefficientSpec::Combination { terms } => CoefficientSpec::Combination {
                terms: terms
                    .iter()
                    .map(|t| WeightedSpec {
                        weight: t.weight,
                        spec: t.spec.rescaled(factor),
                    })
                    .collect(),
            },
            other => other.clone(),
        }
    }

    /// The reflection `x ↦ f(-x)`. Piecewise pieces become right-closed at
    /// their former breakpoints, which only matters exactly on a breakpoint.
    pub fn mirrored(&self, period: f64) -> Self {
        match self {
            CoefficientSpec::Constant { .. } => self.clone(),
            CoefficientSpec::Cosine {
                mean,
                amplitude,
                phase,
                harmonics,
            } => CoefficientSpec::Cosine {
                mean: *mean,
                amplitude: *amplitude,
                phase: -phase,
                harmonics: harmonics.iter().map(|&[m, a, p]| [m, a, -p]).collect(),
            },
            CoefficientSpec::PiecewiseConstant {
                breakpoints,
                values,
            } => {
                let m = breakpoints.len();
                let mut pieces: Vec<(f64, f64)> = (0..m)
                    .map(|k| {
                        let end = if k + 1 < m {
                            breakpoints[k + 1]
                        } else {
                            breakpoints[0] + period
                        };
                        (reduce(period - end, period), values[k])
                    })
                    .collect();
                pieces.sort_by(|a, b| a.0.total_cmp(&b.0));
                CoefficientSpec::PiecewiseConstant {
                    breakpoints: pieces.iter().map(|p| p.0).collect(),
                    values: pieces.iter().map(|p| p.1).collect(),
                }
            }
            CoefficientSpec::Table { samples } => {
                let n = samples.len();
                CoefficientSpec::Table {
                    samples: (0..n).map(|j| samples[(n - j) % n]).collect(),
                }
            }
            CoefficientSpec::Combination { terms } => CoefficientSpec::Combination {
                terms: terms
                    .iter()
                    .map(|t| WeightedSpec {
                        weight: t.weight,
                        spec: t.spec.mirrored(period),
                    })
                    .collect(),
            },
        }
    }

    /// `Σ wᵢ·fᵢ`, kept in a single closed-form kind whenever one exists.
    pub fn linear_combination(terms: &[(f64, &CoefficientSpec)], period: f64) -> Self {
        let mut offset = 0.0;
        let mut cosine: Option<(f64, f64, f64, Vec<[f64; 3]>)> = None;
        let mut piecewise: Vec<(f64, &[f64], &[f64])> = Vec::new();
        let mut other: Vec<WeightedSpec> = Vec::new();

        for &(w, spec) in terms {
            match spec {
                CoefficientSpec::Constant { value } => offset += w * value,
                CoefficientSpec::Cosine {
                    mean,
                    amplitude,
                    phase,
                    harmonics,
                } => {
                    offset += w * mean;
                    let scaled: Vec<[f64; 3]> =
                        harmonics.iter().map(|&[m, a, p]| [m, w * a, p]).collect();
                    match cosine.as_mut() {
                        None => cosine = Some((w * amplitude, *phase, 0.0, scaled)),
                        Some((_, _, _, hs)) => {
                            if w * amplitude != 0.0 {
                                hs.push([1.0, w * amplitude, *phase]);
                            }
                            hs.extend(scaled);
                        }
                    }
                }
                CoefficientSpec::PiecewiseConstant {
                    breakpoints,
                    values,
                } => piecewise.push((w, breakpoints, values)),
                _ => other.push(WeightedSpec {
                    weight: w,
                    spec: spec.clone(),
                }),
            }
        }

        let merged_piecewise = if piecewise.is_empty() {
            None
        } else {
            let mut cuts: Vec<f64> = piecewise
                .iter()
                .flat_map(|(_, b, _)| b.iter().copied())
                .collect();
            cuts.sort_by(f64::total_cmp);
            cuts.dedup();
            let values: Vec<f64> = cuts
                .iter()
                .map(|&c| {
                    piecewise
                        .iter()
                        .map(|(w, b, v)| {
                            w * CoefficientSpec::PiecewiseConstant {
                                breakpoints: b.to_vec(),
                                values: v.to_vec(),
                            }
                            .evaluate(c, period)
                        })
                        .sum::<f64>()
                })
                .collect();
            Some((cuts, values))
        };

        match (cosine, merged_piecewise, other.is_empty()) {
            (None, None, true) => CoefficientSpec::Constant { value: offset },
            (Some((amplitude, phase, _, harmonics)), None, true) => CoefficientSpec::Cosine {
                mean: offset,
                amplitude,
                phase,
                harmonics,
            },
            (None, Some((breakpoints, values)), true) => CoefficientSpec::PiecewiseConstant {
                breakpoints,
                values: values.into_iter().map(|v: f64| v + offset).collect(),
            },
            (cosine, piecewise, _) => {
                let mut out = other;
                if let Some((amplitude, phase, _, harmonics)) = cosine {
                    out.push(WeightedSpec {
                        weight: 1.0,
                        spec: CoefficientSpec::Cosine {
                            mean: 0.0,
                            amplitude,
                            phase,
                            harmonics,
                        },
                    });
                }
                if let Some((breakpoints, values)) = piecewise {
                    out.push(WeightedSpec {
                        weight: 1.0,
                        spec: CoefficientSpec::PiecewiseConstant {
                            breakpoints,
                            values,
                        },
                    });
                }
                if offset != 0.0 {
                    out.push(WeightedSpec {
                        weight: 1.0,
                        spec: CoefficientSpec::Constant { value: offset },
                    });
                }
                CoefficientSpec::Combination { terms: out }
            }
        }
    }

    /// Minimum and maximum over the uniform probe grid.
    pub fn probe_extrema(&self, period: f64) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for j in 0..PROBE_POINTS {
            let v = self.evaluate(j as f64 * period / PROBE_POINTS as f64, period);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        (lo, hi)
    }

    /// Mean over one period.
    pub fn mean(&self, period: f64) -> Result<f64> {
        periodic_mean(|x| self.evaluate(x, period), period, &self.kinks(period))
    }
}

/// Mean of a periodic function over `[0, period)`.
///
/// The period is split at `kinks`, each piece gets a share of the node budget
/// proportional to its length, and the composite midpoint rule is applied
/// piecewise (it never samples a discontinuity). The budget starts at 4096
/// nodes and doubles until the relative change drops below 1e-10.
pub fn periodic_mean(f: impl Fn(f64) -> f64, period: f64, kinks: &[f64]) -> Result<f64> {
    let mut cuts: Vec<f64> = kinks
        .iter()
        .copied()
        .filter(|&k| k > 0.0 && k < period)
        .collect();
    cuts.push(0.0);
    cuts.push(period);
    cuts.sort_by(f64::total_cmp);
    cuts.dedup();

    let integrate = |nodes: usize| -> (f64, f64) {
        let mut total = 0.0;
        let mut total_abs = 0.0;
        for w in cuts.windows(2) {
            let (a, b) = (w[0], w[1]);
            let m = ((nodes as f64 * (b - a) / period).ceil() as usize).max(1);
            let h = (b - a) / m as f64;
            // Kahan summation keeps constant integrands exact to a few ulps.
            let mut s = 0.0;
            let mut carry = 0.0;
            let mut s_abs = 0.0;
            for j in 0..m {
                let v = f(a + (j as f64 + 0.5) * h);
                let y = v - carry;
                let t = s + y;
                carry = (t - s) - y;
                s = t;
                s_abs += v.abs();
            }
            total += s * h;
            total_abs += s_abs * h;
        }
        (total / period, total_abs / period)
    };

    let mut nodes = QUADRATURE_START;
    let (mut prev, _) = integrate(nodes);
    loop {
        nodes *= 2;
        let (cur, cur_abs) = integrate(nodes);
        let change = (cur - prev).abs();
        if change <= QUADRATURE_RTOL * cur.abs().max(cur_abs) || cur_abs == 0.0 {
            return Ok(cur);
        }
        if nodes >= QUADRATURE_CAP {
            return Err(Error::numerical_with(
                format!("periodic quadrature did not converge with {nodes} nodes"),
                change,
            ));
        }
        prev = cur;
    }
}

/// Names of the seven coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coefficient {
    Sigma,
    RU,
    RV,
    KappaU,
    KappaV,
    MuU,
    MuV,
}

impl Coefficient {
    pub const ALL: [Coefficient; 7] = [
        Coefficient::Sigma,
        Coefficient::RU,
        Coefficient::RV,
        Coefficient::KappaU,
        Coefficient::KappaV,
        Coefficient::MuU,
        Coefficient::MuV,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Coefficient::Sigma => "sigma",
            Coefficient::RU => "r_u",
            Coefficient::RV => "r_v",
            Coefficient::KappaU => "kappa_u",
            Coefficient::KappaV => "kappa_v",
            Coefficient::MuU => "mu_u",
            Coefficient::MuV => "mu_v",
        }
    }

    /// Growth rates may change sign; every other coefficient must stay positive.
    pub fn must_be_positive(self) -> bool {
        !matches!(self, Coefficient::RU | Coefficient::RV)
    }
}

/// Probe-grid extrema of a coefficient set.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Extrema {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub kappa_min: f64,
    pub kappa_max: f64,
    pub mu_min: f64,
    pub mu_max: f64,
}

impl Extrema {
    /// `K̄ = r_max / κ_min`, the asymptotic bound on `u + v`.
    pub fn k_bar(&self) -> f64 {
        self.r_max / self.kappa_min
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CoefficientSetRepr {
    period: f64,
    sigma: CoefficientSpec,
    r_u: CoefficientSpec,
    r_v: CoefficientSpec,
    kappa_u: CoefficientSpec,
    kappa_v: CoefficientSpec,
    mu_u: CoefficientSpec,
    mu_v: CoefficientSpec,
}

/// The seven `L`-periodic coefficients `σ, r_u, r_v, κ_u, κ_v, μ_u, μ_v`.
///
/// Immutable once built; construction validates every spec and the positivity
/// of `σ, κ, μ` on the probe grid.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(try_from = "CoefficientSetRepr", into = "CoefficientSetRepr")]
pub struct CoefficientSet {
    period: f64,
    sigma: CoefficientSpec,
    r_u: CoefficientSpec,
    r_v: CoefficientSpec,
    kappa_u: CoefficientSpec,
    kappa_v: CoefficientSpec,
    mu_u: CoefficientSpec,
    mu_v: CoefficientSpec,
    extrema: Extrema,
}

impl TryFrom<CoefficientSetRepr> for CoefficientSet {
    type Error = Error;

    fn try_from(r: CoefficientSetRepr) -> Result<Self> {
        CoefficientSet::new(
            r.period, r.sigma, r.r_u, r.r_v, r.kappa_u, r.kappa_v, r.mu_u, r.mu_v,
        )
    }
}

impl From<CoefficientSet> for CoefficientSetRepr {
    fn from(s: CoefficientSet) -> Self {
        CoefficientSetRepr {
            period: s.period,
            sigma: s.sigma,
            r_u: s.r_u,
            r_v: s.r_v,
            kappa_u: s.kappa_u,
            kappa_v: s.kappa_v,
            mu_u: s.mu_u,
            mu_v: s.mu_v,
        }
    }
}

impl PartialEq for CoefficientSet {
    fn eq(&self, other: &Self) -> bool {
        self.period == other.period
            && Coefficient::ALL
                .iter()
                .all(|&c| self.spec(c) == other.spec(c))
    }
}

impl CoefficientSet {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        period: f64,
        sigma: CoefficientSpec,
        r_u: CoefficientSpec,
        r_v: CoefficientSpec,
        kappa_u: CoefficientSpec,
        kappa_v: CoefficientSpec,
        mu_u: CoefficientSpec,
        mu_v: CoefficientSpec,
    ) -> Result<Self> {
        let placeholder = Extrema {
            sigma_min: 0.0,
            sigma_max: 0.0,
            r_min: 0.0,
            r_max: 0.0,
            kappa_min: 0.0,
            kappa_max: 0.0,
            mu_min: 0.0,
            mu_max: 0.0,
        };
        let mut set = CoefficientSet {
            period,
            sigma,
            r_u,
            r_v,
            kappa_u,
            kappa_v,
            mu_u,
            mu_v,
            extrema: placeholder,
        };
        let mut ranges = [(0.0, 0.0); 7];
        for (slot, &c) in ranges.iter_mut().zip(Coefficient::ALL.iter()) {
            let spec = set.spec(c);
            spec.validate(period)
                .map_err(|e| Error::Validation(format!("{}: {e}", c.name())))?;
            let (lo, hi) = spec.probe_extrema(period);
            if c.must_be_positive() && lo <= 0.0 {
                return Err(Error::Validation(format!(
                    "{} must be positive everywhere, probe minimum is {lo}",
                    c.name()
                )));
            }
            *slot = (lo, hi);
        }
        if !set.sigma.is_smooth() {
            log::warn!(
                "sigma is not C1; accepted because the flux discretization never differentiates it"
            );
        }
        let [s, ru, rv, ku, kv, mu, mv] = ranges;
        set.extrema = Extrema {
            sigma_min: s.0,
            sigma_max: s.1,
            r_min: ru.0.min(rv.0),
            r_max: ru.1.max(rv.1),
            kappa_min: ku.0.min(kv.0),
            kappa_max: ku.1.max(kv.1),
            mu_min: mu.0.min(mv.0),
            mu_max: mu.1.max(mv.1),
        };
        Ok(set)
    }

    /// All-constant coefficients.
    #[allow(clippy::too_many_arguments)]
    pub fn homogeneous(
        sigma: f64,
        r_u: f64,
        r_v: f64,
        kappa_u: f64,
        kappa_v: f64,
        mu_u: f64,
        mu_v: f64,
    ) -> Result<Self> {
        use CoefficientSpec as S;
        Self::new(
            1.0,
            S::constant(sigma),
            S::constant(r_u),
            S::constant(r_v),
            S::constant(kappa_u),
            S::constant(kappa_v),
            S::constant(mu_u),
            S::constant(mu_v),
        )
    }

    /// Build the set from the infection-model parameters:
    /// `r_i = N·β_i − γ_i`, `κ_i = β_i`, `μ` carried over, `σ` unchanged.
    #[allow(clippy::too_many_arguments)]
    pub fn from_sis(
        population: f64,
        sigma: CoefficientSpec,
        beta1: CoefficientSpec,
        beta2: CoefficientSpec,
        gamma1: CoefficientSpec,
        gamma2: CoefficientSpec,
        mu1: CoefficientSpec,
        mu2: CoefficientSpec,
        period: f64,
    ) -> Result<Self> {
        if !(population.is_finite() && population > 0.0) {
            return Err(Error::Validation(format!(
                "total population must be positive, got {population}"
            )));
        }
        for (name, spec) in [("gamma1", &gamma1), ("gamma2", &gamma2)] {
            spec.validate(period)
                .map_err(|e| Error::Validation(format!("{name}: {e}")))?;
        }
        let r_u =
            CoefficientSpec::linear_combination(&[(population, &beta1), (-1.0, &gamma1)], period);
        let r_v =
            CoefficientSpec::linear_combination(&[(population, &beta2), (-1.0, &gamma2)], period);
        Self::new(period, sigma, r_u, r_v, beta1, beta2, mu1, mu2)
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn extrema(&self) -> &Extrema {
        &self.extrema
    }

    pub fn k_bar(&self) -> f64 {
        self.extrema.k_bar()
    }

    pub fn spec(&self, c: Coefficient) -> &CoefficientSpec {
        match c {
            Coefficient::Sigma => &self.sigma,
            Coefficient::RU => &self.r_u,
            Coefficient::RV => &self.r_v,
            Coefficient::KappaU => &self.kappa_u,
            Coefficient::KappaV => &self.kappa_v,
            Coefficient::MuU => &self.mu_u,
            Coefficient::MuV => &self.mu_v,
        }
    }

    pub fn eval(&self, c: Coefficient, x: f64) -> f64 {
        self.spec(c).evaluate(x, self.period)
    }

    pub fn sample(&self, c: Coefficient, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.eval(c, x)).collect()
    }

    pub fn is_homogeneous(&self) -> bool {
        Coefficient::ALL
            .iter()
            .all(|&c| matches!(self.spec(c), CoefficientSpec::Constant { .. }))
    }

    /// Rebuild with one coefficient replaced.
    pub fn with(&self, c: Coefficient, spec: CoefficientSpec) -> Result<Self> {
        let mut repr = CoefficientSetRepr::from(self.clone());
        *match c {
            Coefficient::Sigma => &mut repr.sigma,
            Coefficient::RU => &mut repr.r_u,
            Coefficient::RV => &mut repr.r_v,
            Coefficient::KappaU => &mut repr.kappa_u,
            Coefficient::KappaV => &mut repr.kappa_v,
            Coefficient::MuU => &mut repr.mu_u,
            Coefficient::MuV => &mut repr.mu_v,
        } = spec;
        Self::try_from(repr)
    }

    fn map_specs(&self, period: f64, f: impl Fn(&CoefficientSpec) -> CoefficientSpec) -> Result<Self> {
        Self::new(
            period,
            f(&self.sigma),
            f(&self.r_u),
            f(&self.r_v),
            f(&self.kappa_u),
            f(&self.kappa_v),
            f(&self.mu_u),
            f(&self.mu_v),
        )
    }

    /// Rapidly oscillating version: every coefficient becomes `x ↦ f(x/ε)` and
    /// the period shrinks by `ε`. Intended for unit-period sets.
    pub fn rescale_epsilon(&self, eps: f64) -> Result<Self> {
        if !(eps.is_finite() && eps > 0.0 && eps <= 1.0) {
            return Err(Error::Validation(format!(
                "epsilon must lie in (0, 1], got {eps}"
            )));
        }
        self.map_specs(self.period * eps, |s| s.rescaled(eps))
    }

    /// Reflection `x ↦ -x` of every coefficient.
    pub fn mirrored(&self) -> Result<Self> {
        let p = self.period;
        self.map_specs(p, |s| s.mirrored(p))
    }

    /// Arithmetic means and the harmonic mean of `σ`.
    pub fn homogenize(&self) -> Result<HomogenizedSet> {
        let p = self.period;
        let mean = |c: Coefficient| self.spec(c).mean(p);
        let inv_sigma = periodic_mean(|x| 1.0 / self.sigma.evaluate(x, p), p, &self.sigma.kinks(p))?;
        Ok(HomogenizedSet {
            mean_sigma: mean(Coefficient::Sigma)?,
            sigma_h: 1.0 / inv_sigma,
            mean_r_u: mean(Coefficient::RU)?,
            mean_r_v: mean(Coefficient::RV)?,
            mean_kappa_u: mean(Coefficient::KappaU)?,
            mean_kappa_v: mean(Coefficient::KappaV)?,
            mean_mu_u: mean(Coefficient::MuU)?,
            mean_mu_v: mean(Coefficient::MuV)?,
        })
    }
}

/// Effective coefficients of the homogenization limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomogenizedSet {
    /// Arithmetic mean of `σ`, kept for comparison with `sigma_h`.
    pub mean_sigma: f64,
    /// Harmonic mean of `σ`.
    pub sigma_h: f64,
    pub mean_r_u: f64,
    pub mean_r_v: f64,
    pub mean_kappa_u: f64,
    pub mean_kappa_v: f64,
    pub mean_mu_u: f64,
    pub mean_mu_v: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn two_value_sigma() -> CoefficientSpec {
        CoefficientSpec::piecewise(vec![0.0, 0.5], vec![1.0, 4.0])
    }

    fn cosine_set() -> CoefficientSet {
        use CoefficientSpec as S;
        CoefficientSet::new(
            1.0,
            S::cosine(1.0, 0.3, 0.2),
            S::cosine(1.0, 0.5, 0.0),
            S::cosine(0.5, 0.4, 1.0),
            S::constant(1.0),
            S::cosine(1.5, 0.2, 0.0),
            S::constant(0.4),
            S::constant(0.6),
        )
        .unwrap()
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(CoefficientSpec::constant(2.0).evaluate(17.3, 1.0), 2.0);
        assert_relative_eq!(
            CoefficientSpec::cosine(1.0, 0.5, 0.0).evaluate(0.0, 1.0),
            1.5,
            epsilon = 1e-15
        );
        assert_eq!(two_value_sigma().evaluate(1.25, 1.0), 1.0);
        assert_eq!(two_value_sigma().evaluate(0.5, 1.0), 4.0);
        assert_eq!(two_value_sigma().evaluate(-0.25, 1.0), 4.0);
    }

    #[test]
    fn piecewise_wraps_before_first_breakpoint() {
        let s = CoefficientSpec::piecewise(vec![0.25, 0.75], vec![1.0, 3.0]);
        assert_eq!(s.evaluate(0.1, 1.0), 3.0);
        assert_eq!(s.evaluate(0.3, 1.0), 1.0);
    }

    #[test]
    fn table_interpolates_periodically() {
        let s = CoefficientSpec::table(vec![1.0, 3.0]);
        assert_relative_eq!(s.evaluate(0.25, 1.0), 2.0);
        assert_relative_eq!(s.evaluate(0.75, 1.0), 2.0);
        assert_relative_eq!(s.evaluate(1.5, 1.0), 3.0);
    }

    #[test]
    fn malformed_specs_are_rejected() {
        assert!(CoefficientSpec::table(vec![]).validate(1.0).is_err());
        assert!(CoefficientSpec::piecewise(vec![0.5, 0.2], vec![1.0, 2.0])
            .validate(1.0)
            .is_err());
        assert!(CoefficientSpec::piecewise(vec![0.0, 1.0], vec![1.0, 2.0])
            .validate(1.0)
            .is_err());
        assert!(CoefficientSpec::piecewise(vec![0.0], vec![1.0, 2.0])
            .validate(1.0)
            .is_err());
        let bad_harmonic = CoefficientSpec::Cosine {
            mean: 1.0,
            amplitude: 0.0,
            phase: 0.0,
            harmonics: vec![[1.5, 0.1, 0.0]],
        };
        assert!(bad_harmonic.validate(1.0).is_err());
    }

    #[test]
    fn periodicity_on_grid() {
        let set = cosine_set();
        let specs = [
            CoefficientSpec::Cosine {
                mean: 1.0,
                amplitude: 0.3,
                phase: 0.7,
                harmonics: vec![[3.0, 0.1, 0.2]],
            },
            two_value_sigma(),
            CoefficientSpec::table(vec![1.0, 2.0, 0.5, 4.0]),
        ];
        for spec in specs.iter().chain(Coefficient::ALL.iter().map(|&c| set.spec(c))) {
            for j in 0..1000 {
                let x = -3.0 + j as f64 * 0.00731;
                let d = (spec.evaluate(x + 1.0, 1.0) - spec.evaluate(x, 1.0)).abs();
                assert!(d < 1e-12, "{spec:?} at {x}: {d}");
            }
        }
    }

    #[test]
    fn positivity_is_enforced() {
        use CoefficientSpec as S;
        let err = CoefficientSet::new(
            1.0,
            S::cosine(1.0, 1.2, 0.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
        // negative growth is fine
        assert!(CoefficientSet::homogeneous(1.0, -1.0, -2.0, 1.0, 1.0, 1.0, 1.0).is_ok());
        assert!(CoefficientSet::homogeneous(1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn extrema_and_k_bar() {
        let set = CoefficientSet::homogeneous(1.0, 2.0, 0.5, 4.0, 2.0, 1.0, 1.0).unwrap();
        let e = set.extrema();
        assert_eq!(e.r_max, 2.0);
        assert_eq!(e.r_min, 0.5);
        assert_eq!(e.kappa_min, 2.0);
        assert_eq!(set.k_bar(), 1.0);

        let set = cosine_set();
        let e = set.extrema();
        assert_relative_eq!(e.r_max, 1.5, epsilon = 1e-9);
        assert_relative_eq!(e.r_min, 0.1, epsilon = 1e-6);
        assert_relative_eq!(e.sigma_min, 0.7, epsilon = 1e-6);
    }

    #[test]
    fn sis_reduction_examples() {
        use CoefficientSpec as S;
        let set = CoefficientSet::from_sis(
            1.0,
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(0.5),
            S::constant(0.5),
            S::constant(0.3),
            S::constant(0.3),
            1.0,
        )
        .unwrap();
        assert_eq!(set.eval(Coefficient::RU, 0.3), 0.5);
        assert_eq!(set.eval(Coefficient::RV, 0.3), 0.5);
        assert_eq!(set.eval(Coefficient::KappaU, 0.3), 1.0);

        let set = CoefficientSet::from_sis(
            2.0,
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(3.0),
            S::constant(0.5),
            S::constant(0.3),
            S::constant(0.3),
            1.0,
        )
        .unwrap();
        assert_eq!(set.eval(Coefficient::RU, 0.0), -1.0);

        let beta = S::cosine(1.0, 0.5, 0.0);
        let set = CoefficientSet::from_sis(
            1.0,
            S::constant(1.0),
            beta.clone(),
            S::constant(1.0),
            S::constant(0.0),
            S::constant(0.0),
            S::constant(0.3),
            S::constant(0.3),
            1.0,
        )
        .unwrap();
        assert_eq!(set.spec(Coefficient::RU), &beta);
        assert_eq!(set.spec(Coefficient::KappaU), &beta);

        assert!(CoefficientSet::from_sis(
            0.0,
            S::constant(1.0),
            S::constant(1.0),
            S::constant(1.0),
            S::constant(0.0),
            S::constant(0.0),
            S::constant(0.3),
            S::constant(0.3),
            1.0,
        )
        .is_err());
    }

    #[test]
    fn linear_combination_matches_pointwise_sum() {
        let specs = [
            CoefficientSpec::constant(0.7),
            CoefficientSpec::cosine(1.0, 0.5, 0.3),
            CoefficientSpec::cosine(-0.2, 0.1, 1.1),
            two_value_sigma(),
            CoefficientSpec::piecewise(vec![0.1, 0.6], vec![2.0, -1.0]),
            CoefficientSpec::table(vec![0.0, 1.0, 3.0]),
        ];
        let weights = [1.5, -0.5, 2.0, 0.25, -1.0, 0.75];
        for len in 1..=specs.len() {
            let terms: Vec<(f64, &CoefficientSpec)> =
                weights.iter().copied().zip(specs.iter()).take(len).collect();
            let combo = CoefficientSpec::linear_combination(&terms, 1.0);
            combo.validate(1.0).unwrap();
            for j in 0..200 {
                let x = j as f64 * 0.0123;
                let direct: f64 = terms.iter().map(|(w, s)| w * s.evaluate(x, 1.0)).sum();
                assert_relative_eq!(combo.evaluate(x, 1.0), direct, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn rescale_examples() {
        let set = cosine_set();
        let same = set.rescale_epsilon(1.0).unwrap();
        for j in 0..100 {
            let x = j as f64 * 0.037;
            for &c in &Coefficient::ALL {
                assert_eq!(same.eval(c, x), set.eval(c, x));
            }
        }
        let half = set.rescale_epsilon(0.5).unwrap();
        assert_relative_eq!(
            half.eval(Coefficient::RU, 0.25),
            set.eval(Coefficient::RU, 0.5),
            epsilon = 1e-14
        );
        let tenth = set.rescale_epsilon(0.1).unwrap();
        assert_relative_eq!(tenth.period(), 0.1);
        let (a, b) = (set.extrema(), tenth.extrema());
        assert_relative_eq!(a.r_min, b.r_min, epsilon = 1e-12);
        assert_relative_eq!(a.r_max, b.r_max, epsilon = 1e-12);
        assert_relative_eq!(a.sigma_min, b.sigma_min, epsilon = 1e-12);
        assert!(set.rescale_epsilon(0.0).is_err());
        assert!(set.rescale_epsilon(-0.5).is_err());

        let pw = CoefficientSpec::piecewise(vec![0.0, 0.3], vec![1.0, 2.0]);
        let r = pw.rescaled(0.25);
        for j in 0..100 {
            let x = j as f64 * 0.0071;
            assert_eq!(r.evaluate(x, 0.25), pw.evaluate(x / 0.25, 1.0));
        }
    }

    #[test]
    fn mirror_reflects_every_kind() {
        let specs = [
            CoefficientSpec::Cosine {
                mean: 1.0,
                amplitude: 0.3,
                phase: 0.7,
                harmonics: vec![[2.0, 0.1, -0.4]],
            },
            CoefficientSpec::piecewise(vec![0.1, 0.35, 0.8], vec![1.0, 2.0, 5.0]),
            CoefficientSpec::table(vec![1.0, 2.0, 0.5, 4.0, 3.0]),
        ];
        for spec in &specs {
            let m = spec.mirrored(1.0);
            m.validate(1.0).unwrap();
            for j in 0..300 {
                // avoid exact breakpoints, where closedness flips
                let x = 0.001 + j as f64 * 0.00333;
                assert_relative_eq!(m.evaluate(x, 1.0), spec.evaluate(-x, 1.0), epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn homogenize_examples() {
        let set = CoefficientSet::homogeneous(1.3, 0.7, -0.2, 2.0, 3.0, 0.4, 0.5).unwrap();
        let h = set.homogenize().unwrap();
        assert_relative_eq!(h.sigma_h, 1.3, epsilon = 1e-14);
        assert_relative_eq!(h.mean_r_u, 0.7, epsilon = 1e-14);
        assert_relative_eq!(h.mean_r_v, -0.2, epsilon = 1e-14);
        assert_relative_eq!(h.mean_kappa_v, 3.0, epsilon = 1e-14);
        assert_relative_eq!(h.mean_mu_v, 0.5, epsilon = 1e-14);

        let set = set.with(Coefficient::Sigma, two_value_sigma()).unwrap();
        let h = set.homogenize().unwrap();
        assert_relative_eq!(h.sigma_h, 1.6, epsilon = 1e-12);
        assert_relative_eq!(h.mean_sigma, 2.5, epsilon = 1e-12);
        assert!(h.sigma_h < h.mean_sigma);

        let set = set
            .with(Coefficient::RU, CoefficientSpec::cosine(1.0, 0.5, 0.0))
            .unwrap();
        assert_relative_eq!(set.homogenize().unwrap().mean_r_u, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn homogenize_handles_off_grid_breakpoints() {
        let s = CoefficientSpec::piecewise(vec![0.0, 0.3], vec![1.0, 4.0]);
        let set = cosine_set().with(Coefficient::Sigma, s).unwrap();
        let h = set.homogenize().unwrap();
        assert_relative_eq!(h.mean_sigma, 0.3 + 0.7 * 4.0, epsilon = 1e-12);
        assert_relative_eq!(h.sigma_h, 1.0 / (0.3 + 0.7 / 4.0), epsilon = 1e-12);
    }

    #[test]
    fn homogenize_is_invariant_under_integer_rescaling() {
        let set = cosine_set();
        let base = set.homogenize().unwrap();
        for n in [2, 3, 5, 8] {
            let h = set.rescale_epsilon(1.0 / n as f64).unwrap().homogenize().unwrap();
            assert_relative_eq!(h.sigma_h, base.sigma_h, epsilon = 1e-10);
            assert_relative_eq!(h.mean_r_u, base.mean_r_u, epsilon = 1e-10);
            assert_relative_eq!(h.mean_r_v, base.mean_r_v, epsilon = 1e-10);
            assert_relative_eq!(h.mean_kappa_v, base.mean_kappa_v, epsilon = 1e-10);
        }
    }

    #[test]
    fn table_derivative_uses_centered_differences() {
        let n = 64;
        let samples: Vec<f64> = (0..n).map(|j| (TAU * j as f64 / n as f64).sin()).collect();
        let s = CoefficientSpec::table(samples);
        let x = 5.0 / n as f64;
        let expected = TAU * (TAU * x).cos();
        assert!((s.derivative(x, 1.0) - expected).abs() < 0.02);
    }

    #[test]
    fn json_keys() {
        let set = cosine_set().with(Coefficient::Sigma, two_value_sigma()).unwrap();
        let text = serde_json::to_string(&set).unwrap();
        assert!(text.contains("\"kind\":\"piecewise_constant\""));
        assert!(text.contains("\"breakpoints\""));
        let back: CoefficientSet = serde_json::from_str(&text).unwrap();
        assert_eq!(back, set);

        let unknown = r#"{"kind":"constant","value":1.0,"vaule":2.0}"#;
        assert!(serde_json::from_str::<CoefficientSpec>(unknown).is_err());
        let negative = text.replace("\"values\":[1.0,4.0]", "\"values\":[-1.0,4.0]");
        assert!(serde_json::from_str::<CoefficientSet>(&negative).is_err());
    }
}
