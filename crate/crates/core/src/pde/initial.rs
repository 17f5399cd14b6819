use serde::{Deserialize, Serialize};

use crate::coefficients::{CoefficientSet, CoefficientSpec};
use crate::error::{Error, Result};

/// Initial data for `(u, v)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialData {
    /// Both components equal `amplitude` for `x ≤ k1`, fall linearly to zero
    /// at `k2` and vanish beyond.
    RightFrontLike { amplitude: f64, k1: f64, k2: f64 },
    /// Mirror image: zero for `x ≤ k1`, rising linearly to `amplitude` at `k2`.
    LeftFrontLike { amplitude: f64, k1: f64, k2: f64 },
    /// `amplitude·cos²(π(x − center)/(2·half_width))` on the support, in both
    /// components.
    CompactBump { amplitude: f64, center: f64, half_width: f64 },
    /// Periodic functions of the coefficients' period.
    PeriodicPair { u: CoefficientSpec, v: CoefficientSpec },
    ConstantPair { u: f64, v: f64 },
}

impl InitialData {
    pub fn validate(&self, set: &CoefficientSet, allow_above_bound: bool) -> Result<()> {
        let kbar = set.k_bar();
        let nonneg = |a: f64, what: &str| {
            if a >= 0.0 && a.is_finite() {
                Ok(())
            } else {
                Err(Error::Validation(format!("{what} must be finite and nonnegative, got {a}")))
            }
        };
        let peak = match self {
            InitialData::RightFrontLike { amplitude, k1, k2 } | InitialData::LeftFrontLike { amplitude, k1, k2 } => {
                nonneg(*amplitude, "amplitude")?;
                if !(k1.is_finite() && k2.is_finite() && k1 < k2) {
                    return Err(Error::Validation(format!("front data needs k1 < k2, got {k1}, {k2}")));
                }
                2.0 * amplitude
            }
            InitialData::CompactBump {
                amplitude,
                center,
                half_width,
            } => {
                nonneg(*amplitude, "amplitude")?;
                if !(center.is_finite() && *half_width > 0.0 && half_width.is_finite()) {
                    return Err(Error::Validation("bump needs a finite center and positive half_width".into()));
                }
                2.0 * amplitude
            }
            InitialData::PeriodicPair { u, v } => {
                let period = set.period();
                u.validate(period).map_err(|e| Error::Validation(format!("u: {e}")))?;
                v.validate(period).map_err(|e| Error::Validation(format!("v: {e}")))?;
                let (ulo, uhi) = u.probe_extrema(period);
                let (vlo, vhi) = v.probe_extrema(period);
                nonneg(ulo.min(vlo), "initial minimum")?;
                uhi + vhi
            }
            InitialData::ConstantPair { u, v } => {
                nonneg(*u, "u")?;
                nonneg(*v, "v")?;
                u + v
            }
        };
        if peak > kbar * (1.0 + 1e-12) && !allow_above_bound {
            return Err(Error::Validation(format!(
                "initial sup(u + v) = {peak} exceeds K̄ = {kbar}; set allow_amplitude_above_bound to accept"
            )));
        }
        Ok(())
    }

    /// Data for the reflected problem `x ↦ −x`.
    pub fn mirrored(&self, period: f64) -> Self {
        match self.clone() {
            InitialData::RightFrontLike { amplitude, k1, k2 } => InitialData::LeftFrontLike {
                amplitude,
                k1: -k2,
                k2: -k1,
            },
            InitialData::LeftFrontLike { amplitude, k1, k2 } => InitialData::RightFrontLike {
                amplitude,
                k1: -k2,
                k2: -k1,
            },
            InitialData::CompactBump {
                amplitude,
                center,
                half_width,
            } => InitialData::CompactBump {
                amplitude,
                center: -center,
                half_width,
            },
            InitialData::PeriodicPair { u, v } => InitialData::PeriodicPair {
                u: u.mirrored(period),
                v: v.mirrored(period),
            },
            c @ InitialData::ConstantPair { .. } => c,
        }
    }

    pub fn sample(&self, set: &CoefficientSet, x: &[f64]) -> (Vec<f64>, Vec<f64>) {
        match self {
            InitialData::PeriodicPair { u, v } => {
                let p = set.period();
                (
                    x.iter().map(|&s| u.evaluate(s, p)).collect(),
                    x.iter().map(|&s| v.evaluate(s, p)).collect(),
                )
            }
            InitialData::ConstantPair { u, v } => (vec![*u; x.len()], vec![*v; x.len()]),
            _ => {
                let w: Vec<f64> = x.iter().map(|&s| self.profile(s)).collect();
                (w.clone(), w)
            }
        }
    }

    fn profile(&self, x: f64) -> f64 {
        match *self {
            InitialData::RightFrontLike { amplitude, k1, k2 } => amplitude * ((k2 - x) / (k2 - k1)).clamp(0.0, 1.0),
            InitialData::LeftFrontLike { amplitude, k1, k2 } => amplitude * ((x - k1) / (k2 - k1)).clamp(0.0, 1.0),
            InitialData::CompactBump {
                amplitude,
                center,
                half_width,
            } => {
                let s = (x - center) / half_width;
                if s.abs() >= 1.0 {
                    0.0
                } else {
                    amplitude * (0.5 * std::f64::consts::PI * s).cos().powi(2)
                }
            }
            _ => unreachable!("profile is only used for scalar shapes"),
        }
    }
}
