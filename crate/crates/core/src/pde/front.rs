use serde::Serialize;

use super::{DomainSpec, FieldState, BOUNDARY_MARGIN};
use crate::error::{Error, Result};

/// Minimum number of samples in the fitting window.
pub const MIN_FIT_SAMPLES: usize = 20;
/// Fits with `r²` at or below this are reported but not trusted.
pub const MIN_R_SQUARED: f64 = 0.999;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FrontSample {
    pub t: f64,
    /// Rightmost crossing of `min(u, v) = θ`.
    pub x_right: Option<f64>,
    /// Leftmost crossing of `min(u, v) = θ`.
    pub x_left: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FrontTrace {
    pub theta: f64,
    pub samples: Vec<FrontSample>,
    /// First time a tracked front came within the boundary margin.
    pub boundary_warning: Option<f64>,
    x_min: f64,
    x_max: f64,
    watch_right: Option<bool>,
    watch_left: Option<bool>,
}

impl FrontTrace {
    pub fn new(theta: f64, domain: &DomainSpec) -> Self {
        FrontTrace {
            theta,
            samples: Vec::new(),
            boundary_warning: None,
            x_min: domain.x_min,
            x_max: domain.x_max,
            watch_right: None,
            watch_left: None,
        }
    }

    /// Appends the front positions of `state`; the first call decides which
    /// sides are watched for boundary contact, skipping any side that already
    /// starts in the margin (a front anchored at the edge).
    pub fn record(&mut self, x: &[f64], state: &FieldState) {
        let (x_right, x_left) = front_positions(x, &state.u, &state.v, self.theta);
        let margin = BOUNDARY_MARGIN * (self.x_max - self.x_min);
        let near_right = x_right.is_some_and(|p| p > self.x_max - margin);
        let near_left = x_left.is_some_and(|p| p < self.x_min + margin);
        let watch_right = *self.watch_right.get_or_insert(!near_right);
        let watch_left = *self.watch_left.get_or_insert(!near_left);
        if self.boundary_warning.is_none() && ((watch_right && near_right) || (watch_left && near_left)) {
            self.boundary_warning = Some(state.t);
        }
        self.samples.push(FrontSample {
            t: state.t,
            x_right,
            x_left,
        });
    }
}

/// Rightmost and leftmost points where `min(u, v)` crosses `theta`, located by
/// linear interpolation between nodes. `None` when the minimum never reaches
/// `theta`, or when it stays above it up to the last (first) node.
pub fn front_positions(x: &[f64], u: &[f64], v: &[f64], theta: f64) -> (Option<f64>, Option<f64>) {
    let s: Vec<f64> = u.iter().zip(v).map(|(a, b)| a.min(*b)).collect();
    let n = s.len();
    let right = (0..n).rev().find(|&i| s[i] >= theta).and_then(|i| {
        (i + 1 < n).then(|| {
            let f = (s[i] - theta) / (s[i] - s[i + 1]);
            x[i] + f * (x[i + 1] - x[i])
        })
    });
    let left = (0..n).find(|&i| s[i] >= theta).and_then(|i| {
        (i > 0).then(|| {
            let f = (s[i] - theta) / (s[i] - s[i - 1]);
            x[i] - f * (x[i] - x[i - 1])
        })
    });
    (right, left)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SideSpeed {
    /// Outward speed: slope of `x_right`, or of `−x_left`.
    pub speed: f64,
    pub r_squared: f64,
    pub samples: usize,
    pub reliable: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SpeedMeasurement {
    pub right: Option<SideSpeed>,
    pub left: Option<SideSpeed>,
    pub window_start: f64,
    pub window_end: f64,
}

/// Least-squares front speeds over the last `window` fraction of the trace,
/// after discarding the first 30 % as burn-in. Samples recorded after a
/// boundary warning are dropped.
pub fn measure_speed(trace: &FrontTrace, window: f64) -> Result<SpeedMeasurement> {
    if !(window > 0.0 && window <= 1.0) {
        return Err(Error::Validation(format!("window fraction must lie in (0, 1], got {window}")));
    }
    let cutoff = trace.boundary_warning.unwrap_or(f64::INFINITY);
    let usable: Vec<&FrontSample> = trace.samples.iter().filter(|s| s.t < cutoff).collect();
    let (Some(first), Some(last)) = (usable.first(), usable.last()) else {
        return Err(Error::Precondition("front trace is empty".into()));
    };
    let span = last.t - first.t;
    let start = first.t + span * (1.0 - window).max(0.3);
    let fit = |pick: &dyn Fn(&FrontSample) -> Option<f64>| -> Option<SideSpeed> {
        let pts: Vec<(f64, f64)> = usable
            .iter()
            .filter(|s| s.t >= start)
            .filter_map(|s| pick(s).map(|p| (s.t, p)))
            .collect();
        if pts.len() < MIN_FIT_SAMPLES {
            return None;
        }
        let (slope, r2) = linear_fit(&pts);
        Some(SideSpeed {
            speed: slope,
            r_squared: r2,
            samples: pts.len(),
            reliable: r2 > MIN_R_SQUARED,
        })
    };
    let right = fit(&|s| s.x_right);
    let left = fit(&|s| s.x_left.map(|p| -p));
    if right.is_none() && left.is_none() {
        return Err(Error::Precondition(format!(
            "fewer than {MIN_FIT_SAMPLES} usable front samples in the fitting window"
        )));
    }
    Ok(SpeedMeasurement {
        right,
        left,
        window_start: start,
        window_end: last.t,
    })
}

/// Slope and coefficient of determination; a perfectly flat series has `r² = 1`.
fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sty: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let slope = if stt > 0.0 { sty / stt } else { 0.0 };
    let ss_tot: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - my - slope * (p.0 - mt)).powi(2)).sum();
    let r2 = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    (slope, r2)
}

/// Whether `w` is nonincreasing on `[a, b]` up to `tol`.
pub fn is_monotone_front(x: &[f64], w: &[f64], a: f64, b: f64, tol: f64) -> bool {
    let seg: Vec<f64> = x.iter().zip(w).filter(|(p, _)| **p >= a && **p <= b).map(|(_, q)| *q).collect();
    seg.windows(2).all(|p| p[1] <= p[0] + tol)
}

/// Height by which `w` on `[a, b]` rises above its value at `a` (the plateau
/// behind a right-moving front). Positive means an interior hump.
pub fn hump_height(x: &[f64], w: &[f64], a: f64, b: f64) -> f64 {
    let seg: Vec<f64> = x.iter().zip(w).filter(|(p, _)| **p >= a && **p <= b).map(|(_, q)| *q).collect();
    let Some(&base) = seg.first() else {
        return 0.0;
    };
    seg.iter().fold(f64::NEG_INFINITY, |m, &q| m.max(q)) - base
}
