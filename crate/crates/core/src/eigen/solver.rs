use serde::{Deserialize, Serialize};

use super::operator::DiscreteOperator;
use crate::error::{Error, Result};
use crate::linalg::BlockVec;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    /// Perron iteration on `(τI − M)⁻¹` with `τ` tracking the Collatz–Wielandt
    /// upper bound.
    #[default]
    ShiftInvert,
    /// Plain power iteration on `M + sI`.
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EigenOptions {
    pub method: EigenMethod,
    /// Iteration cap; `None` picks 200 for shift-invert and 10⁶ for power.
    pub max_iterations: Option<usize>,
    pub value_tol: f64,
    pub residual_tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            method: EigenMethod::ShiftInvert,
            max_iterations: None,
            value_tol: 1e-12,
            residual_tol: 1e-9,
        }
    }
}

/// Principal eigenvalue with its positive eigenvector pair.
#[derive(Clone, Debug, Serialize)]
pub struct EigenResult {
    /// Best estimate of the continuous eigenvalue. Equal to `discrete_value`
    /// unless grid refinement supplied a Richardson-extrapolated estimate.
    pub value: f64,
    /// Eigenvalue of the discrete operator that produced `phi`, `psi`.
    pub discrete_value: f64,
    pub lambda: f64,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Node positions of the grid carrying the eigenvector.
    pub x: Vec<f64>,
    pub n_cells: usize,
    pub iterations: usize,
    /// `‖Mw − value·w‖∞ / ‖w‖∞` for the discrete pair.
    pub residual: f64,
    /// Collatz–Wielandt bracket of the discrete eigenvalue.
    pub bounds: (f64, f64),
}

struct Snapshot {
    value: f64,
    noise: f64,
    residual: f64,
    bounds: (f64, f64),
}

fn evaluate(op: &DiscreteOperator, phi: &[f64], psi: &[f64]) -> Result<Snapshot> {
    let (mu, mv) = op.apply(phi, psi);
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..phi.len() {
        num += mu[i] * phi[i] + mv[i] * psi[i];
        den += phi[i] * phi[i] + psi[i] * psi[i];
    }
    let value = num / den;
    let mut res = 0.0f64;
    let mut wmax = 0.0f64;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..phi.len() {
        res = res
            .max((mu[i] - value * phi[i]).abs())
            .max((mv[i] - value * psi[i]).abs());
        wmax = wmax.max(phi[i]).max(psi[i]);
        for q in [mu[i] / phi[i], mv[i] / psi[i]] {
            lo = lo.min(q);
            hi = hi.max(q);
        }
    }
    if !value.is_finite() || !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::numerical("non-finite iterate in eigen solver"));
    }
    Ok(Snapshot {
        value,
        // A sup-normalized vector carries representation error ~ε per entry,
        // so no residual can get below ~ε‖M‖∞.
        noise: op.norm_inf() * f64::EPSILON,
        residual: res / wmax,
        bounds: (lo, hi),
    })
}

fn normalize(phi: &mut [f64], psi: &mut [f64]) {
    let m = phi
        .iter()
        .chain(psi.iter())
        .fold(0.0f64, |a, &b| a.max(b.abs()));
    for w in phi.iter_mut().chain(psi.iter_mut()) {
        *w = (*w / m).max(f64::MIN_POSITIVE);
    }
}

/// Principal eigenpair of a cooperative operator, from a flat start.
pub fn principal_eigenpair(op: &DiscreteOperator) -> Result<EigenResult> {
    principal_eigenpair_with(op, &EigenOptions::default(), None)
}

/// Principal eigenpair with explicit options and an optional warm start.
pub fn principal_eigenpair_with(
    op: &DiscreteOperator,
    opts: &EigenOptions,
    warm: Option<(&[f64], &[f64])>,
) -> Result<EigenResult> {
    let n = op.n_nodes();
    if !op.is_cooperative() {
        return Err(Error::Contract(format!(
            "operator is not cooperative (min off-diagonal {})",
            op.min_off_diagonal()
        )));
    }
    let (mut phi, mut psi) = match warm {
        Some((p, q)) if p.len() == n && q.len() == n && p.iter().chain(q).all(|&w| w > 0.0) => {
            (p.to_vec(), q.to_vec())
        }
        _ => (vec![1.0; n], vec![1.0; n]),
    };
    normalize(&mut phi, &mut psi);

    // The tolerances cannot be tighter than the rounding level of M·w.
    let converged = |prev: f64, s: &Snapshot| {
        (s.value - prev).abs() <= (opts.value_tol * s.value.abs().max(1.0)).max(4.0 * s.noise)
            && s.residual <= opts.residual_tol.max(8.0 * s.noise)
    };

    let mut prev = f64::NAN;
    let mut last = evaluate(op, &phi, &psi)?;
    match opts.method {
        EigenMethod::ShiftInvert => {
            let cap = opts.max_iterations.unwrap_or(200);
            for it in 1..=cap {
                let (lo, hi) = last.bounds;
                let w_min = phi.iter().chain(&psi).fold(1.0f64, |a, &b| a.min(b));
                let margin = (hi - lo)
                    .max(1e-8 * hi.abs().max(1.0))
                    .max(16.0 * last.noise / w_min);
                let factor = op.shifted_system(hi + margin).factor()?;
                let rhs: Vec<BlockVec<2>> =
                    (0..n).map(|i| BlockVec::<2>::new(phi[i], psi[i])).collect();
                let sol = factor.solve(&rhs);
                for (i, s) in sol.iter().enumerate() {
                    phi[i] = s[0];
                    psi[i] = s[1];
                }
                normalize(&mut phi, &mut psi);
                prev = last.value;
                last = evaluate(op, &phi, &psi)?;
                if converged(prev, &last) {
                    return Ok(finish(op, phi, psi, last, it));
                }
            }
            Err(Error::numerical_with(
                format!("shift-invert iteration did not converge in {cap} steps"),
                last.residual,
            ))
        }
        EigenMethod::Power => {
            let cap = opts.max_iterations.unwrap_or(1_000_000);
            let shift = 1.0 + (-op.min_diagonal()).max(0.0);
            for it in 1..=cap {
                let (mu, mv) = op.apply(&phi, &psi);
                for i in 0..n {
                    phi[i] = mu[i] + shift * phi[i];
                    psi[i] = mv[i] + shift * psi[i];
                }
                normalize(&mut phi, &mut psi);
                prev = last.value;
                last = evaluate(op, &phi, &psi)?;
                if converged(prev, &last) {
                    return Ok(finish(op, phi, psi, last, it));
                }
            }
            let _ = prev;
            Err(Error::numerical_with(
                format!("power iteration did not converge in {cap} steps"),
                last.residual,
            ))
        }
    }
}

fn finish(op: &DiscreteOperator, phi: Vec<f64>, psi: Vec<f64>, s: Snapshot, iterations: usize) -> EigenResult {
    EigenResult {
        value: s.value,
        discrete_value: s.value,
        lambda: op.lambda,
        phi,
        psi,
        x: op.x.clone(),
        n_cells: op.n_nodes(),
        iterations,
        residual: s.residual,
        bounds: s.bounds,
    }
}
