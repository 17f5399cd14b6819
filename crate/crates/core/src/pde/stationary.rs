use serde::{Deserialize, Serialize};

use super::{simulate, DomainSpec, FieldState, InitialData, MeshBoundary, SimOptions, Simulator};
use crate::coefficients::{Coefficient, CoefficientSet};
use crate::eigen::k_of_lambda;
use crate::eigen::GridSpec;
use crate::error::{Error, Result};
use crate::linalg::{Block, BlockTridiagonal, BlockVec};

/// Residual at which time stepping hands over to Newton polishing.
const NEWTON_HANDOVER: f64 = 1e-5;
const MAX_NEWTON: usize = 30;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StationaryOptions {
    pub cells_per_period: usize,
    /// Number of periods in the computational cell.
    pub periods: usize,
    /// Target for `‖∂_t(u, v)‖∞` of the semi-discrete system.
    pub tol: f64,
    pub dt: f64,
    pub t_max: f64,
}

impl Default for StationaryOptions {
    fn default() -> Self {
        StationaryOptions {
            cells_per_period: 256,
            periods: 1,
            tol: 1e-10,
            dt: 0.05,
            t_max: 1e4,
        }
    }
}

/// A periodic stationary pair sampled at `x_i = i·h` on `[0, periods·L)`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StationaryProfile {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Length of the computational cell.
    pub length: f64,
    /// Final `‖∂_t(u, v)‖∞`; at most `max(tol, 16·ε·max(σ)/h²·K̄)`.
    pub residual: f64,
    /// Simulated time before the Newton hand-over.
    pub time: f64,
    pub newton_steps: usize,
}

impl StationaryProfile {
    /// Periodic linear interpolation.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let n = self.x.len();
        let s = x.rem_euclid(self.length) / self.length * n as f64;
        let i = (s.floor() as usize).min(n - 1);
        let f = s - i as f64;
        let j = (i + 1) % n;
        (
            (1.0 - f) * self.u[i] + f * self.u[j],
            (1.0 - f) * self.v[i] + f * self.v[j],
        )
    }

    /// `max_x max(|u − a|, |v − b|)`.
    pub fn sup_distance(&self, a: f64, b: f64) -> f64 {
        self.u
            .iter()
            .zip(&self.v)
            .fold(0.0f64, |m, (p, q)| m.max((p - a).abs()).max((q - b).abs()))
    }
}

/// Positive periodic stationary solution, reached by time stepping from
/// `(K̄/2, K̄/2)` and then polished by Newton's method on the semi-discrete
/// steady-state equations.
pub fn stationary_profile(set: &CoefficientSet, opts: &StationaryOptions) -> Result<StationaryProfile> {
    if opts.cells_per_period < 16 || opts.periods == 0 {
        return Err(Error::Validation("need at least 16 cells per period and one period".into()));
    }
    if !(opts.tol > 0.0 && opts.dt > 0.0 && opts.t_max > 0.0) {
        return Err(Error::Validation("tol, dt and t_max must be positive".into()));
    }
    let k0 = k_of_lambda(set, 0.0, GridSpec::periodic(64))?.value;
    if k0 <= 0.0 {
        return Err(Error::Precondition(format!(
            "no positive stationary state: periodic principal eigenvalue k(0) = {k0} is not positive"
        )));
    }
    let n = opts.cells_per_period * opts.periods;
    let length = set.period() * opts.periods as f64;
    let h = length / n as f64;
    let x: Vec<f64> = (0..n).map(|i| i as f64 * h).collect();
    let half = 0.5 * set.k_bar();
    let state = FieldState::new(vec![half; n], vec![half; n]);
    let mut sim = Simulator::on_mesh(set, x.clone(), h, MeshBoundary::Periodic, state, opts.dt)?;
    let sys = SteadySystem::new(set, &x, h);
    let handover = NEWTON_HANDOVER.max(opts.tol);
    let mut residual = sys.residual_norm(&sim.state().u, &sim.state().v);
    while residual > handover {
        if sim.state().t >= opts.t_max {
            return Err(Error::numerical_with(
                format!("stationary iteration did not settle by t = {}", opts.t_max),
                residual,
            ));
        }
        sim.step()?;
        residual = sys.residual_norm(&sim.state().u, &sim.state().v);
    }
    let time = sim.state().t;
    let FieldState { mut u, mut v, .. } = sim.into_state();
    // Rounding in the flux differences alone leaves a residual of order ε·σ/h²·sup(u, v).
    let floor = 16.0 * f64::EPSILON * sys.flux_norm() * set.k_bar();
    let tol = opts.tol.max(floor);
    if tol > opts.tol {
        log::info!("stationary tolerance raised from {} to the rounding floor {tol:.3e}", opts.tol);
    }
    let mut newton_steps = 0;
    while residual > tol {
        if newton_steps == MAX_NEWTON {
            return Err(Error::numerical_with("Newton polish of the stationary state stalled", residual));
        }
        let (nu, nv) = sys.newton_step(&u, &v)?;
        let next = sys.residual_norm(&nu, &nv);
        newton_steps += 1;
        if !(next < residual) && next > tol {
            return Err(Error::numerical_with("Newton polish of the stationary state diverged", residual));
        }
        u = nu;
        v = nv;
        residual = next;
    }
    if u.iter().chain(&v).any(|&w| w <= 0.0) {
        return Err(Error::numerical("stationary state lost positivity"));
    }
    Ok(StationaryProfile {
        x,
        u,
        v,
        length,
        residual,
        time,
        newton_steps,
    })
}

/// Semi-discrete right-hand side on a periodic mesh with flux differences.
struct SteadySystem {
    west: Vec<f64>,
    east: Vec<f64>,
    r: [Vec<f64>; 2],
    kappa: [Vec<f64>; 2],
    mu: [Vec<f64>; 2],
}

impl SteadySystem {
    fn new(set: &CoefficientSet, x: &[f64], h: f64) -> Self {
        let face = |s: f64| x.iter().map(|&p| set.eval(Coefficient::Sigma, p + s * h) / (h * h)).collect();
        let sample = |c| set.sample(c, x);
        SteadySystem {
            west: face(-0.5),
            east: face(0.5),
            r: [sample(Coefficient::RU), sample(Coefficient::RV)],
            kappa: [sample(Coefficient::KappaU), sample(Coefficient::KappaV)],
            mu: [sample(Coefficient::MuU), sample(Coefficient::MuV)],
        }
    }

    fn rhs(&self, u: &[f64], v: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = u.len();
        let mut fu = vec![0.0; n];
        let mut fv = vec![0.0; n];
        for i in 0..n {
            let l = (i + n - 1) % n;
            let r = (i + 1) % n;
            let s = u[i] + v[i];
            fu[i] = self.east[i] * (u[r] - u[i]) - self.west[i] * (u[i] - u[l])
                + (self.r[0][i] - self.kappa[0][i] * s - self.mu[0][i]) * u[i]
                + self.mu[1][i] * v[i];
            fv[i] = self.east[i] * (v[r] - v[i]) - self.west[i] * (v[i] - v[l])
                + (self.r[1][i] - self.kappa[1][i] * s - self.mu[1][i]) * v[i]
                + self.mu[0][i] * u[i];
        }
        (fu, fv)
    }

    fn flux_norm(&self) -> f64 {
        self.west.iter().zip(&self.east).fold(0.0f64, |m, (a, b)| m.max(a + b))
    }

    fn residual_norm(&self, u: &[f64], v: &[f64]) -> f64 {
        let (fu, fv) = self.rhs(u, v);
        fu.iter().chain(&fv).fold(0.0f64, |m, w| m.max(w.abs()))
    }

    fn newton_step(&self, u: &[f64], v: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        let n = u.len();
        let (fu, fv) = self.rhs(u, v);
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut diag = Vec::with_capacity(n);
        for i in 0..n {
            let s = u[i] + v[i];
            let ku = self.kappa[0][i];
            let kv = self.kappa[1][i];
            let flux = self.west[i] + self.east[i];
            diag.push(Block::<2>::new(
                -flux + self.r[0][i] - ku * s - self.mu[0][i] - ku * u[i],
                -ku * u[i] + self.mu[1][i],
                -kv * v[i] + self.mu[0][i],
                -flux + self.r[1][i] - kv * s - self.mu[1][i] - kv * v[i],
            ));
            lower.push(Block::<2>::identity() * self.west[i]);
            upper.push(Block::<2>::identity() * self.east[i]);
        }
        let jac = BlockTridiagonal {
            lower,
            diag,
            upper,
            cyclic: true,
        };
        let rhs: Vec<BlockVec<2>> = (0..n).map(|i| BlockVec::<2>::new(-fu[i], -fv[i])).collect();
        let delta = jac.factor()?.solve(&rhs);
        if delta.iter().any(|d| !d.iter().all(|w| w.is_finite())) {
            return Err(Error::numerical("singular Jacobian in the stationary Newton step"));
        }
        Ok((
            u.iter().zip(&delta).map(|(w, d)| w + d[0]).collect(),
            v.iter().zip(&delta).map(|(w, d)| w + d[1]).collect(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergenceOptions {
    pub sim: SimOptions,
    /// Half-width growth rate of the probe window `|x| ≤ c_probe·t`.
    pub c_probe: f64,
    /// Target as a fraction of `K̄`.
    #[serde(default = "default_target_fraction")]
    pub target_fraction: f64,
    #[serde(default)]
    pub stationary: StationaryOptions,
}

fn default_target_fraction() -> f64 {
    0.02
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceStatus {
    Converged,
    NotReached,
    /// The probe window or a front left the trusted part of the domain.
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergenceHistory {
    pub times: Vec<f64>,
    pub distances: Vec<f64>,
    pub target: f64,
    pub status: ConvergenceStatus,
    pub profile: StationaryProfile,
}

impl ConvergenceHistory {
    pub fn final_distance(&self) -> Option<f64> {
        self.distances.last().copied()
    }
}

/// Sup-distance to the stationary profile over `|x| ≤ c_probe·t` at every
/// snapshot of a simulation.
pub fn convergence_behind_front(
    set: &CoefficientSet,
    domain: &DomainSpec,
    init: &InitialData,
    opts: &ConvergenceOptions,
) -> Result<ConvergenceHistory> {
    if !(opts.c_probe > 0.0 && opts.c_probe.is_finite()) {
        return Err(Error::Validation(format!("c_probe must be positive, got {}", opts.c_probe)));
    }
    let profile = stationary_profile(set, &opts.stationary)?;
    let mut sim_opts = opts.sim.clone();
    sim_opts.snapshot_every.get_or_insert(sim_opts.record_every);
    let run = simulate(set, domain, init, &sim_opts)?;
    let target = opts.target_fraction * set.k_bar();
    let reference: Vec<(f64, f64)> = run.x.iter().map(|&p| profile.eval(p)).collect();
    let mut times = Vec::new();
    let mut distances = Vec::new();
    let mut window_exit = false;
    let margin = super::BOUNDARY_MARGIN * domain.width();
    for snap in &run.snapshots {
        let reach = opts.c_probe * snap.t;
        if -reach < domain.x_min + margin || reach > domain.x_max - margin {
            window_exit = true;
            break;
        }
        let d = run
            .x
            .iter()
            .enumerate()
            .filter(|(_, p)| p.abs() <= reach)
            .fold(None, |m: Option<f64>, (i, _)| {
                let (a, b) = reference[i];
                let e = (snap.u[i] - a).abs().max((snap.v[i] - b).abs());
                Some(m.map_or(e, |m| m.max(e)))
            });
        if let Some(d) = d {
            times.push(snap.t);
            distances.push(d);
        }
    }
    let exited = window_exit || run.trace.boundary_warning.is_some();
    let reached = distances.last().is_some_and(|&d| d < target);
    let status = match (reached, exited) {
        (true, _) => ConvergenceStatus::Converged,
        (false, true) => ConvergenceStatus::Inconclusive,
        (false, false) => ConvergenceStatus::NotReached,
    };
    Ok(ConvergenceHistory {
        times,
        distances,
        target,
        status,
        profile,
    })
}
