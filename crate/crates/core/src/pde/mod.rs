//! Nonlinear simulation on a truncated line.
//!
//! Cell-centered finite volumes in space; each time step applies the reaction
//! and mutation terms explicitly and then diffusion by backward Euler.

mod front;
mod initial;
mod stationary;

pub use front::{
    front_positions, hump_height, is_monotone_front, measure_speed, FrontSample, FrontTrace, SideSpeed,
    SpeedMeasurement,
};
pub use initial::InitialData;
pub use stationary::{
    convergence_behind_front, stationary_profile, ConvergenceHistory, ConvergenceOptions, ConvergenceStatus,
    StationaryOptions, StationaryProfile,
};

use serde::{Deserialize, Serialize};

use crate::coefficients::{Coefficient, CoefficientSet};
use crate::error::{Error, Result};
use crate::linalg::Tridiagonal;

pub const MIN_POINTS: usize = 256;
/// Minimum domain width in periods.
pub const MIN_PERIODS: f64 = 20.0;
/// Largest allowed `dt·ℓ`, with `ℓ` the reaction Lipschitz bound.
pub const REACTION_CFL: f64 = 0.25;
/// Negative values below this magnitude are clipped silently.
pub const CLIP_TOL: f64 = 1e-10;
/// Slack on the `sup(u + v)` bound before it counts as a breach.
pub const BOUND_SLACK: f64 = 1e-8;
/// Fronts inside this fraction of the domain width from an edge are untrusted.
pub const BOUNDARY_MARGIN: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DomainBoundary {
    /// Zero flux.
    Neumann,
    /// Zero values on the domain edges.
    DirichletZero,
}

fn default_boundary() -> DomainBoundary {
    DomainBoundary::Neumann
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub n_points: usize,
    #[serde(default = "default_boundary")]
    pub boundary: DomainBoundary,
}

impl DomainSpec {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Self {
        DomainSpec {
            x_min,
            x_max,
            n_points,
            boundary: DomainBoundary::Neumann,
        }
    }

    pub fn with_boundary(mut self, boundary: DomainBoundary) -> Self {
        self.boundary = boundary;
        self
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn h(&self) -> f64 {
        self.width() / self.n_points as f64
    }

    /// Cell centers `x_min + (i + ½)h`.
    pub fn nodes(&self) -> Vec<f64> {
        let h = self.h();
        (0..self.n_points).map(|i| self.x_min + (i as f64 + 0.5) * h).collect()
    }

    pub fn validate(&self, period: f64) -> Result<()> {
        if !(self.x_min.is_finite() && self.x_max.is_finite() && self.x_max > self.x_min) {
            return Err(Error::Validation(format!(
                "domain needs finite x_min < x_max, got [{}, {}]",
                self.x_min, self.x_max
            )));
        }
        if self.width() < MIN_PERIODS * period * (1.0 - 1e-12) {
            return Err(Error::Validation(format!(
                "domain width {} is below {MIN_PERIODS} periods ({})",
                self.width(),
                MIN_PERIODS * period
            )));
        }
        if self.n_points < MIN_POINTS {
            return Err(Error::Validation(format!(
                "domain needs at least {MIN_POINTS} points, got {}",
                self.n_points
            )));
        }
        Ok(())
    }

    /// Reflection `x ↦ −x`.
    pub fn mirrored(&self) -> Self {
        DomainSpec {
            x_min: -self.x_max,
            x_max: -self.x_min,
            ..*self
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum MeshBoundary {
    Neumann,
    DirichletZero,
    Periodic,
}

/// Time-stamped fields with running diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FieldState {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
    /// Running maximum of `sup(u + v)`.
    pub mass_max: f64,
    /// Number of entries clipped from negative to zero so far.
    pub clipped: usize,
    /// Largest clipped magnitude so far.
    pub max_clip: f64,
}

impl FieldState {
    pub fn new(u: Vec<f64>, v: Vec<f64>) -> Self {
        let mass_max = sup_sum(&u, &v);
        FieldState {
            t: 0.0,
            u,
            v,
            mass_max,
            clipped: 0,
            max_clip: 0.0,
        }
    }

    pub fn sup_sum(&self) -> f64 {
        sup_sum(&self.u, &self.v)
    }

    pub fn sup_norm(&self) -> f64 {
        self.u.iter().chain(&self.v).fold(0.0f64, |a, &b| a.max(b.abs()))
    }
}

fn sup_sum(u: &[f64], v: &[f64]) -> f64 {
    u.iter().zip(v).fold(0.0f64, |a, (p, q)| a.max(p + q))
}

#[derive(Clone, Debug)]
struct Samples {
    r_u: Vec<f64>,
    r_v: Vec<f64>,
    kappa_u: Vec<f64>,
    kappa_v: Vec<f64>,
    mu_u: Vec<f64>,
    mu_v: Vec<f64>,
}

/// Advances the system on a fixed mesh with a fixed step.
#[derive(Clone, Debug)]
pub struct Simulator {
    x: Vec<f64>,
    h: f64,
    coef: Samples,
    dt: f64,
    substeps: usize,
    solver: Tridiagonal,
    bound: f64,
    state: FieldState,
    t0: f64,
    /// Substeps taken; time is `t0 + taken·dt/substeps` without accumulated rounding.
    taken: u64,
}

impl Simulator {
    /// Simulator on a validated domain with the given initial data.
    pub fn new(set: &CoefficientSet, domain: &DomainSpec, init: &InitialData, dt: f64, allow_above_bound: bool) -> Result<Self> {
        domain.validate(set.period())?;
        init.validate(set, allow_above_bound)?;
        let x = domain.nodes();
        let (u, v) = init.sample(set, &x);
        let boundary = match domain.boundary {
            DomainBoundary::Neumann => MeshBoundary::Neumann,
            DomainBoundary::DirichletZero => MeshBoundary::DirichletZero,
        };
        Self::on_mesh(set, x, domain.h(), boundary, FieldState::new(u, v), dt)
    }

    pub(crate) fn on_mesh(
        set: &CoefficientSet,
        x: Vec<f64>,
        h: f64,
        boundary: MeshBoundary,
        state: FieldState,
        dt: f64,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Validation(format!("time step must be positive, got {dt}")));
        }
        if state.u.len() != x.len() || state.v.len() != x.len() {
            return Err(Error::Contract("field lengths do not match the mesh".into()));
        }
        if state.u.iter().chain(&state.v).any(|w| !(*w >= 0.0 && w.is_finite())) {
            return Err(Error::Validation("initial fields must be finite and nonnegative".into()));
        }
        let sample = |c| set.sample(c, &x);
        let coef = Samples {
            r_u: sample(Coefficient::RU),
            r_v: sample(Coefficient::RV),
            kappa_u: sample(Coefficient::KappaU),
            kappa_v: sample(Coefficient::KappaV),
            mu_u: sample(Coefficient::MuU),
            mu_v: sample(Coefficient::MuV),
        };
        let bound = set.k_bar().max(state.sup_sum());
        let max_abs = |w: &[f64]| w.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
        let lipschitz = max_abs(&coef.r_u).max(max_abs(&coef.r_v))
            + max_abs(&coef.mu_u).max(max_abs(&coef.mu_v))
            + 2.0 * max_abs(&coef.kappa_u).max(max_abs(&coef.kappa_v)) * bound;
        let mut substeps = 1usize;
        while dt / substeps as f64 * lipschitz > REACTION_CFL {
            substeps *= 2;
        }
        if substeps > 1 {
            log::info!("time step {dt} split into {substeps} substeps (reaction bound {lipschitz})");
        }
        let solver = diffusion_solver(set, &x, h, boundary, dt / substeps as f64)?;
        Ok(Simulator {
            x,
            h,
            coef,
            dt,
            substeps,
            solver,
            bound,
            t0: state.t,
            state,
            taken: 0,
        })
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Internal substeps per step after the reaction-bound halving.
    pub fn substeps(&self) -> usize {
        self.substeps
    }

    /// `max(K̄, sup(u₀ + v₀))`, which `sup(u + v)` may never exceed.
    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn state(&self) -> &FieldState {
        &self.state
    }

    pub fn into_state(self) -> FieldState {
        self.state
    }

    /// Advance by one step `dt`.
    pub fn step(&mut self) -> Result<()> {
        let dts = self.dt / self.substeps as f64;
        for _ in 0..self.substeps {
            self.react(dts);
            self.solver.solve_in_place(&mut self.state.u);
            self.solver.solve_in_place(&mut self.state.v);
            self.clip();
            self.taken += 1;
            self.state.t = self.t0 + self.taken as f64 * dts;
        }
        let s = self.state.sup_sum();
        if !s.is_finite() {
            return Err(Error::numerical(format!("non-finite field at t = {}", self.state.t)));
        }
        self.state.mass_max = self.state.mass_max.max(s);
        if s > self.bound + BOUND_SLACK {
            return Err(Error::InvariantBreach(format!(
                "sup(u + v) = {s} exceeds max(K̄, sup(u0 + v0)) = {} at t = {}",
                self.bound, self.state.t
            )));
        }
        Ok(())
    }

    fn react(&mut self, dt: f64) {
        let c = &self.coef;
        let st = &mut self.state;
        for i in 0..self.x.len() {
            let (u, v) = (st.u[i], st.v[i]);
            let s = u + v;
            st.u[i] = u + dt * ((c.r_u[i] - c.kappa_u[i] * s - c.mu_u[i]) * u + c.mu_v[i] * v);
            st.v[i] = v + dt * ((c.r_v[i] - c.kappa_v[i] * s - c.mu_v[i]) * v + c.mu_u[i] * u);
        }
    }

    fn clip(&mut self) {
        let st = &mut self.state;
        for w in st.u.iter_mut().chain(st.v.iter_mut()) {
            if *w < 0.0 {
                let m = -*w;
                if m > CLIP_TOL {
                    log::warn!("clipped negative value {} at t = {}", *w, st.t);
                }
                st.max_clip = st.max_clip.max(m);
                st.clipped += 1;
                *w = 0.0;
            }
        }
    }
}

fn diffusion_solver(set: &CoefficientSet, x: &[f64], h: f64, boundary: MeshBoundary, dt: f64) -> Result<Tridiagonal> {
    let n = x.len();
    let scale = dt / (h * h);
    let mut lower = vec![0.0; n];
    let mut upper = vec![0.0; n];
    let mut diag = vec![1.0; n];
    for i in 0..n {
        let west = scale * set.eval(Coefficient::Sigma, x[i] - 0.5 * h);
        let east = scale * set.eval(Coefficient::Sigma, x[i] + 0.5 * h);
        let first = i == 0;
        let last = i + 1 == n;
        match (boundary, first) {
            (MeshBoundary::Neumann, true) => {}
            (MeshBoundary::DirichletZero, true) => diag[i] += 2.0 * west,
            _ => {
                diag[i] += west;
                lower[i] = -west;
            }
        }
        match (boundary, last) {
            (MeshBoundary::Neumann, true) => {}
            (MeshBoundary::DirichletZero, true) => diag[i] += 2.0 * east,
            _ => {
                diag[i] += east;
                upper[i] = -east;
            }
        }
    }
    Tridiagonal::new(&lower, &diag, &upper, boundary == MeshBoundary::Periodic)
}

/// One step of `dt` from `state`, as a standalone function.
pub fn step(set: &CoefficientSet, domain: &DomainSpec, state: &FieldState, dt: f64) -> Result<FieldState> {
    domain.validate(set.period())?;
    let boundary = match domain.boundary {
        DomainBoundary::Neumann => MeshBoundary::Neumann,
        DomainBoundary::DirichletZero => MeshBoundary::DirichletZero,
    };
    let mut sim = Simulator::on_mesh(set, domain.nodes(), domain.h(), boundary, state.clone(), dt)?;
    sim.step()?;
    Ok(sim.into_state())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOptions {
    pub t_end: f64,
    pub dt: f64,
    /// Interval between front-trace samples.
    pub record_every: f64,
    /// Interval between stored snapshots; none when absent.
    #[serde(default)]
    pub snapshot_every: Option<f64>,
    /// Front threshold; defaults to `0.01·K̄`.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default)]
    pub allow_amplitude_above_bound: bool,
}

impl SimOptions {
    pub fn new(t_end: f64, dt: f64, record_every: f64) -> Self {
        SimOptions {
            t_end,
            dt,
            record_every,
            snapshot_every: None,
            theta: None,
            allow_amplitude_above_bound: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |v: f64| v > 0.0 && v.is_finite();
        if !(ok(self.t_end) && ok(self.dt) && ok(self.record_every)) {
            return Err(Error::Validation(
                "t_end, dt and record_every must be positive and finite".into(),
            ));
        }
        if self.snapshot_every.is_some_and(|s| !ok(s)) || self.theta.is_some_and(|s| !ok(s)) {
            return Err(Error::Validation(
                "snapshot_every and theta must be positive when given".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Simulation {
    pub x: Vec<f64>,
    pub state: FieldState,
    pub trace: FrontTrace,
    pub snapshots: Vec<Snapshot>,
    /// `max(K̄, sup(u₀ + v₀))`.
    pub bound: f64,
    pub substeps: usize,
}

/// Runs to `t_end`, sampling the front trace every `record_every`.
pub fn simulate(set: &CoefficientSet, domain: &DomainSpec, init: &InitialData, opts: &SimOptions) -> Result<Simulation> {
    opts.validate()?;
    let mut sim = Simulator::new(set, domain, init, opts.dt, opts.allow_amplitude_above_bound)?;
    let theta = opts.theta.unwrap_or(0.01 * set.k_bar());
    let mut trace = FrontTrace::new(theta, domain);
    let mut snapshots = Vec::new();
    let steps = (opts.t_end / opts.dt).round().max(1.0) as usize;
    let record_stride = ((opts.record_every / opts.dt).round() as usize).max(1);
    let snapshot_stride = opts.snapshot_every.map(|s| ((s / opts.dt).round() as usize).max(1));

    let take_snapshot = |sim: &Simulator, snaps: &mut Vec<Snapshot>| {
        snaps.push(Snapshot {
            t: sim.state().t,
            u: sim.state().u.clone(),
            v: sim.state().v.clone(),
        })
    };
    trace.record(sim.x(), sim.state());
    if snapshot_stride.is_some() {
        take_snapshot(&sim, &mut snapshots);
    }
    for k in 1..=steps {
        sim.step()?;
        if k % record_stride == 0 || k == steps {
            trace.record(sim.x(), sim.state());
        }
        if snapshot_stride.is_some_and(|s| k % s == 0 || k == steps) {
            take_snapshot(&sim, &mut snapshots);
        }
    }
    if let Some(t) = trace.boundary_warning {
        log::warn!("front entered the outer {BOUNDARY_MARGIN} of the domain at t = {t}; later samples are untrusted");
    }
    Ok(Simulation {
        x: sim.x().to_vec(),
        bound: sim.bound(),
        substeps: sim.substeps(),
        state: sim.into_state(),
        trace,
        snapshots,
    })
}
