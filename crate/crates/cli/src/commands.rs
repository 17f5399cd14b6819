use rayon::prelude::*;
use serde::Serialize;

use coopfront::coefficients::Coefficient;
use coopfront::eigen::{dirichlet_sweep, k_curve, k_of_lambda};
use coopfront::ode::{analyze, equilibrium, integrate, HomParams, OdeAnalysis};
use coopfront::pde::{measure_speed, simulate, stationary_profile, SpeedMeasurement};
use coopfront::speeds::{
    hair_trigger_check, homogenized_speed, k_minimum, spreading_speeds, HairTriggerReport, SpeedReport,
};
use coopfront::{CoefficientSet, CoefficientSpec, Error, GridSpec, HomogenizedSet};

use crate::config::*;
use crate::output::{json, num, opt, snapshots_csv, Artifact, Table};
use crate::{CliError, Command};

/// Runs `command` on the raw config text and returns the files to write.
/// Nothing is written here, so a failure leaves no partial output behind.
pub fn run(command: Command, raw: &str, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let name = command.name();
    match command {
        Command::Eigen => eigen(parse(raw, name)?, hash),
        Command::Dirichlet => dirichlet(parse(raw, name)?, hash),
        Command::Speed => speed(parse(raw, name)?, hash),
        Command::Ode => ode(parse(raw, name)?, hash),
        Command::Simulate => simulate_cmd(parse(raw, name)?, hash),
        Command::Stationary => stationary(parse(raw, name)?, hash),
        Command::Homogenize => homogenize(parse(raw, name)?, hash),
        Command::Sweep => sweep(parse(raw, name)?, hash),
    }
}

fn artifact(suffix: impl Into<String>, contents: String) -> Artifact {
    Artifact {
        suffix: suffix.into(),
        contents,
    }
}

#[derive(Serialize)]
struct ProfileEntry {
    lambda: f64,
    k: f64,
    file: String,
}

#[derive(Serialize)]
struct EigenReport {
    rows: usize,
    max_residual: f64,
    profiles: Vec<ProfileEntry>,
}

fn eigen(cfg: EigenConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let lambdas = cfg.lambdas.points()?;
    cfg.grid.validate()?;
    let curve = k_curve(&cfg.coefficients, &lambdas, cfg.grid)?;
    let mut table = Table::new(&["lambda", "k", "discrete_k", "residual", "n_cells"]);
    for r in &curve {
        table.push(vec![
            num(r.lambda),
            num(r.value),
            num(r.discrete_value),
            num(r.residual),
            r.n_cells.to_string(),
        ]);
    }
    let mut files = vec![artifact("k.csv", table.render(hash)?)];
    let mut profiles = Vec::new();
    for (i, &l) in cfg.profiles.iter().enumerate() {
        let r = k_of_lambda(&cfg.coefficients, l, cfg.grid)?;
        let mut t = Table::new(&["x", "phi", "psi"]);
        for j in 0..r.x.len() {
            t.push_nums(&[r.x[j], r.phi[j], r.psi[j]]);
        }
        let suffix = format!("profile_{i}.csv");
        files.push(artifact(suffix.clone(), t.render(hash)?));
        profiles.push(ProfileEntry {
            lambda: l,
            k: r.value,
            file: suffix,
        });
    }
    let report = EigenReport {
        rows: curve.len(),
        max_residual: curve.iter().map(|r| r.residual).fold(0.0, f64::max),
        profiles,
    };
    files.push(artifact("eigen.json", json(hash, &report)?));
    Ok(files)
}

#[derive(Serialize)]
struct DirichletReport {
    radii: Vec<f64>,
    values: Vec<f64>,
    strictly_increasing: bool,
    k_min: f64,
    argmin_k: f64,
    /// `min k − λ₁^R` at the largest radius.
    gap_at_largest: f64,
}

fn dirichlet(cfg: DirichletConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let set = &cfg.coefficients;
    let radii = cfg
        .radii
        .clone()
        .unwrap_or_else(|| (0..7).map(|j| set.period() * f64::from(1u32 << j)).collect());
    if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(CliError::Config("radii must be positive and finite".into()));
    }
    let sweep = dirichlet_sweep(set, &radii, cfg.cells_per_period)?;
    let (k_min, argmin_k) = k_minimum(set, cfg.grid)?;
    let mut table = Table::new(&["R", "lambda1R", "n_nodes"]);
    for (r, e) in &sweep {
        table.push(vec![num(*r), num(e.value), e.n_cells.to_string()]);
    }
    let values: Vec<f64> = sweep.iter().map(|(_, e)| e.value).collect();
    let report = DirichletReport {
        strictly_increasing: values.windows(2).all(|w| w[1] > w[0]),
        gap_at_largest: k_min - values[values.len() - 1],
        radii,
        values,
        k_min,
        argmin_k,
    };
    Ok(vec![
        artifact("dirichlet.csv", table.render(hash)?),
        artifact("dirichlet.json", json(hash, &report)?),
    ])
}

#[derive(Serialize)]
struct SpeedOutput {
    speeds: SpeedReport,
    hair_trigger_check: Option<HairTriggerReport>,
    homogenized_speed: Option<f64>,
}

fn speed(cfg: SpeedConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let set = &cfg.coefficients;
    let lambdas = cfg.curve.points()?;
    let speeds = spreading_speeds(set, cfg.grid)?;
    let curve = k_curve(set, &lambdas, cfg.grid)?;
    let mut table = Table::new(&["lambda", "k", "k_over_lambda"]);
    for r in &curve {
        let ratio = (r.lambda != 0.0).then(|| r.value / r.lambda);
        table.push(vec![num(r.lambda), num(r.value), opt(ratio)]);
    }
    let hair_trigger_check = if cfg.hair_trigger {
        Some(hair_trigger_check(set, cfg.grid, cfg.cells_per_period)?)
    } else {
        None
    };
    let out = SpeedOutput {
        speeds,
        hair_trigger_check,
        homogenized_speed: set.homogenize().and_then(|h| homogenized_speed(&h)).ok(),
    };
    Ok(vec![
        artifact("speed.json", json(hash, &out)?),
        artifact("k.csv", table.render(hash)?),
    ])
}

#[derive(Serialize)]
struct OdeReport {
    analysis: OdeAnalysis,
    target: (f64, f64),
    final_state: (f64, f64, f64),
    converged_at: Option<f64>,
    lyapunov_nonincreasing: Option<bool>,
    clipped_steps: usize,
}

fn ode(cfg: OdeConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let traj = integrate(&cfg.params, cfg.u0, cfg.v0, cfg.t_end, cfg.dt, cfg.record_every)?;
    let mut table = Table::new(&["t", "u", "v", "lyapunov"]);
    for s in &traj.samples {
        table.push(vec![num(s.t), num(s.u), num(s.v), opt(s.lyapunov)]);
    }
    let last = traj.last();
    let report = OdeReport {
        analysis: analyze(&cfg.params)?,
        target: traj.target,
        final_state: (last.t, last.u, last.v),
        converged_at: traj.converged_at,
        lyapunov_nonincreasing: traj.lyapunov_nonincreasing,
        clipped_steps: traj.clipped_steps,
    };
    Ok(vec![
        artifact("ode.json", json(hash, &report)?),
        artifact("trajectory.csv", table.render(hash)?),
    ])
}

#[derive(Serialize)]
struct TheorySpeeds {
    c_right: f64,
    c_left: f64,
}

#[derive(Serialize)]
struct SimulateReport {
    final_time: f64,
    theta: f64,
    bound: f64,
    mass_max: f64,
    substeps: usize,
    clipped: usize,
    max_clip: f64,
    /// Time after which front data are untrusted because a front reached the
    /// outer tenth of the domain.
    boundary_warning: Option<f64>,
    measured: Option<SpeedMeasurement>,
    fit_note: Option<String>,
    theory: Option<TheorySpeeds>,
}

fn simulate_cmd(cfg: SimulateConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let set = &cfg.coefficients;
    let run = simulate(set, &cfg.domain, &cfg.initial, &cfg.options)?;
    let (measured, fit_note) = match measure_speed(&run.trace, cfg.fit_window) {
        Ok(m) => (Some(m), None),
        Err(e @ Error::Precondition(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    let theory = match spreading_speeds(set, cfg.grid) {
        Ok(r) => Some(TheorySpeeds {
            c_right: r.c_right,
            c_left: r.c_left,
        }),
        Err(Error::Precondition(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let mut trace = Table::new(&["t", "x_right", "x_left"]);
    for s in &run.trace.samples {
        trace.push(vec![num(s.t), opt(s.x_right), opt(s.x_left)]);
    }
    let report = SimulateReport {
        final_time: run.state.t,
        theta: run.trace.theta,
        bound: run.bound,
        mass_max: run.state.mass_max,
        substeps: run.substeps,
        clipped: run.state.clipped,
        max_clip: run.state.max_clip,
        boundary_warning: run.trace.boundary_warning,
        measured,
        fit_note,
        theory,
    };
    let mut files = vec![
        artifact("simulate.json", json(hash, &report)?),
        artifact("trace.csv", trace.render(hash)?),
    ];
    if !run.snapshots.is_empty() {
        let blocks = run.snapshots.iter().map(|s| (s.t, &s.u[..], &s.v[..]));
        files.push(artifact("snapshots.csv", snapshots_csv(hash, &run.x, blocks)?));
    }
    Ok(files)
}

#[derive(Serialize)]
struct StationaryReport {
    residual: f64,
    newton_steps: usize,
    time: f64,
    u_range: (f64, f64),
    v_range: (f64, f64),
    homogenized_equilibrium: Option<(f64, f64)>,
    sup_distance_to_homogenized: Option<f64>,
}

fn range(w: &[f64]) -> (f64, f64) {
    w.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)))
}

fn homogenized_equilibrium(set: &CoefficientSet) -> Option<(f64, f64)> {
    let h = set.homogenize().ok()?;
    equilibrium(&HomParams::from_homogenized(&h).ok()?).ok()
}

fn stationary(cfg: StationaryConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let prof = stationary_profile(&cfg.coefficients, &cfg.options)?;
    let mut table = Table::new(&["x", "u", "v"]);
    for i in 0..prof.x.len() {
        table.push_nums(&[prof.x[i], prof.u[i], prof.v[i]]);
    }
    let eq = homogenized_equilibrium(&cfg.coefficients);
    let report = StationaryReport {
        residual: prof.residual,
        newton_steps: prof.newton_steps,
        time: prof.time,
        u_range: range(&prof.u),
        v_range: range(&prof.v),
        homogenized_equilibrium: eq,
        sup_distance_to_homogenized: eq.map(|(a, b)| prof.sup_distance(a, b)),
    };
    Ok(vec![
        artifact("stationary.csv", table.render(hash)?),
        artifact("stationary.json", json(hash, &report)?),
    ])
}

#[derive(Serialize)]
struct HomogenizeReport {
    homogenized: HomogenizedSet,
    analysis: OdeAnalysis,
    speed: Option<f64>,
}

fn homogenize(cfg: HomogenizeConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let h = cfg.coefficients.homogenize()?;
    let analysis = analyze(&HomParams::from_homogenized(&h)?)?;
    let speed = (analysis.lambda_a > 0.0).then(|| homogenized_speed(&h)).transpose()?;
    let report = HomogenizeReport {
        homogenized: h,
        analysis,
        speed,
    };
    Ok(vec![artifact("homogenize.json", json(hash, &report)?)])
}

enum SweepParameter {
    Epsilon,
    Coefficient(Coefficient),
}

impl SweepParameter {
    fn parse(name: &str) -> Result<Self, CliError> {
        if name == "epsilon" {
            return Ok(SweepParameter::Epsilon);
        }
        Coefficient::ALL
            .iter()
            .find(|c| c.name() == name)
            .map(|&c| SweepParameter::Coefficient(c))
            .ok_or_else(|| {
                CliError::Config(format!(
                    "unknown sweep parameter {name:?}; use \"epsilon\" or a coefficient name"
                ))
            })
    }

    fn apply(&self, set: &CoefficientSet, value: f64) -> coopfront::Result<CoefficientSet> {
        match *self {
            SweepParameter::Epsilon => set.rescale_epsilon(value),
            SweepParameter::Coefficient(c) => set.with(c, CoefficientSpec::constant(value)),
        }
    }
}

struct SweepRow {
    value: f64,
    c_right: Option<f64>,
    c_left: Option<f64>,
    target: Option<f64>,
    error: Option<String>,
}

fn sweep_row(param: &SweepParameter, base: &CoefficientSet, grid: GridSpec, value: f64) -> SweepRow {
    let mut row = SweepRow {
        value,
        c_right: None,
        c_left: None,
        target: None,
        error: None,
    };
    let set = match param.apply(base, value) {
        Ok(s) => s,
        Err(e) => {
            row.error = Some(e.to_string());
            return row;
        }
    };
    match set.homogenize().and_then(|h| homogenized_speed(&h)) {
        Ok(t) => row.target = Some(t),
        Err(e) => row.error = Some(e.to_string()),
    }
    match spreading_speeds(&set, grid) {
        Ok(r) => {
            row.c_right = Some(r.c_right);
            row.c_left = Some(r.c_left);
        }
        Err(e) => row.error = Some(e.to_string()),
    }
    row
}

fn sweep(cfg: SweepConfig, hash: &str) -> Result<Vec<Artifact>, CliError> {
    let param = SweepParameter::parse(&cfg.parameter)?;
    if cfg.values.is_empty() {
        return Err(CliError::Config("sweep needs at least one value".into()));
    }
    cfg.grid.validate()?;
    let rows: Vec<SweepRow> = cfg
        .values
        .par_iter()
        .map(|&v| sweep_row(&param, &cfg.coefficients, cfg.grid, v))
        .collect();
    let mut table = Table::new(&[
        &cfg.parameter,
        "c_right",
        "c_left",
        "homogenized_speed",
        "gap_right",
        "gap_left",
        "error",
    ]);
    for r in &rows {
        let gap = |c: Option<f64>| c.zip(r.target).map(|(c, t)| (c - t).abs());
        table.push(vec![
            num(r.value),
            opt(r.c_right),
            opt(r.c_left),
            opt(r.target),
            opt(gap(r.c_right)),
            opt(gap(r.c_left)),
            r.error.clone().unwrap_or_default(),
        ]);
    }
    Ok(vec![artifact("sweep.csv", table.render(hash)?)])
}
