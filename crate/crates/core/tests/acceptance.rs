//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use coopfront::eigen::{dirichlet_sweep, k_curve, k_of_lambda};
use coopfront::ode::{analyze, equilibrium, integrate, jacobian, lambda_a, HomParams};
use coopfront::pde::{
    hump_height, is_monotone_front, measure_speed, simulate, stationary_profile, FieldState, SimOptions,
    StationaryOptions, Simulator,
};
use coopfront::speeds::{homogenized_speed, k_minimum, spreading_speeds};
use coopfront::{DomainSpec, GridSpec, InitialData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: coopfront::Error) -> String {
    format!("error: {e}")
}

fn grid() -> GridSpec {
    GridSpec::periodic(64)
}

fn homogeneous_speed() -> Outcome {
    let set = common::symmetric();
    let report = spreading_speeds(&set, grid()).map_err(err)?;
    let theory_ok = (report.c_right - 2.0).abs() <= 1e-4 && (report.c_left - 2.0).abs() <= 1e-4;

    let domain = DomainSpec::new(-50.0, 250.0, 4096);
    let init = InitialData::RightFrontLike {
        amplitude: 0.5,
        k1: -40.0,
        k2: -39.0,
    };
    let run = simulate(&set, &domain, &init, &SimOptions::new(100.0, 0.02, 0.5)).map_err(err)?;
    let fit = measure_speed(&run.trace, 0.5).map_err(err)?;
    let right = fit.right.ok_or("no right front in the fitting window")?;
    let sim_ok = right.reliable && (right.speed - 2.0).abs() <= 0.05 * 2.0 && run.trace.boundary_warning.is_none();
    check(
        theory_ok && sim_ok,
        format!(
            "speeds module c_R = {:.8}, c_L = {:.8}; simulated c_R = {:.4} (r² = {:.6})",
            report.c_right, report.c_left, right.speed, right.r_squared
        ),
    )
}

fn eigencurve_identity() -> Outcome {
    let set = common::symmetric();
    let lambdas: Vec<f64> = (-3..=3).map(f64::from).collect();
    let curve = k_curve(&set, &lambdas, grid()).map_err(err)?;
    let worst = curve
        .iter()
        .map(|e| (e.value - (e.lambda * e.lambda + 1.0)).abs())
        .fold(0.0f64, f64::max);
    check(worst <= 1e-7, format!("max |k(λ) − (σλ² + λ_A)| = {worst:.3e} over λ = −3..3"))
}

fn quadratic_bounds() -> Outcome {
    let lambdas: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.25).collect();
    let mut worst_gap = f64::INFINITY;
    let mut worst_convexity = f64::INFINITY;
    for seed in 0..5 {
        let set = common::random_periodic(seed);
        let e = *set.extrema();
        let curve = k_curve(&set, &lambdas, grid()).map_err(err)?;
        for r in &curve {
            let l2 = r.lambda * r.lambda;
            let lo = e.sigma_min * l2 + e.r_min;
            let hi = e.sigma_max * l2 + e.r_max;
            worst_gap = worst_gap.min(r.value - lo).min(hi - r.value);
        }
        for w in curve.windows(3) {
            worst_convexity = worst_convexity.min(w[0].value - 2.0 * w[1].value + w[2].value);
        }
    }
    check(
        worst_gap >= 0.0 && worst_convexity >= -1e-7,
        format!("5 random sets, 41 λ each: min slack to bounds {worst_gap:.3e}, min second difference {worst_convexity:.3e}"),
    )
}

fn dirichlet_limit() -> Outcome {
    let set = common::oscillating_rates();
    let radii: Vec<f64> = (0..7).map(|j| set.period() * f64::from(1u32 << j)).collect();
    let sweep = dirichlet_sweep(&set, &radii, 64).map_err(err)?;
    let values: Vec<f64> = sweep.iter().map(|(_, e)| e.value).collect();
    let increasing = values.windows(2).all(|w| w[1] > w[0]);
    let (k_min, _) = k_minimum(&set, grid()).map_err(err)?;
    let gap = (values[6] - k_min).abs();
    check(
        increasing && gap <= 1e-2,
        format!(
            "λ₁^R for R = L..64L: {}; min k = {k_min:.6}, gap {gap:.3e}",
            values.iter().map(|v| format!("{v:.5}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

fn symmetry() -> Outcome {
    let set = common::skewed_rates();
    let plus = k_of_lambda(&set, 1.0, grid()).map_err(err)?.value;
    let minus = k_of_lambda(&set, -1.0, grid()).map_err(err)?.value;
    let report = spreading_speeds(&set, grid()).map_err(err)?;
    let dk = (plus - minus).abs();
    let dc = (report.c_right - report.c_left).abs();
    check(
        dk < 1e-7 && dc < 1e-5,
        format!("|k(1) − k(−1)| = {dk:.3e}, |c_R − c_L| = {dc:.3e}"),
    )
}

fn ode_convergence() -> Outcome {
    let sym = HomParams::new(1.0, 1.0, 1.0, 1.0, 1.0, 0.5, 0.5).map_err(err)?;
    let run = integrate(&sym, 0.1, 0.9, 200.0, 1e-3, 1000).map_err(err)?;
    let end = run.last();
    let d_sym = (end.u - 0.5).abs().max((end.v - 0.5).abs());
    let lyap = run.lyapunov_nonincreasing == Some(true);

    let dying = HomParams::new(1.0, -0.2, -0.2, 1.0, 1.0, 0.5, 0.5).map_err(err)?;
    let run = integrate(&dying, 0.3, 0.2, 200.0, 1e-3, 1000).map_err(err)?;
    let d_zero = run.last().u.abs().max(run.last().v.abs());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut certified = 0;
    let mut sampled = 0;
    while sampled < 100 {
        let p = HomParams::new(
            rng.gen_range(0.2..2.0),
            rng.gen_range(-0.5..2.0),
            rng.gen_range(-0.5..2.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.2..2.0),
            rng.gen_range(0.05..1.0),
            rng.gen_range(0.05..1.0),
        )
        .map_err(err)?;
        if lambda_a(&p) <= 1e-3 {
            continue;
        }
        sampled += 1;
        let (u, v) = equilibrium(&p).map_err(err)?;
        let j = jacobian(&p, u, v);
        if j.a < 0.0 && j.d < 0.0 && j.a + j.d < 0.0 && j.a * j.d - j.b * j.c > 0.0 {
            certified += 1;
        }
        analyze(&p).map_err(err)?;
    }
    check(
        d_sym <= 1e-6 && lyap && d_zero <= 1e-6 && certified == 100,
        format!(
            "symmetric endpoint distance {d_sym:.2e}, Lyapunov nonincreasing: {lyap}; decaying endpoint {d_zero:.2e}; Jacobian certificate {certified}/100"
        ),
    )
}

fn hair_trigger() -> Outcome {
    let set = common::symmetric();
    let theta = 0.01 * set.k_bar();
    let domain = DomainSpec::new(-100.0, 100.0, 2048);
    let bump = InitialData::CompactBump {
        amplitude: 1e-3,
        center: 0.0,
        half_width: 2.0,
    };
    let mut opts = SimOptions::new(40.0, 0.02, 0.5);
    opts.snapshot_every = Some(0.5);
    let run = simulate(&set, &domain, &bump, &opts).map_err(err)?;
    let i0 = common::nearest(&run.x, 0.0);
    let late: Vec<f64> = run
        .snapshots
        .iter()
        .filter(|s| s.t >= 0.75 * 40.0 - 1e-9)
        .map(|s| s.u[i0].min(s.v[i0]))
        .collect();
    let floor = late.iter().copied().fold(f64::INFINITY, f64::min);
    let persists = !late.is_empty() && floor >= theta;

    let dying = coopfront::CoefficientSet::homogeneous(1.0, -0.2, -0.2, 1.0, 1.0, 0.5, 0.5).map_err(err)?;
    let mut opts = SimOptions::new(60.0, 0.05, 0.5);
    opts.allow_amplitude_above_bound = true;
    let run = simulate(&dying, &domain, &bump, &opts).map_err(err)?;
    let sup = run.state.sup_norm();
    check(
        persists && sup < 1e-6,
        format!("min(u, v)(t, 0) over the last quarter ≥ {floor:.4} (θ = {theta}); decaying case sup-norm {sup:.2e}"),
    )
}

fn homogenization() -> Outcome {
    let base = common::oscillating_rates();
    let hom = base.homogenize().map_err(err)?;
    let target = homogenized_speed(&hom).map_err(err)?;
    let (us, vs) = equilibrium(&HomParams::from_homogenized(&hom).map_err(err)?).map_err(err)?;
    let mut gaps = Vec::new();
    let mut distances = Vec::new();
    for eps in [1.0, 0.5, 0.25, 0.125] {
        let set = base.rescale_epsilon(eps).map_err(err)?;
        let report = spreading_speeds(&set, grid()).map_err(err)?;
        gaps.push((report.c_right - target).abs());
        let prof = stationary_profile(&set, &StationaryOptions::default()).map_err(err)?;
        distances.push(prof.sup_distance(us, vs));
    }
    let decreasing = |v: &[f64]| v.windows(2).all(|w| w[1] < w[0]);
    let rel = gaps[3] / target;
    check(
        decreasing(&gaps) && decreasing(&distances) && rel < 0.03,
        format!(
            "target {target:.6}; speed gaps {}; final relative gap {rel:.2e}; profile distances {}",
            fmt_list(&gaps),
            fmt_list(&distances)
        ),
    )
}

fn boundedness() -> Outcome {
    let set = common::oscillating_rates();
    let kbar = set.k_bar();
    let domain = DomainSpec::new(-20.0, 20.0, 1024);
    let init = InitialData::CompactBump {
        amplitude: 5.0 * kbar,
        center: 0.0,
        half_width: 6.0,
    };
    let mut sim = Simulator::new(&set, &domain, &init, 0.02, true).map_err(err)?;
    let bound = sim.bound();
    let mut running: f64 = sim.state().sup_sum();
    let mut negative = false;
    while sim.state().t < 30.0 {
        sim.step().map_err(err)?;
        let s: &FieldState = sim.state();
        running = running.max(s.sup_sum());
        negative |= s.u.iter().chain(&s.v).any(|&w| w < 0.0);
    }
    let end = sim.state().sup_sum();
    check(
        running <= bound + 1e-8 && end < 1.02 * kbar && !negative,
        format!("sup(u0 + v0) = {bound:.4} (K̄ = {kbar}); running max {running:.6}; final sup {end:.6}"),
    )
}

fn morphology() -> Outcome {
    let domain = DomainSpec::new(-50.0, 250.0, 4096);
    let init = InitialData::RightFrontLike {
        amplitude: 0.3,
        k1: -40.0,
        k2: -39.0,
    };
    let profile = |mu: f64| -> Result<(f64, bool, bool), String> {
        let set = common::pioneer(mu);
        let run = simulate(&set, &domain, &init, &SimOptions::new(60.0, 0.02, 0.5)).map_err(err)?;
        let s = &run.state;
        let mid = 0.2 * set.k_bar();
        let i = (0..run.x.len())
            .rev()
            .find(|&i| s.u[i] + s.v[i] >= mid)
            .ok_or("no front found")?;
        let (a, b) = (run.x[i] - 60.0, domain.x_max);
        Ok((
            hump_height(&run.x, &s.v, a, b) / set.k_bar(),
            is_monotone_front(&run.x, &s.u, a, b, 1e-9),
            is_monotone_front(&run.x, &s.v, a, b, 1e-9),
        ))
    };
    let (_, large_u, large_v) = profile(1.0)?;
    let (hump, _, small_v) = profile(0.01)?;
    check(
        large_u && large_v && hump > 0.01 && !small_v,
        format!("large μ: u monotone {large_u}, v monotone {large_v}; small μ: v hump {hump:.3}·K̄"),
    )
}

fn fmt_list(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3e}")).collect::<Vec<_>>().join(", ")
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("homogeneous speed reproduction", homogeneous_speed),
        ("eigencurve identity", eigencurve_identity),
        ("quadratic bounds and convexity", quadratic_bounds),
        ("Dirichlet limit", dirichlet_limit),
        ("left/right symmetry", symmetry),
        ("ODE convergence and stability", ode_convergence),
        ("hair-trigger persistence", hair_trigger),
        ("homogenization sweep", homogenization),
        ("boundedness invariant", boundedness),
        ("front profile morphology", morphology),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:>2} {name} ({secs:.1}s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({secs:.1}s): {detail}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
