//! Principal eigenvalues of the linearized system.
//!
//! Three problems share one discretization: the periodic problem (`λ = 0`),
//! the λ-periodic problem whose eigenvalue `k(λ)` drives the spreading speeds,
//! and the Dirichlet problem on `(−R, R)`.

mod operator;
mod solver;

pub use operator::{
    build_dirichlet_operator, build_operator, peclet_cells, Boundary, DiscreteOperator, GridSpec,
    MAX_CELLS, MIN_CELLS,
};
pub use solver::{principal_eigenpair, principal_eigenpair_with, EigenMethod, EigenOptions, EigenResult};

use crate::coefficients::CoefficientSet;
use crate::error::{Error, Result};

/// Grid refinement stops once two successive levels agree to this.
pub const REFINE_TOL: f64 = 1e-7;

/// Linear interpolation of a periodic nodal vector onto `n` uniform nodes.
fn resample_periodic(w: &[f64], n: usize) -> Vec<f64> {
    let m = w.len();
    if m == n {
        return w.to_vec();
    }
    (0..n)
        .map(|j| {
            let s = j as f64 * m as f64 / n as f64;
            let i = s.floor() as usize % m;
            let t = s - s.floor();
            (1.0 - t) * w[i] + t * w[(i + 1) % m]
        })
        .collect()
}

/// Evaluator for `λ ↦ k(λ)` on one coefficient set.
///
/// Successive evaluations reuse the last eigenvector as a warm start, which
/// pays off when `λ` moves in small steps (line searches, curve scans).
#[derive(Clone, Debug)]
pub struct KCurve {
    set: CoefficientSet,
    grid: GridSpec,
    options: EigenOptions,
    warm: Option<(Vec<f64>, Vec<f64>)>,
}

impl KCurve {
    pub fn new(set: &CoefficientSet, grid: GridSpec) -> Result<Self> {
        Self::with_options(set, grid, EigenOptions::default())
    }

    pub fn with_options(set: &CoefficientSet, grid: GridSpec, options: EigenOptions) -> Result<Self> {
        grid.validate()?;
        if grid.boundary != Boundary::Periodic {
            return Err(Error::Contract("k(λ) needs a periodic grid".into()));
        }
        Ok(KCurve {
            set: set.clone(),
            grid,
            options,
            warm: None,
        })
    }

    pub fn set(&self) -> &CoefficientSet {
        &self.set
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    fn solve_at(&self, lambda: f64, n: usize, warm: Option<&(Vec<f64>, Vec<f64>)>) -> Result<EigenResult> {
        let op = build_operator(&self.set, lambda, &GridSpec::periodic(n))?;
        let start = warm.map(|(p, q)| (resample_periodic(p, op.n_nodes()), resample_periodic(q, op.n_nodes())));
        principal_eigenpair_with(
            &op,
            &self.options,
            start.as_ref().map(|(p, q)| (p.as_slice(), q.as_slice())),
        )
    }

    /// `k(λ)` with grid doubling until successive levels agree to [`REFINE_TOL`].
    ///
    /// `value` holds the Richardson-extrapolated estimate from the last two
    /// levels; `discrete_value`, `phi`, `psi` belong to the finer level.
    pub fn eval(&mut self, lambda: f64) -> Result<EigenResult> {
        let mut n = peclet_cells(&self.set, lambda, self.grid.n_cells)?;
        let mut coarse = self.solve_at(lambda, n, self.warm.as_ref())?;
        loop {
            if 2 * n > MAX_CELLS {
                return Err(Error::numerical_with(
                    format!("k({lambda}) did not settle before {MAX_CELLS} cells"),
                    coarse.residual,
                ));
            }
            n *= 2;
            let warm = (coarse.phi.clone(), coarse.psi.clone());
            let mut fine = self.solve_at(lambda, n, Some(&warm))?;
            let gap = fine.discrete_value - coarse.discrete_value;
            if gap.abs() < REFINE_TOL {
                fine.value = fine.discrete_value + gap / 3.0;
                self.warm = Some((coarse.phi, coarse.psi));
                return Ok(fine);
            }
            coarse = fine;
        }
    }

    /// `k(λ)` on the starting grid only (after Péclet refinement), no doubling.
    pub fn eval_fixed(&mut self, lambda: f64) -> Result<EigenResult> {
        let n = peclet_cells(&self.set, lambda, self.grid.n_cells)?;
        let r = self.solve_at(lambda, n, self.warm.as_ref())?;
        self.warm = Some((r.phi.clone(), r.psi.clone()));
        Ok(r)
    }
}

/// λ-periodic principal eigenvalue `k(λ)` with automatic grid refinement.
pub fn k_of_lambda(set: &CoefficientSet, lambda: f64, grid: GridSpec) -> Result<EigenResult> {
    KCurve::new(set, grid)?.eval(lambda)
}

/// `k(λ)` over a list of `λ` values, warm-starting each solve from the last.
pub fn k_curve(set: &CoefficientSet, lambdas: &[f64], grid: GridSpec) -> Result<Vec<EigenResult>> {
    let mut curve = KCurve::new(set, grid)?;
    lambdas.iter().map(|&l| curve.eval(l)).collect()
}

/// Periodic principal eigenvalue `λ₁^per = k(0)`.
pub fn periodic_eigenvalue(set: &CoefficientSet, grid: GridSpec) -> Result<EigenResult> {
    k_of_lambda(set, 0.0, grid)
}

/// Dirichlet principal eigenpair on `(−R, R)` with `grid.n_cells` interior nodes.
pub fn dirichlet_eigenvalue(set: &CoefficientSet, radius: f64, grid: GridSpec) -> Result<EigenResult> {
    let op = build_dirichlet_operator(set, radius, &grid)?;
    principal_eigenpair(&op)
}

/// Interior node count giving `cells_per_period` cells per period on `(−R, R)`.
pub fn dirichlet_nodes(set: &CoefficientSet, radius: f64, cells_per_period: usize) -> usize {
    let cells = (2.0 * radius / set.period() * cells_per_period as f64).round() as usize;
    cells.saturating_sub(1).max(MIN_CELLS)
}

/// `λ₁^R` for each radius at a fixed resolution per period.
pub fn dirichlet_sweep(
    set: &CoefficientSet,
    radii: &[f64],
    cells_per_period: usize,
) -> Result<Vec<(f64, EigenResult)>> {
    radii
        .iter()
        .map(|&r| {
            let grid = GridSpec::dirichlet(dirichlet_nodes(set, r, cells_per_period));
            dirichlet_eigenvalue(set, r, grid).map(|e| (r, e))
        })
        .collect()
}

/// Upper Collatz–Wielandt quotient `max_i max((Mw)_i/φ_i, (Mw)_i/ψ_i)` of a
/// positive test pair, an upper bound for the discrete `k(λ)`.
///
/// The grid must already be Péclet-admissible for `λ` and match the length of
/// the test pair.
pub fn minimax_check(
    set: &CoefficientSet,
    lambda: f64,
    grid: GridSpec,
    phi: &[f64],
    psi: &[f64],
) -> Result<f64> {
    let op = build_operator(set, lambda, &grid)?;
    if op.n_nodes() != grid.n_cells {
        return Err(Error::Contract(format!(
            "grid of {} cells is not Peclet-admissible at lambda = {lambda}",
            grid.n_cells
        )));
    }
    Ok(op.collatz_wielandt(phi, psi)?.1)
}
