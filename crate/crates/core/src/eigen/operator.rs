use nalgebra::{DMatrix, Matrix2};
use serde::{Deserialize, Serialize};

use crate::coefficients::{Coefficient, CoefficientSet};
use crate::error::{Error, Result};
use crate::linalg::{Block, BlockTridiagonal};

pub const MIN_CELLS: usize = 16;
pub const MAX_CELLS: usize = 1 << 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Periodic,
    Dirichlet,
}

fn default_boundary() -> Boundary {
    Boundary::Periodic
}

/// Grid resolution: cells per period, or interior nodes of a Dirichlet interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_cells: usize,
    #[serde(default = "default_boundary")]
    pub boundary: Boundary,
}

impl GridSpec {
    pub fn periodic(n_cells: usize) -> Self {
        GridSpec {
            n_cells,
            boundary: Boundary::Periodic,
        }
    }

    pub fn dirichlet(n_cells: usize) -> Self {
        GridSpec {
            n_cells,
            boundary: Boundary::Dirichlet,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < MIN_CELLS {
            return Err(Error::Validation(format!(
                "grid needs at least {MIN_CELLS} cells, got {}",
                self.n_cells
            )));
        }
        if self.n_cells > MAX_CELLS {
            return Err(Error::Validation(format!(
                "grid exceeds {MAX_CELLS} cells"
            )));
        }
        Ok(())
    }
}

/// Smallest `n_cells·2^j` satisfying `h·|λ|·σ_max ≤ σ_min` on a periodic grid.
pub fn peclet_cells(set: &CoefficientSet, lambda: f64, n_cells: usize) -> Result<usize> {
    let e = set.extrema();
    let mut n = n_cells;
    while set.period() / n as f64 * lambda.abs() * e.sigma_max > e.sigma_min {
        n *= 2;
        if n > MAX_CELLS {
            return Err(Error::numerical(format!(
                "Peclet refinement for lambda = {lambda} exceeds {MAX_CELLS} cells"
            )));
        }
    }
    Ok(n)
}

/// Discretization of the exponentially conjugated linearized operator.
///
/// Per node `i` of the u-row (the v-row is analogous):
///
/// ```text
/// (M w)_i = lower_i·φ_{i-1} + diag_u_i·φ_i + upper_i·φ_{i+1} + μ_v(x_i)·ψ_i
/// lower_i = σ_{i-1/2}/h² + λσ_{i-1/2}/h
/// upper_i = σ_{i+1/2}/h² − λσ_{i+1/2}/h
/// diag_u_i = −(σ_{i-1/2} + σ_{i+1/2})/h² + λ²σ_i + r_u(x_i) − μ_u(x_i)
/// ```
///
/// The flux stencil handles `(σφ_x)_x`; the first-order part
/// `−λ(σ_{i+1/2}φ_{i+1} − σ_{i-1/2}φ_{i-1})/h` approximates
/// `−2λσφ_x − λσ_xφ` to second order without differentiating σ. The
/// operator at `−λ` is the transpose of the scalar blocks at `λ`.
#[derive(Clone, Debug)]
pub struct DiscreteOperator {
    pub boundary: Boundary,
    pub lambda: f64,
    pub h: f64,
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub diag_u: Vec<f64>,
    pub diag_v: Vec<f64>,
    /// `diag + lower + upper`, computed without the `1/h²` cancellation:
    /// `λ²σ_i + λ(σ_{i-1/2} − σ_{i+1/2})/h + r − μ`.
    pub center_u: Vec<f64>,
    pub center_v: Vec<f64>,
    /// Coefficient of ψ in the u-row.
    pub couple_u: Vec<f64>,
    /// Coefficient of φ in the v-row.
    pub couple_v: Vec<f64>,
}

fn assemble(set: &CoefficientSet, lambda: f64, x: Vec<f64>, h: f64, boundary: Boundary) -> DiscreteOperator {
    let n = x.len();
    let h2 = h * h;
    let mut op = DiscreteOperator {
        boundary,
        lambda,
        h,
        lower: Vec::with_capacity(n),
        upper: Vec::with_capacity(n),
        diag_u: Vec::with_capacity(n),
        diag_v: Vec::with_capacity(n),
        center_u: Vec::with_capacity(n),
        center_v: Vec::with_capacity(n),
        couple_u: Vec::with_capacity(n),
        couple_v: Vec::with_capacity(n),
        x: Vec::new(),
    };
    for &xi in &x {
        let s_minus = set.eval(Coefficient::Sigma, xi - 0.5 * h);
        let s_plus = set.eval(Coefficient::Sigma, xi + 0.5 * h);
        let s_mid = set.eval(Coefficient::Sigma, xi);
        let mu_u = set.eval(Coefficient::MuU, xi);
        let mu_v = set.eval(Coefficient::MuV, xi);
        let base = -(s_minus + s_plus) / h2 + lambda * lambda * s_mid;
        let center = lambda * lambda * s_mid + lambda * (s_minus - s_plus) / h;
        let growth_u = set.eval(Coefficient::RU, xi) - mu_u;
        let growth_v = set.eval(Coefficient::RV, xi) - mu_v;
        op.lower.push(s_minus / h2 + lambda * s_minus / h);
        op.upper.push(s_plus / h2 - lambda * s_plus / h);
        op.diag_u.push(base + growth_u);
        op.diag_v.push(base + growth_v);
        op.center_u.push(center + growth_u);
        op.center_v.push(center + growth_v);
        op.couple_u.push(mu_v);
        op.couple_v.push(mu_u);
    }
    op.x = x;
    op
}

/// Periodic operator for parameter `λ`, refined until Péclet-admissible.
pub fn build_operator(set: &CoefficientSet, lambda: f64, grid: &GridSpec) -> Result<DiscreteOperator> {
    grid.validate()?;
    if grid.boundary != Boundary::Periodic {
        return Err(Error::Contract(
            "build_operator expects a periodic grid; use build_dirichlet_operator".into(),
        ));
    }
    if !lambda.is_finite() {
        return Err(Error::Validation(format!("lambda must be finite, got {lambda}")));
    }
    let n = peclet_cells(set, lambda, grid.n_cells)?;
    let h = set.period() / n as f64;
    let x = (0..n).map(|i| i as f64 * h).collect();
    Ok(assemble(set, lambda, x, h, Boundary::Periodic))
}

/// `λ = 0` operator on the interior nodes of `(−R, R)` with zero boundary values.
pub fn build_dirichlet_operator(set: &CoefficientSet, radius: f64, grid: &GridSpec) -> Result<DiscreteOperator> {
    grid.validate()?;
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::Validation(format!(
            "Dirichlet radius must be positive, got {radius}"
        )));
    }
    let n = grid.n_cells;
    let h = 2.0 * radius / (n + 1) as f64;
    let x = (0..n).map(|i| -radius + (i + 1) as f64 * h).collect();
    Ok(assemble(set, 0.0, x, h, Boundary::Dirichlet))
}

impl DiscreteOperator {
    pub fn n_nodes(&self) -> usize {
        self.x.len()
    }

    pub fn dimension(&self) -> usize {
        2 * self.n_nodes()
    }

    fn periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    /// Smallest off-diagonal entry; nonnegative means cooperative.
    pub fn min_off_diagonal(&self) -> f64 {
        let n = self.n_nodes();
        let mut lo = f64::INFINITY;
        for i in 0..n {
            if self.periodic() || i > 0 {
                lo = lo.min(self.lower[i]);
            }
            if self.periodic() || i + 1 < n {
                lo = lo.min(self.upper[i]);
            }
            lo = lo.min(self.couple_u[i]).min(self.couple_v[i]);
        }
        lo
    }

    pub fn is_cooperative(&self) -> bool {
        self.min_off_diagonal() >= 0.0
    }

    pub fn min_diagonal(&self) -> f64 {
        self.diag_u
            .iter()
            .chain(&self.diag_v)
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    /// Infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        (0..self.n_nodes())
            .map(|i| {
                let off = self.lower[i].abs() + self.upper[i].abs();
                (off + self.diag_u[i].abs() + self.couple_u[i].abs())
                    .max(off + self.diag_v[i].abs() + self.couple_v[i].abs())
            })
            .fold(0.0, f64::max)
    }

    /// `M·(φ, ψ)`, evaluated in difference form `lower·(φ_{i-1} − φ_i) + …`
    /// so that rounding scales with the jumps of the vector rather than with
    /// its size times `σ/h²`.
    pub fn apply(&self, phi: &[f64], psi: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n_nodes();
        let mut out_u = vec![0.0; n];
        let mut out_v = vec![0.0; n];
        let periodic = self.periodic();
        for i in 0..n {
            let (left, right) = match (i, periodic) {
                (0, true) => (Some(n - 1), Some((i + 1) % n)),
                (_, true) => (Some(i - 1), Some((i + 1) % n)),
                (0, false) => (None, (n > 1).then_some(1)),
                (_, false) => (Some(i - 1), (i + 1 < n).then_some(i + 1)),
            };
            let (pl, ql) = left.map_or((0.0, 0.0), |l| (phi[l], psi[l]));
            let (pr, qr) = right.map_or((0.0, 0.0), |r| (phi[r], psi[r]));
            let a = self.lower[i] * (pl - phi[i])
                + self.upper[i] * (pr - phi[i])
                + self.center_u[i] * phi[i]
                + self.couple_u[i] * psi[i];
            let b = self.lower[i] * (ql - psi[i])
                + self.upper[i] * (qr - psi[i])
                + self.center_v[i] * psi[i]
                + self.couple_v[i] * phi[i];
            out_u[i] = a;
            out_v[i] = b;
        }
        (out_u, out_v)
    }

    /// Collatz–Wielandt bounds `min_i (Mw)_i/w_i ≤ ρ ≤ max_i (Mw)_i/w_i`
    /// for a strictly positive pair.
    pub fn collatz_wielandt(&self, phi: &[f64], psi: &[f64]) -> Result<(f64, f64)> {
        let n = self.n_nodes();
        if phi.len() != n || psi.len() != n {
            return Err(Error::Contract(format!(
                "test pair has lengths ({}, {}), operator has {n} nodes",
                phi.len(),
                psi.len()
            )));
        }
        if phi.iter().chain(psi).any(|&w| !(w > 0.0)) {
            return Err(Error::Contract("test pair must be strictly positive".into()));
        }
        let (mu, mv) = self.apply(phi, psi);
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            for q in [mu[i] / phi[i], mv[i] / psi[i]] {
                lo = lo.min(q);
                hi = hi.max(q);
            }
        }
        Ok((lo, hi))
    }

    /// `τI − M` in node-interleaved block form.
    pub fn shifted_system(&self, tau: f64) -> BlockTridiagonal<2> {
        let n = self.n_nodes();
        let mut sys = BlockTridiagonal {
            lower: Vec::with_capacity(n),
            diag: Vec::with_capacity(n),
            upper: Vec::with_capacity(n),
            cyclic: self.periodic(),
        };
        for i in 0..n {
            sys.lower.push(Block::<2>::identity() * -self.lower[i]);
            sys.upper.push(Block::<2>::identity() * -self.upper[i]);
            sys.diag.push(Matrix2::new(
                tau - self.diag_u[i],
                -self.couple_u[i],
                -self.couple_v[i],
                tau - self.diag_v[i],
            ));
        }
        sys
    }

    /// Dense matrix with the u-block first, then the v-block.
    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.n_nodes();
        let mut m = DMatrix::zeros(2 * n, 2 * n);
        for i in 0..n {
            for (off, diag, couple) in [
                (0, self.diag_u[i], self.couple_u[i]),
                (n, self.diag_v[i], self.couple_v[i]),
            ] {
                let row = off + i;
                m[(row, row)] += diag;
                m[(row, (n - off) + i)] += couple;
                if i > 0 {
                    m[(row, off + i - 1)] += self.lower[i];
                } else if self.periodic() {
                    m[(row, off + n - 1)] += self.lower[i];
                }
                if i + 1 < n {
                    m[(row, off + i + 1)] += self.upper[i];
                } else if self.periodic() {
                    m[(row, off)] += self.upper[i];
                }
            }
        }
        m
    }
}
