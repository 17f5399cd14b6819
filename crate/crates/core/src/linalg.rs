//! Block tridiagonal solves, with optional periodic wrap-around.
//!
//! Elimination runs without pivoting. That is safe for the matrices built in
//! this crate: they are nonsingular M-matrices, whose leading principal minors
//! and Schur complements stay nonsingular. Periodic systems are handled by
//! bordering: the last block unknown is split off, the remaining open chain is
//! solved for the right-hand side and for the coupling column, and a small
//! Schur complement closes the loop.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};

pub type Block<const D: usize> = SMatrix<f64, D, D>;
pub type BlockVec<const D: usize> = SVector<f64, D>;

/// `lower[i]·x[i-1] + diag[i]·x[i] + upper[i]·x[i+1] = b[i]`.
///
/// For open chains `lower[0]` and `upper[m-1]` are ignored; for cyclic chains
/// they couple to `x[m-1]` and `x[0]` respectively.
#[derive(Clone, Debug)]
pub struct BlockTridiagonal<const D: usize> {
    pub lower: Vec<Block<D>>,
    pub diag: Vec<Block<D>>,
    pub upper: Vec<Block<D>>,
    pub cyclic: bool,
}

impl<const D: usize> BlockTridiagonal<D> {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn apply(&self, x: &[BlockVec<D>]) -> Vec<BlockVec<D>> {
        let m = self.len();
        (0..m)
            .map(|i| {
                let mut y = self.diag[i] * x[i];
                if i > 0 {
                    y += self.lower[i] * x[i - 1];
                } else if self.cyclic {
                    y += self.lower[0] * x[m - 1];
                }
                if i + 1 < m {
                    y += self.upper[i] * x[i + 1];
                } else if self.cyclic {
                    y += self.upper[m - 1] * x[0];
                }
                y
            })
            .collect()
    }

    pub fn factor(&self) -> Result<Factorization<D>> {
        let m = self.len();
        if m == 0 || self.lower.len() != m || self.upper.len() != m {
            return Err(Error::Contract("inconsistent block tridiagonal sizes".into()));
        }
        if !self.cyclic || m == 1 {
            let mut diag = self.diag.clone();
            if self.cyclic {
                diag[0] += self.lower[0] + self.upper[0];
            }
            let chain = Chain::factor(&self.lower, &diag, &self.upper)?;
            return Ok(Factorization {
                chain,
                border: None,
            });
        }

        let inner = m - 1;
        let chain = Chain::factor(
            &self.lower[..inner],
            &self.diag[..inner],
            &self.upper[..inner],
        )?;
        let mut column = vec![Block::<D>::zeros(); inner];
        column[0] += self.lower[0];
        column[inner - 1] += self.upper[inner - 1];
        let z = chain.solve(&column);
        let row_first = self.upper[m - 1];
        let row_last = self.lower[m - 1];
        let schur = if inner == 1 {
            self.diag[m - 1] - (row_first + row_last) * z[0]
        } else {
            self.diag[m - 1] - row_first * z[0] - row_last * z[inner - 1]
        };
        let schur_inv = schur
            .try_inverse()
            .ok_or_else(|| Error::numerical("singular Schur complement in cyclic solve"))?;
        Ok(Factorization {
            chain,
            border: Some(Border {
                z,
                row_first,
                row_last,
                schur_inv,
            }),
        })
    }
}

#[derive(Clone, Debug)]
struct Chain<const D: usize> {
    multipliers: Vec<Block<D>>,
    pivots_inv: Vec<Block<D>>,
    upper: Vec<Block<D>>,
}

impl<const D: usize> Chain<D> {
    fn factor(lower: &[Block<D>], diag: &[Block<D>], upper: &[Block<D>]) -> Result<Self> {
        let m = diag.len();
        let mut multipliers = Vec::with_capacity(m);
        let mut pivots_inv = Vec::with_capacity(m);
        multipliers.push(Block::<D>::zeros());
        let first = diag[0]
            .try_inverse()
            .ok_or_else(|| Error::numerical("singular pivot block at row 0"))?;
        pivots_inv.push(first);
        for i in 1..m {
            let w = lower[i] * pivots_inv[i - 1];
            let pivot = diag[i] - w * upper[i - 1];
            let inv = pivot
                .try_inverse()
                .ok_or_else(|| Error::numerical(format!("singular pivot block at row {i}")))?;
            multipliers.push(w);
            pivots_inv.push(inv);
        }
        Ok(Chain {
            multipliers,
            pivots_inv,
            upper: upper.to_vec(),
        })
    }

    fn solve<const C: usize>(&self, rhs: &[SMatrix<f64, D, C>]) -> Vec<SMatrix<f64, D, C>> {
        let m = self.pivots_inv.len();
        let mut y = rhs.to_vec();
        for i in 1..m {
            let prev = y[i - 1];
            y[i] -= self.multipliers[i] * prev;
        }
        y[m - 1] = self.pivots_inv[m - 1] * y[m - 1];
        for i in (0..m - 1).rev() {
            let next = y[i + 1];
            y[i] = self.pivots_inv[i] * (y[i] - self.upper[i] * next);
        }
        y
    }
}

#[derive(Clone, Debug)]
struct Border<const D: usize> {
    z: Vec<Block<D>>,
    row_first: Block<D>,
    row_last: Block<D>,
    schur_inv: Block<D>,
}

/// A factored block tridiagonal matrix, reusable across right-hand sides.
#[derive(Clone, Debug)]
pub struct Factorization<const D: usize> {
    chain: Chain<D>,
    border: Option<Border<D>>,
}

impl<const D: usize> Factorization<D> {
    pub fn solve(&self, rhs: &[BlockVec<D>]) -> Vec<BlockVec<D>> {
        match &self.border {
            None => self.chain.solve(rhs),
            Some(b) => {
                let inner = rhs.len() - 1;
                let mut y = self.chain.solve(&rhs[..inner]);
                let coupling = if inner == 1 {
                    (b.row_first + b.row_last) * y[0]
                } else {
                    b.row_first * y[0] + b.row_last * y[inner - 1]
                };
                let last = b.schur_inv * (rhs[inner] - coupling);
                for (yi, zi) in y.iter_mut().zip(&b.z) {
                    *yi -= zi * last;
                }
                y.push(last);
                y
            }
        }
    }
}

/// Scalar tridiagonal convenience wrapper around the 1×1 block solver.
#[derive(Clone, Debug)]
pub struct Tridiagonal {
    factor: Factorization<1>,
}

impl Tridiagonal {
    pub fn new(lower: &[f64], diag: &[f64], upper: &[f64], cyclic: bool) -> Result<Self> {
        let wrap = |v: &[f64]| v.iter().map(|&a| Block::<1>::new(a)).collect();
        let system = BlockTridiagonal::<1> {
            lower: wrap(lower),
            diag: wrap(diag),
            upper: wrap(upper),
            cyclic,
        };
        Ok(Tridiagonal {
            factor: system.factor()?,
        })
    }

    pub fn solve_in_place(&self, x: &mut [f64]) {
        let rhs: Vec<BlockVec<1>> = x.iter().map(|&v| BlockVec::<1>::new(v)).collect();
        for (dst, src) in x.iter_mut().zip(self.factor.solve(&rhs)) {
            *dst = src[0];
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector, Matrix2, Vector2};

    fn dense<const D: usize>(sys: &BlockTridiagonal<D>) -> DMatrix<f64> {
        let m = sys.len();
        let mut a = DMatrix::zeros(m * D, m * D);
        let mut put = |i: usize, j: usize, blk: &Block<D>| {
            for r in 0..D {
                for c in 0..D {
                    a[(i * D + r, j * D + c)] += blk[(r, c)];
                }
            }
        };
        for i in 0..m {
            put(i, i, &sys.diag[i]);
            if i > 0 {
                put(i, i - 1, &sys.lower[i]);
            } else if sys.cyclic && m > 1 {
                put(0, m - 1, &sys.lower[0]);
            }
            if i + 1 < m {
                put(i, i + 1, &sys.upper[i]);
            } else if sys.cyclic && m > 1 {
                put(m - 1, 0, &sys.upper[m - 1]);
            }
        }
        a
    }

    fn m_matrix_system(m: usize, cyclic: bool) -> BlockTridiagonal<2> {
        let lower = (0..m)
            .map(|i| Matrix2::new(-1.0 - 0.1 * i as f64, 0.0, 0.0, -0.7))
            .collect();
        let upper = (0..m)
            .map(|i| Matrix2::new(-0.8, 0.0, 0.0, -1.2 + 0.01 * i as f64))
            .collect();
        let diag = (0..m)
            .map(|i| Matrix2::new(3.5 + (i % 3) as f64, -0.4, -0.3, 3.0))
            .collect();
        BlockTridiagonal {
            lower,
            diag,
            upper,
            cyclic,
        }
    }

    #[test]
    fn block_solve_matches_dense() {
        for &cyclic in &[false, true] {
            for m in [1, 2, 3, 7, 40] {
                let sys = m_matrix_system(m, cyclic);
                let rhs: Vec<Vector2<f64>> = (0..m)
                    .map(|i| Vector2::new((i as f64).sin(), 1.0 + (i as f64 * 0.3).cos()))
                    .collect();
                let x = sys.factor().unwrap().solve(&rhs);
                let back = sys.apply(&x);
                for (b, r) in back.iter().zip(&rhs) {
                    assert!((b - r).norm() < 1e-12, "m={m} cyclic={cyclic}");
                }
                if m > 1 {
                    let a = dense(&sys);
                    let flat = DVector::from_iterator(2 * m, rhs.iter().flat_map(|v| [v[0], v[1]]));
                    let xd = a.lu().solve(&flat).unwrap();
                    for i in 0..m {
                        assert!((xd[2 * i] - x[i][0]).abs() < 1e-12);
                        assert!((xd[2 * i + 1] - x[i][1]).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn scalar_cyclic_solve() {
        let n = 50;
        let lower = vec![-1.0; n];
        let upper = vec![-1.0; n];
        let diag = vec![2.5; n];
        let t = Tridiagonal::new(&lower, &diag, &upper, true).unwrap();
        let rhs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.2).cos()).collect();
        let mut x = rhs.clone();
        t.solve_in_place(&mut x);
        for i in 0..n {
            let l = x[(i + n - 1) % n];
            let r = x[(i + 1) % n];
            assert!((2.5 * x[i] - l - r - rhs[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_system_reports_error() {
        let t = Tridiagonal::new(&[0.0, 0.0], &[0.0, 1.0], &[0.0, 0.0], false);
        assert!(matches!(t, Err(Error::Numerical { .. })));
    }
}
