//! LU factorization with partial pivoting for dense complex matrices.
//!
//! Backs the Padé denominator solves in `expm` and the eigenvector-matrix
//! inverse used for spectral propagation.

use num_complex::Complex64;

use super::{Operator, ZERO};
use crate::error::{Error, Result};

/// PA = LU factors of a square complex matrix.
pub struct LuFactors {
    dim: usize,
    /// Combined L (unit lower, below diagonal) and U (upper).
    lu: Vec<Complex64>,
    /// Row permutation: `perm[i]` is the original row now in position i.
    perm: Vec<usize>,
}

impl LuFactors {
    pub fn new(m: &Operator) -> Result<Self> {
        let n = m.dim();
        let mut lu = m.data().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();

        for k in 0..n {
            // pivot search on column k
            let (mut p, mut max) = (k, lu[k * n + k].norm());
            for i in (k + 1)..n {
                let v = lu[i * n + k].norm();
                if v > max {
                    p = i;
                    max = v;
                }
            }
            if max == 0.0 {
                return Err(Error::NumericalRange(format!(
                    "singular matrix in LU at column {k}"
                )));
            }
            if p != k {
                perm.swap(k, p);
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let factor = lu[i * n + k] / pivot;
                lu[i * n + k] = factor;
                for j in (k + 1)..n {
                    let ukj = lu[k * n + j];
                    lu[i * n + j] -= factor * ukj;
                }
            }
        }
        Ok(Self { dim: n, lu, perm })
    }

    /// Solve A x = b.
    pub fn solve_vec(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        assert_eq!(b.len(), n);
        let mut x: Vec<Complex64> = self.perm.iter().map(|&i| b[i]).collect();
        // forward: L y = Pb
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        // backward: U x = y
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        x
    }

    /// Solve A X = B column by column.
    pub fn solve_matrix(&self, b: &Operator) -> Operator {
        let n = self.dim;
        assert_eq!(b.dim(), n);
        let mut out = Operator::zeros(n);
        let mut col = vec![ZERO; n];
        for j in 0..n {
            for i in 0..n {
                col[i] = b[(i, j)];
            }
            let x = self.solve_vec(&col);
            for i in 0..n {
                out[(i, j)] = x[i];
            }
        }
        out
    }

    pub fn inverse(&self) -> Operator {
        self.solve_matrix(&Operator::identity(self.dim))
    }
}
