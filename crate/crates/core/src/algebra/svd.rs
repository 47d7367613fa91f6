//! One-sided Jacobi SVD and rank-revealing minimum-norm solves.
//!
//! The no-jump generator of the detector model is singular (the dark
//! state spans a one-dimensional kernel), so the formal inverse in the
//! waiting-time expressions is realized as a minimum-norm consistent
//! solve: rank decided by the σ > 1e-12·σ_max cutoff, followed by an
//! explicit residual check that flags right-hand sides outside the range.
//! One-sided Jacobi keeps small singular values at high relative
//! accuracy, which matters because the kernel vector carries trace one
//! and any leakage into it corrupts mean first-jump times.

use num_complex::Complex64;

use super::{vec_norm, Operator, ZERO};
use crate::error::{Error, Result};

/// Relative singular value cutoff for rank decisions.
pub const RANK_CUTOFF: f64 = 1e-12;

/// Relative residual tolerance for consistency of min-norm solves.
const CONSISTENCY_TOL: f64 = 1e-10;

/// Thin SVD of a square matrix: M = U·diag(σ)·V†.
pub struct Svd {
    dim: usize,
    /// Left singular vectors (columns); zero columns where σ vanishes.
    pub u: Operator,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// Right singular vectors (columns).
    pub v: Operator,
}

impl Svd {
    pub fn new(m: &Operator) -> Self {
        let n = m.dim();
        // work on columns: cols[j][i] = m[i][j]
        let mut cols: Vec<Vec<Complex64>> = (0..n)
            .map(|j| (0..n).map(|i| m[(i, j)]).collect())
            .collect();
        let mut v: Vec<Vec<Complex64>> = (0..n)
            .map(|j| {
                let mut e = vec![ZERO; n];
                e[j] = Complex64::new(1.0, 0.0);
                e
            })
            .collect();

        let fro2: f64 = cols.iter().map(|c| norm_sqr(c)).sum();
        let tiny = fro2 * 1e-32 + f64::MIN_POSITIVE;

        for _sweep in 0..60 {
            let mut rotated = false;
            for p in 0..n {
                for q in (p + 1)..n {
                    let hpp = norm_sqr(&cols[p]);
                    let hqq = norm_sqr(&cols[q]);
                    if hpp <= tiny && hqq <= tiny {
                        continue;
                    }
                    let hpq: Complex64 = cols[p]
                        .iter()
                        .zip(cols[q].iter())
                        .map(|(a, b)| a.conj() * b)
                        .sum();
                    let mag = hpq.norm();
                    if mag <= 1e-16 * (hpp * hqq).sqrt() + tiny {
                        continue;
                    }
                    rotated = true;
                    let phase = hpq / mag;
                    let tau = (hqq - hpp) / (2.0 * mag);
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // columns rotate by [[c, s·phase], [−s·conj(phase), c]]
                    rotate_pair(&mut cols, p, q, c, s, phase);
                    rotate_pair(&mut v, p, q, c, s, phase);
                }
            }
            if !rotated {
                break;
            }
        }

        let mut order: Vec<usize> = (0..n).collect();
        let norms: Vec<f64> = cols.iter().map(|c| norm_sqr(c).sqrt()).collect();
        order.sort_by(|&a, &b| norms[b].partial_cmp(&norms[a]).unwrap());

        let mut u = Operator::zeros(n);
        let mut vv = Operator::zeros(n);
        let mut sigma = vec![0.0; n];
        let zero_floor = norms[order[0]] * 1e-300 + f64::MIN_POSITIVE;
        for (slot, &j) in order.iter().enumerate() {
            sigma[slot] = norms[j];
            for i in 0..n {
                vv[(i, slot)] = v[j][i];
                if norms[j] > zero_floor {
                    u[(i, slot)] = cols[j][i] / norms[j];
                }
            }
        }
        Svd {
            dim: n,
            u,
            sigma,
            v: vv,
        }
    }

    /// Numerical rank under the σ > RANK_CUTOFF·σ_max rule.
    pub fn rank(&self) -> usize {
        let cut = RANK_CUTOFF * self.sigma[0];
        self.sigma.iter().filter(|&&s| s > cut).count()
    }

    /// Minimum-norm least-squares application x = V Σ⁺ U† b.
    pub fn pseudo_apply(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.dim;
        let r = self.rank();
        let mut coeff = vec![ZERO; r];
        for k in 0..r {
            let mut acc = ZERO;
            for i in 0..n {
                acc += self.u[(i, k)].conj() * b[i];
            }
            coeff[k] = acc / self.sigma[k];
        }
        let mut x = vec![ZERO; n];
        for k in 0..r {
            let ck = coeff[k];
            for i in 0..n {
                x[i] += self.v[(i, k)] * ck;
            }
        }
        x
    }
}

fn norm_sqr(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn rotate_pair(cols: &mut [Vec<Complex64>], p: usize, q: usize, c: f64, s: f64, phase: Complex64) {
    let n = cols[p].len();
    for i in 0..n {
        let xp = cols[p][i];
        let xq = cols[q][i];
        cols[p][i] = xp * c - xq * phase.conj() * s;
        cols[q][i] = xp * phase * s + xq * c;
    }
}

/// Factored minimum-norm solver for repeated right-hand sides.
pub struct MinNormSolver {
    matrix: Operator,
    svd: Svd,
    norm_one: f64,
}

impl MinNormSolver {
    pub fn new(m: &Operator) -> Self {
        Self {
            matrix: m.clone(),
            svd: Svd::new(m),
            norm_one: m.norm_one(),
        }
    }

    pub fn rank(&self) -> usize {
        self.svd.rank()
    }

    /// Minimum-norm x with M·x ≈ b; errors when b is outside the
    /// numerical range of M. The consistency test is backward-error
    /// scaled, ‖Mx−b‖ ≤ 1e-10·(‖b‖ + ‖M‖₁‖x‖), which reduces to the
    /// plain relative bound on well-scaled systems.
    pub fn solve(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        let mut x = self.svd.pseudo_apply(b);
        let mut r = residual(&self.matrix, &x, b);
        // one step of refinement tightens the residual toward rounding level
        let dx = self.svd.pseudo_apply(&r);
        let mut x2 = x.clone();
        for (xi, di) in x2.iter_mut().zip(dx.iter()) {
            *xi += di;
        }
        let r2 = residual(&self.matrix, &x2, b);
        if vec_norm(&r2) < vec_norm(&r) {
            x = x2;
            r = r2;
        }
        let resid = vec_norm(&r);
        let scale = vec_norm(b) + self.norm_one * vec_norm(&x);
        let tol = CONSISTENCY_TOL * scale.max(f64::MIN_POSITIVE);
        if resid > tol {
            return Err(Error::InconsistentSystem {
                residual: resid,
                tol,
            });
        }
        Ok(x)
    }
}

fn residual(m: &Operator, x: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    m.apply(x)
        .iter()
        .zip(b.iter())
        .map(|(mx, bi)| bi - mx)
        .collect()
}

/// One-shot minimum-norm solve; factor with [`MinNormSolver`] when the
/// same matrix is solved repeatedly.
pub fn solve_min_norm(m: &Operator, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if b.len() != m.dim() {
        return Err(Error::DimensionMismatch(format!(
            "matrix dim {} vs rhs len {}",
            m.dim(),
            b.len()
        )));
    }
    MinNormSolver::new(m).solve(b)
}
