//! Complex eigendecompositions.
//!
//! `spectrum` runs a complex Schur decomposition (Householder Hessenberg
//! reduction, then shifted QR with Givens rotations) and extracts right
//! eigenvectors by triangular back-substitution. `eigvalsh` is a cyclic
//! Jacobi sweep for Hermitian matrices, used for the positivity checks on
//! density matrices.

use num_complex::Complex64;

use super::lu::LuFactors;
use super::{Operator, ONE, ZERO};
use crate::error::{Error, Result};

/// Eigenvalues and right eigenvectors of a general complex matrix.
pub struct Spectrum {
    pub eigenvalues: Vec<Complex64>,
    /// Columns are right eigenvectors, normalized to unit length.
    pub right_eigenvectors: Operator,
    /// ‖V‖₁·‖V⁻¹‖₁ of the eigenvector matrix; large values flag a
    /// nearly defective matrix whose eigenvectors should not be trusted.
    pub condition_estimate: f64,
}

/// Complex Givens rotation zeroing g in (f, g): returns (c, s, r) with
/// c real, [c, s; −s̄, c]·(f, g)ᵀ = (r, 0)ᵀ.
fn givens(f: Complex64, g: Complex64) -> (f64, Complex64, Complex64) {
    if g == ZERO {
        return (1.0, ZERO, f);
    }
    if f == ZERO {
        let gn = g.norm();
        return (0.0, g.conj() / gn, Complex64::new(gn, 0.0));
    }
    let fn_ = f.norm();
    let r = (fn_ * fn_ + g.norm_sqr()).sqrt();
    let c = fn_ / r;
    let s = (f / fn_) * g.conj() / r;
    let rr = (f / fn_) * r;
    (c, s, rr)
}

/// Reduce to upper Hessenberg form: A = Q H Q†. Returns (H, Q).
fn hessenberg(a: &Operator) -> (Operator, Operator) {
    let n = a.dim();
    let mut h = a.clone();
    let mut q = Operator::identity(n);
    for k in 0..n.saturating_sub(2) {
        // Householder vector zeroing h[k+2.., k]
        let m = n - k - 1;
        let mut x = vec![ZERO; m];
        for i in 0..m {
            x[i] = h[(k + 1 + i, k)];
        }
        let norm = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        let alpha = x[0];
        let phase = if alpha.norm() > 0.0 {
            alpha / alpha.norm()
        } else {
            ONE
        };
        let beta = -phase * norm;
        x[0] -= beta;
        let vn = x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if vn == 0.0 {
            continue;
        }
        for z in x.iter_mut() {
            *z /= vn;
        }
        // H ← (I − 2ww†) H from the left on rows k+1..
        for j in 0..n {
            let mut dot = ZERO;
            for i in 0..m {
                dot += x[i].conj() * h[(k + 1 + i, j)];
            }
            let dot = dot * 2.0;
            for i in 0..m {
                let sub = x[i] * dot;
                h[(k + 1 + i, j)] -= sub;
            }
        }
        // H ← H (I − 2ww†) from the right on columns k+1..
        for i in 0..n {
            let mut dot = ZERO;
            for j in 0..m {
                dot += h[(i, k + 1 + j)] * x[j];
            }
            let dot = dot * 2.0;
            for j in 0..m {
                let sub = dot * x[j].conj();
                h[(i, k + 1 + j)] -= sub;
            }
        }
        // accumulate Q ← Q (I − 2ww†)
        for i in 0..n {
            let mut dot = ZERO;
            for j in 0..m {
                dot += q[(i, k + 1 + j)] * x[j];
            }
            let dot = dot * 2.0;
            for j in 0..m {
                let sub = dot * x[j].conj();
                q[(i, k + 1 + j)] -= sub;
            }
        }
    }
    (h, q)
}

/// Shifted QR on an upper Hessenberg matrix; returns upper triangular T
/// with A = Z T Z†.
fn schur(mut t: Operator, mut z: Operator) -> Result<(Operator, Operator)> {
    let n = t.dim();
    let eps = f64::EPSILON;
    let mut hi = n - 1;
    let mut stall = 0usize;
    let max_iter = 60 * n;
    let mut total = 0usize;

    while hi > 0 {
        total += 1;
        if total > max_iter {
            return Err(Error::ConvergenceFailure(format!(
                "QR iteration exceeded {max_iter} steps"
            )));
        }
        // deflation test on the last subdiagonal of the active block
        let sub = t[(hi, hi - 1)].norm();
        let local = t[(hi - 1, hi - 1)].norm() + t[(hi, hi)].norm();
        if sub <= eps * local.max(f64::MIN_POSITIVE) {
            t[(hi, hi - 1)] = ZERO;
            hi -= 1;
            stall = 0;
            continue;
        }
        // find the top of the active unreduced block
        let mut lo = hi;
        while lo > 0 {
            let s = t[(lo, lo - 1)].norm();
            let l = t[(lo - 1, lo - 1)].norm() + t[(lo, lo)].norm();
            if s <= eps * l.max(f64::MIN_POSITIVE) {
                t[(lo, lo - 1)] = ZERO;
                break;
            }
            lo -= 1;
        }

        // Wilkinson shift from the trailing 2×2 of the block
        stall += 1;
        let a = t[(hi - 1, hi - 1)];
        let b = t[(hi - 1, hi)];
        let c = t[(hi, hi - 1)];
        let d = t[(hi, hi)];
        let mu = if stall % 12 == 0 {
            // exceptional shift to break symmetric stalls
            d + Complex64::new(1.5 * c.norm(), 0.5 * b.norm())
        } else {
            let tr2 = (a + d) * 0.5;
            let det = a * d - b * c;
            let disc = (tr2 * tr2 - det).sqrt();
            let m1 = tr2 + disc;
            let m2 = tr2 - disc;
            if (m1 - d).norm() < (m2 - d).norm() {
                m1
            } else {
                m2
            }
        };

        // explicit shifted QR step on the block [lo..=hi]
        for i in lo..=hi {
            t[(i, i)] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - lo);
        for k in lo..hi {
            let (cg, sg, r) = givens(t[(k, k)], t[(k + 1, k)]);
            rots.push((k, cg, sg));
            t[(k, k)] = r;
            t[(k + 1, k)] = ZERO;
            for j in (k + 1)..n {
                let x = t[(k, j)];
                let y = t[(k + 1, j)];
                t[(k, j)] = x * cg + sg * y;
                t[(k + 1, j)] = -sg.conj() * x + y * cg;
            }
        }
        // T ← R Q  (apply G_k† on columns), Z ← Z G_k†
        for &(k, cg, sg) in &rots {
            for i in 0..=(k + 1).min(hi) {
                let x = t[(i, k)];
                let y = t[(i, k + 1)];
                t[(i, k)] = x * cg + y * sg.conj();
                t[(i, k + 1)] = -y_mul(sg, x) + y * cg;
            }
            for i in 0..n {
                let x = z[(i, k)];
                let y = z[(i, k + 1)];
                z[(i, k)] = x * cg + y * sg.conj();
                z[(i, k + 1)] = -y_mul(sg, x) + y * cg;
            }
        }
        for i in lo..=hi {
            t[(i, i)] += mu;
        }
    }
    Ok((t, z))
}

#[inline]
fn y_mul(s: Complex64, x: Complex64) -> Complex64 {
    s * x
}

/// Eigenvalues and right eigenvectors. For diagonalizable inputs the
/// residual max|M·V − V·diag(λ)| stays at rounding level; defective or
/// nearly defective matrices are signalled by a huge condition estimate.
pub fn spectrum(m: &Operator) -> Result<Spectrum> {
    let n = m.dim();
    if n == 1 {
        return Ok(Spectrum {
            eigenvalues: vec![m[(0, 0)]],
            right_eigenvectors: Operator::identity(1),
            condition_estimate: 1.0,
        });
    }
    let (h, q) = hessenberg(m);
    let (t, z) = schur(h, q)?;
    let eigenvalues: Vec<Complex64> = (0..n).map(|i| t[(i, i)]).collect();

    // right eigenvectors of T by back-substitution, then rotate by Z
    let scale = t.max_abs().max(f64::MIN_POSITIVE);
    let mut vt = Operator::zeros(n);
    for k in 0..n {
        let lam = eigenvalues[k];
        vt[(k, k)] = ONE;
        for i in (0..k).rev() {
            let mut rhs = ZERO;
            for j in (i + 1)..=k {
                rhs += t[(i, j)] * vt[(j, k)];
            }
            let mut den = t[(i, i)] - lam;
            if den.norm() < f64::EPSILON * scale {
                den = Complex64::new(f64::EPSILON * scale, 0.0);
            }
            vt[(i, k)] = -rhs / den;
        }
        // normalize the column
        let nrm = (0..=k).map(|i| vt[(i, k)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..=k {
            vt[(i, k)] = vt[(i, k)] / nrm;
        }
    }
    let v = &z * &vt;

    let condition_estimate = match LuFactors::new(&v) {
        Ok(lu) => {
            let vinv = lu.inverse();
            v.norm_one() * vinv.norm_one()
        }
        Err(_) => f64::INFINITY,
    };

    Ok(Spectrum {
        eigenvalues,
        right_eigenvectors: v,
        condition_estimate,
    })
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations,
/// sorted ascending. Input is symmetrized implicitly; callers validate
/// Hermiticity where it is a contract.
pub fn eigvalsh(m: &Operator) -> Vec<f64> {
    let n = m.dim();
    let mut a = m.clone();
    let scale = a.max_abs().max(f64::MIN_POSITIVE);
    for _sweep in 0..100 {
        let mut off: f64 = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off = off.max(a[(p, q)].norm());
            }
        }
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-18 * scale {
                    continue;
                }
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let tan = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let c = 1.0 / (1.0 + tan * tan).sqrt();
                let s = tan * c;
                // G: columns (p,q) mix with phases; A ← G† A G
                for i in 0..n {
                    let aip = a[(i, p)];
                    let aiq = a[(i, q)];
                    a[(i, p)] = aip * c - aiq * phase.conj() * s;
                    a[(i, q)] = aip * phase * s + aiq * c;
                }
                for j in 0..n {
                    let apj = a[(p, j)];
                    let aqj = a[(q, j)];
                    a[(p, j)] = apj * c - aqj * phase * s;
                    a[(q, j)] = apj * phase.conj() * s + aqj * c;
                }
            }
        }
    }
    let mut vals: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
    vals
}
