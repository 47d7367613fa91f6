//! Dense complex matrix kernel.
//!
//! Square row-major matrices over `Complex64` with the handful of
//! decompositions the superoperator engine needs: Kronecker products,
//! Padé matrix exponentials, a rank-revealing SVD with minimum-norm
//! solves, and complex Schur-based spectra. Dimensions stay tiny
//! (Hilbert ≤ 9, Liouville ≤ 81), so everything is allocation-simple
//! dense code with no BLAS dependency.

mod eig;
mod expm;
mod lu;
mod svd;

pub use eig::{eigvalsh, spectrum, Spectrum};
pub use expm::{expm, expm_action};
pub use lu::LuFactors;
pub use svd::{solve_min_norm, MinNormSolver, Svd, RANK_CUTOFF};

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square dense complex matrix, row-major.
#[derive(Clone, PartialEq)]
pub struct Operator {
    dim: usize,
    data: Vec<Complex64>,
}

impl Operator {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "operator dimension must be positive");
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            for j in 0..dim {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Build from row-major data; `data.len()` must be a perfect square.
    pub fn from_vec(dim: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "expected {} entries for dim {}, got {}",
                dim * dim,
                dim,
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn diag(entries: &[Complex64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &v) in entries.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    /// |i⟩⟨j| on a `dim`-dimensional space.
    pub fn ket_bra(dim: usize, i: usize, j: usize) -> Self {
        assert!(i < dim && j < dim);
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn dagger(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj(&self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Induced 1-norm (maximum column sum).
    pub fn norm_one(&self) -> f64 {
        (0..self.dim)
            .map(|j| (0..self.dim).map(|i| self[(i, j)].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// max |M − M†| over entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let mut dev: f64 = 0.0;
        for i in 0..self.dim {
            for j in i..self.dim {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, rel_tol: f64) -> bool {
        self.hermiticity_deviation() <= rel_tol * self.max_abs().max(f64::MIN_POSITIVE)
    }

    /// Matrix–vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.dim, "matvec dimension mismatch");
        let mut out = vec![ZERO; self.dim];
        self.apply_into(v, &mut out);
        out
    }

    /// Matrix–vector product into a caller-provided buffer.
    pub fn apply_into(&self, v: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.data[i * n..(i + 1) * n];
            let mut acc = ZERO;
            for (a, b) in row.iter().zip(v.iter()) {
                acc += a * b;
            }
            *o = acc;
        }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    fn check_same_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch(format!(
                "{} vs {}",
                self.dim, other.dim
            )));
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for Operator {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for Operator {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

impl fmt::Debug for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Operator({}x{})", self.dim, self.dim)?;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let z = self[(i, j)];
                write!(f, " {:+.4e}{:+.4e}i", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        self.check_same_dim(rhs).expect("operator add");
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        self.check_same_dim(rhs).expect("operator sub");
        Operator {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Neg for &Operator {
    type Output = Operator;
    fn neg(self) -> Operator {
        self.scale(-ONE)
    }
}

impl Mul for &Operator {
    type Output = Operator;
    fn mul(self, rhs: &Operator) -> Operator {
        self.check_same_dim(rhs).expect("operator mul");
        let n = self.dim;
        let mut out = Operator::zeros(n);
        // i-k-j loop order keeps the inner stride unit on row-major data.
        for i in 0..n {
            for k in 0..n {
                let aik = self.data[i * n + k];
                if aik == ZERO {
                    continue;
                }
                let brow = &rhs.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        out
    }
}

impl Mul<Complex64> for &Operator {
    type Output = Operator;
    fn mul(self, s: Complex64) -> Operator {
        self.scale(s)
    }
}

impl Mul<f64> for &Operator {
    type Output = Operator;
    fn mul(self, s: f64) -> Operator {
        self.scale(Complex64::new(s, 0.0))
    }
}

/// Kronecker product: entry ((i·dimB+k), (j·dimB+l)) = A[i,j]·B[k,l].
pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (na, nb) = (a.dim(), b.dim());
    let n = na * nb;
    let mut out = Operator::zeros(n);
    for i in 0..na {
        for j in 0..na {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k, j * nb + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

/// Bosonic annihilation operator truncated at `n_max` excitations:
/// a[n−1, n] = √n.
pub fn annihilation(n_max: usize) -> Operator {
    let d = n_max + 1;
    let mut a = Operator::zeros(d);
    for n in 1..d {
        a[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    a
}

/// The elementary dot operators on the three-state space |0⟩, |g⟩, |e⟩
/// (indices 0, 1, 2).
pub struct DqdOperators {
    /// s_g = |0⟩⟨g| — extraction of a ground-state electron.
    pub s_g: Operator,
    /// s_e = |0⟩⟨e| — extraction of an excited electron.
    pub s_e: Operator,
    /// σ₃ = |e⟩⟨e| − |g⟩⟨g|.
    pub sigma3: Operator,
    /// σ₊ = |e⟩⟨g|.
    pub sigma_plus: Operator,
    /// σ₋ = |g⟩⟨e|.
    pub sigma_minus: Operator,
}

pub fn dqd_operators() -> DqdOperators {
    let s_g = Operator::ket_bra(3, 0, 1);
    let s_e = Operator::ket_bra(3, 0, 2);
    let mut sigma3 = Operator::zeros(3);
    sigma3[(1, 1)] = -ONE;
    sigma3[(2, 2)] = ONE;
    let sigma_plus = Operator::ket_bra(3, 2, 1);
    let sigma_minus = sigma_plus.dagger();
    DqdOperators {
        s_g,
        s_e,
        sigma3,
        sigma_plus,
        sigma_minus,
    }
}

/// Result of diagonalizing the two-dot Hamiltonian
/// (ε/2)(|R⟩⟨R|−|L⟩⟨L|) + t_c(|R⟩⟨L|+|L⟩⟨R|).
pub struct DqdEigenbasis {
    /// Level splitting Ω = √(4t_c² + ε²).
    pub omega: f64,
    /// Real orthogonal 3×3 matrix mapping (|g⟩,|e⟩,|0⟩) kets to
    /// (|L⟩,|R⟩,|0⟩): |L⟩ = cosθ|g⟩ + sinθ|e⟩, |R⟩ = −sinθ|g⟩ + cosθ|e⟩
    /// with tanθ = 2t_c/(Ω+ε). Uᵀ·H_LR·U = diag(−Ω/2, +Ω/2, 0).
    pub u: Operator,
}

/// Eigenbasis of the two-dot Hamiltonian. Errors at ε = t_c = 0 where the
/// splitting vanishes and the basis is undefined.
pub fn dqd_eigenbasis(epsilon: f64, t_c: f64) -> Result<DqdEigenbasis> {
    let omega = (4.0 * t_c * t_c + epsilon * epsilon).sqrt();
    if omega == 0.0 {
        return Err(Error::DegenerateParameters(
            "epsilon = t_c = 0: zero splitting, eigenbasis undefined".into(),
        ));
    }
    let denom_sq = 2.0 * omega * (omega + epsilon);
    let (c, s) = if denom_sq > omega * omega * 1e-30 {
        let denom = denom_sq.sqrt();
        ((omega + epsilon) / denom, 2.0 * t_c / denom)
    } else {
        // t_c → 0 with ε < 0: |L⟩ is the excited dot.
        (0.0, 1.0)
    };
    let mut u = Operator::zeros(3);
    u[(0, 0)] = Complex64::new(c, 0.0);
    u[(0, 1)] = Complex64::new(s, 0.0);
    u[(1, 0)] = Complex64::new(-s, 0.0);
    u[(1, 1)] = Complex64::new(c, 0.0);
    u[(2, 2)] = ONE;
    Ok(DqdEigenbasis { omega, u })
}

/// Euclidean norm of a complex vector.
pub fn vec_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// ⟨a|b⟩ = Σ conj(a_i) b_i.
pub fn vec_dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}
