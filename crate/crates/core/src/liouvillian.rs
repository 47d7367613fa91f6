//! Vectorized Lindblad superoperators and the monitored/no-jump split.
//!
//! Vectorization uses column stacking: vec(|i⟩⟨j|) occupies index j·D + i,
//! so the superoperator of ρ ↦ A·ρ·B is (Bᵀ ⊗ A). That identity fixes
//! every matrix in this module:
//!
//!   dissipator   𝒟[L]ρ → rate·[ (L̄⊗L) − ½ I⊗(L†L) − ½ (L†L)ᵀ⊗I ]
//!   commutator  −i[H,ρ] → −i( I⊗H − Hᵀ⊗I )
//!   jump          LρL† → rate·(L̄⊗L)

use num_complex::Complex64;

use crate::algebra::{eigvalsh, kron, Operator, ZERO};
use crate::error::{Error, Result};

const I_UNIT: Complex64 = Complex64::new(0.0, 1.0);

/// Identity of a dissipation channel in the detector model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ChannelLabel {
    /// Electron injection |0⟩→|g⟩ (rate Γ); not observed by the detector.
    ElectronIn,
    /// Electron extraction |e⟩→|0⟩ (rate Γ); the photocurrent click.
    ElectronOut,
    /// Photon loss from the cavity (rate κ); the failed-detection click.
    PhotonLeak,
}

impl ChannelLabel {
    pub fn as_str(&self) -> &'static str {
        match self {
            ChannelLabel::ElectronIn => "electron_in",
            ChannelLabel::ElectronOut => "electron_out",
            ChannelLabel::PhotonLeak => "photon_leak",
        }
    }
}

impl std::fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A single Lindblad channel: bare jump operator, rate, and whether the
/// detector records its clicks.
#[derive(Clone)]
pub struct JumpChannel {
    pub label: ChannelLabel,
    pub op: Operator,
    pub rate: f64,
    pub monitored: bool,
}

impl JumpChannel {
    pub fn new(label: ChannelLabel, op: Operator, rate: f64, monitored: bool) -> Result<Self> {
        if rate < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "negative rate {rate} for channel {label}"
            )));
        }
        Ok(Self {
            label,
            op,
            rate,
            monitored,
        })
    }
}

/// Trace-one, Hermitian, positive-semidefinite state on the dot⊗cavity
/// product space.
#[derive(Clone)]
pub struct DensityMatrix {
    op: Operator,
    dqd_dim: usize,
    fock_dim: usize,
}

const DM_TRACE_TOL: f64 = 1e-12;
const DM_HERM_TOL: f64 = 1e-12;
const DM_EIG_FLOOR: f64 = -1e-10;

impl DensityMatrix {
    /// Validates trace = 1 ± 1e-12, Hermiticity to 1e-12 (relative) and
    /// minimum eigenvalue ≥ −1e-10.
    pub fn new(op: Operator, dqd_dim: usize, fock_dim: usize) -> Result<Self> {
        if op.dim() != dqd_dim * fock_dim {
            return Err(Error::DimensionMismatch(format!(
                "operator dim {} vs {}×{} product space",
                op.dim(),
                dqd_dim,
                fock_dim
            )));
        }
        let tr = op.trace();
        if (tr.re - 1.0).abs() > DM_TRACE_TOL || tr.im.abs() > DM_TRACE_TOL {
            return Err(Error::InvalidDensityMatrix(format!(
                "trace = {tr} (must be 1 ± {DM_TRACE_TOL:.0e})"
            )));
        }
        let dev = op.hermiticity_deviation();
        if dev > DM_HERM_TOL * op.max_abs().max(f64::MIN_POSITIVE) {
            return Err(Error::InvalidDensityMatrix(format!(
                "Hermiticity deviation {dev:.3e}"
            )));
        }
        let min_eig = eigvalsh(&op).first().copied().unwrap_or(0.0);
        if min_eig < DM_EIG_FLOOR {
            return Err(Error::InvalidDensityMatrix(format!(
                "minimum eigenvalue {min_eig:.3e}"
            )));
        }
        Ok(Self {
            op,
            dqd_dim,
            fock_dim,
        })
    }

    /// ρ = |ψ⟩⟨ψ| from a normalized pure state.
    pub fn from_pure(psi: &[Complex64], dqd_dim: usize, fock_dim: usize) -> Result<Self> {
        let d = psi.len();
        let mut op = Operator::zeros(d);
        for i in 0..d {
            for j in 0..d {
                op[(i, j)] = psi[i] * psi[j].conj();
            }
        }
        Self::new(op, dqd_dim, fock_dim)
    }

    pub fn operator(&self) -> &Operator {
        &self.op
    }

    pub fn dqd_dim(&self) -> usize {
        self.dqd_dim
    }

    pub fn fock_dim(&self) -> usize {
        self.fock_dim
    }

    pub fn dim(&self) -> usize {
        self.op.dim()
    }
}

/// Role tag of an assembled superoperator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuperopKind {
    /// The full generator 𝓛 (trace preserving).
    Full,
    /// 𝓛₀ = 𝓛 − Σ monitored jumps.
    NoJump,
    /// A single monitored jump term rate·LρL†.
    Jump,
}

/// Dense matrix acting on vectorized density matrices.
#[derive(Clone)]
pub struct Superoperator {
    matrix: Operator,
    kind: SuperopKind,
    hilbert_dim: usize,
}

impl Superoperator {
    pub fn from_matrix(matrix: Operator, kind: SuperopKind) -> Result<Self> {
        let d2 = matrix.dim();
        let d = (d2 as f64).sqrt().round() as usize;
        if d * d != d2 {
            return Err(Error::DimensionMismatch(format!(
                "superoperator dim {d2} is not a perfect square"
            )));
        }
        Ok(Self {
            matrix,
            kind,
            hilbert_dim: d,
        })
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn kind(&self) -> SuperopKind {
        self.kind
    }

    pub fn hilbert_dim(&self) -> usize {
        self.hilbert_dim
    }

    /// Apply to a vectorized state.
    pub fn apply_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        self.matrix.apply(v)
    }

    /// devec(S·vec(x)).
    pub fn apply_to_operator(&self, x: &Operator) -> Operator {
        devectorize(&self.matrix.apply(&vectorize_operator(x)))
    }
}

/// Column-stacked vec of an arbitrary square matrix.
pub fn vectorize_operator(x: &Operator) -> Vec<Complex64> {
    let d = x.dim();
    let mut v = vec![ZERO; d * d];
    for j in 0..d {
        for i in 0..d {
            v[j * d + i] = x[(i, j)];
        }
    }
    v
}

/// Column-stacked vec of a density matrix.
pub fn vectorize(rho: &DensityMatrix) -> Vec<Complex64> {
    vectorize_operator(rho.operator())
}

/// Inverse of [`vectorize_operator`]; the result is density-matrix shaped
/// but not validated (intermediate engine quantities need not be states).
pub fn devectorize(v: &[Complex64]) -> Operator {
    let d = (v.len() as f64).sqrt().round() as usize;
    assert_eq!(d * d, v.len(), "devectorize needs a square-length vector");
    Operator::from_fn(d, |i, j| v[j * d + i])
}

/// Tr of the matrix a vectorized state represents, without reshaping.
pub fn trace_of_vec(v: &[Complex64]) -> Complex64 {
    let d = (v.len() as f64).sqrt().round() as usize;
    (0..d).map(|i| v[i * d + i]).sum()
}

/// rate·𝒟[L] as a matrix on vectorized states. Dissipators are
/// trace-annihilating: vec(I)† kills the result from the left.
pub fn dissipator(op: &Operator, rate: f64) -> Result<Superoperator> {
    if rate < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "negative dissipation rate {rate}"
        )));
    }
    let d = op.dim();
    let id = Operator::identity(d);
    let ldl = &op.dagger() * op;
    let jump = kron(&op.conj(), op);
    let anti = &kron(&id, &ldl) + &kron(&ldl.transpose(), &id);
    let m = &jump.scale(Complex64::new(rate, 0.0))
        - &anti.scale(Complex64::new(0.5 * rate, 0.0));
    Superoperator::from_matrix(m, SuperopKind::Full)
}

/// −i[H, ·] as a matrix on vectorized states. Rejects non-Hermitian H
/// beyond 1e-10·max|H|.
pub fn hamiltonian_superop(h: &Operator) -> Result<Superoperator> {
    let dev = h.hermiticity_deviation();
    let tol = 1e-10 * h.max_abs().max(f64::MIN_POSITIVE);
    if dev > tol {
        return Err(Error::NotHermitian {
            deviation: dev,
            tol,
        });
    }
    let d = h.dim();
    let id = Operator::identity(d);
    let m = (&kron(&id, h) - &kron(&h.transpose(), &id)).scale(-I_UNIT);
    Superoperator::from_matrix(m, SuperopKind::Full)
}

/// Full Lindblad generator 𝓛 = −i[H,·] + Σ rateₖ 𝒟[Lₖ].
pub fn build_liouvillian(h: &Operator, channels: &[JumpChannel]) -> Result<Superoperator> {
    let mut m = hamiltonian_superop(h)?.matrix.clone();
    for ch in channels {
        if ch.op.dim() != h.dim() {
            return Err(Error::DimensionMismatch(format!(
                "channel {} dim {} vs Hamiltonian dim {}",
                ch.label,
                ch.op.dim(),
                h.dim()
            )));
        }
        m = &m + &dissipator(&ch.op, ch.rate)?.matrix;
    }
    Superoperator::from_matrix(m, SuperopKind::Full)
}

/// Bare jump superoperator rate·(L̄ ⊗ L), i.e. ρ ↦ rate·LρL†.
pub fn jump_superop(ch: &JumpChannel) -> Superoperator {
    let m = kron(&ch.op.conj(), &ch.op).scale(Complex64::new(ch.rate, 0.0));
    Superoperator::from_matrix(m, SuperopKind::Jump).expect("square by construction")
}

/// The no-jump generator and the monitored jump superoperators.
pub struct MonitoredSplit {
    pub no_jump: Superoperator,
    /// Monitored channels in input order.
    pub jumps: Vec<(ChannelLabel, Superoperator)>,
}

impl MonitoredSplit {
    pub fn jump(&self, label: ChannelLabel) -> Option<&Superoperator> {
        self.jumps
            .iter()
            .find(|(l, _)| *l == label)
            .map(|(_, s)| s)
    }

    pub fn labels(&self) -> Vec<ChannelLabel> {
        self.jumps.iter().map(|(l, _)| *l).collect()
    }
}

/// Split 𝓛 into 𝓛₀ plus the monitored jump superoperators; unmonitored
/// channels stay whole inside 𝓛₀.
pub fn split_monitored(h: &Operator, channels: &[JumpChannel]) -> Result<MonitoredSplit> {
    if !channels.iter().any(|c| c.monitored) {
        return Err(Error::InvalidParameter(
            "no monitored channel: nothing to split".into(),
        ));
    }
    let full = build_liouvillian(h, channels)?;
    let mut l0 = full.matrix.clone();
    let mut jumps = Vec::new();
    for ch in channels.iter().filter(|c| c.monitored) {
        let j = jump_superop(ch);
        l0 = &l0 - &j.matrix;
        jumps.push((ch.label, j));
    }
    Ok(MonitoredSplit {
        no_jump: Superoperator::from_matrix(l0, SuperopKind::NoJump)?,
        jumps,
    })
}
