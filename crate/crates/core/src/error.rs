//! Error type shared across the engine.

use thiserror::Error;

/// Errors produced by operator algebra, superoperator assembly and the
/// waiting-time engine.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Matrix/vector dimensions do not line up.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A Hermitian matrix was required.
    #[error("matrix not Hermitian: deviation {deviation:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { deviation: f64, tol: f64 },

    /// The right-hand side is outside the numerical range of the matrix.
    /// For the no-jump generator this signals an initial state with
    /// nonzero survival probability (a dark state is reachable without a
    /// monitored click), so "a jump must occur" fails.
    #[error(
        "inconsistent linear system: residual {residual:.3e} exceeds {tol:.3e} \
         (initial state has nonzero no-jump survival probability)"
    )]
    InconsistentSystem { residual: f64, tol: f64 },

    /// Parameters at which a quantity is undefined (e.g. Ω = 0).
    #[error("degenerate parameters: {0}")]
    DegenerateParameters(String),

    /// Input outside the representable numerical range (overflow in expm
    /// scaling, non-finite entries, ...).
    #[error("numerical range exceeded: {0}")]
    NumericalRange(String),

    /// A parameter violated its documented precondition.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Construction of a density matrix from data that is not trace-one,
    /// Hermitian and positive semidefinite.
    #[error("not a density matrix: {0}")]
    InvalidDensityMatrix(String),

    /// A probability landed outside [0, 1] by more than the clamping
    /// tolerance. Values inside the tolerance band are clamped silently.
    #[error("probability {value:.6e} outside [0,1] beyond tolerance {tol:.1e}")]
    ProbabilityOutOfTolerance { value: f64, tol: f64 },

    /// Doubling the quadrature nodes moved the result by more than the
    /// convergence threshold.
    #[error("quadrature not converged: max shift {shift:.3e} under node doubling (threshold {threshold:.1e})")]
    QuadratureNotConverged { shift: f64, threshold: f64 },

    /// Iterative eigen/trajectory machinery failed to converge.
    #[error("convergence failure: {0}")]
    ConvergenceFailure(String),

    /// Trajectory propagation failed (step size underflow while hunting a
    /// norm threshold).
    #[error("norm integration failure: {0}")]
    NormIntegrationFailure(String),

    /// A trajectory inside an ensemble failed; carries the trajectory index.
    #[error("trajectory {index} failed: {source}")]
    TrajectoryFailed {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
