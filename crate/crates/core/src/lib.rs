//! Click statistics for a two-dot/cavity single-photon detector.
//!
//! A photon sitting in a lossy cavity either leaks out or promotes the
//! electron of a tunnel-coupled double dot, which then tunnels into a
//! lead and registers as a photocurrent click. This crate computes the
//! statistics of those competing clicks three independent ways:
//!
//! * a dense superoperator engine ([`wtd`]) that vectorizes the Lindblad
//!   generator, splits off the monitored jump channels and evaluates
//!   first/second-click probabilities, waiting-time densities, mean
//!   first-click times and the jump-number expansion;
//! * closed-form reference expressions ([`model`]) in the two
//!   dimensionless knobs α = Γ/κ and C = 4g²/(Γκ), plus the quantum
//!   efficiency with and without detunings;
//! * a seeded quantum-jump Monte Carlo unraveling ([`trajectory`]) that
//!   replays the same physics as time-stamped click records.
//!
//! The three must agree; the test suites hold them to it.
//!
//! Conventions: the dot basis is |0⟩, |g⟩, |e⟩ (indices 0, 1, 2), product
//! states order the dot factor first, and vectorization is
//! column-stacking (vec(|i⟩⟨j|) at index j·D + i), so the superoperator
//! of ρ ↦ AρB is Bᵀ ⊗ A. Times are reported in whatever unit system the
//! rates are given in; the model constructors default to κ = 1.

pub mod algebra;
pub mod error;
pub mod liouvillian;
pub mod model;
pub mod quadrature;
pub mod stats;
pub mod trajectory;
pub mod wtd;

pub use algebra::{
    annihilation, dqd_eigenbasis, dqd_operators, expm, kron, solve_min_norm, spectrum,
    DqdEigenbasis, DqdOperators, MinNormSolver, Operator, Spectrum, Svd,
};
pub use error::{Error, Result};
pub use liouvillian::{
    build_liouvillian, devectorize, dissipator, hamiltonian_superop, split_monitored,
    trace_of_vec, vectorize, vectorize_operator, ChannelLabel, DensityMatrix, JumpChannel,
    MonitoredSplit, Superoperator, SuperopKind,
};
pub use model::{
    build_model, closed_form_mean_time, closed_form_pe, closed_form_two_photon,
    efficiency_detuned, efficiency_resonant, initial_pure_state, initial_state,
    ClosedFormTable, ModelParams,
};
pub use trajectory::{
    run_ensemble, run_trajectory, run_trajectory_observed, ClickRecord, EffectiveModel,
    EnsembleStats, TrajectoryOptions, TrajectorySeed,
};
pub use wtd::{
    first_jump_probability, first_jump_time_density, jump_number_decomposition,
    mean_first_jump_time, no_jump_trace_derivative, two_jump_probability, wtd_time_density,
    CurvePoint, JumpProbabilityTable, Propagator, WtdScenario,
};
