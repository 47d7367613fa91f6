//! The dot–cavity detector model: Hamiltonian assembly, channel list,
//! initial states, closed-form reference expressions and quantum
//! efficiency.
//!
//! Dimensionless parametrization used throughout: α = Γ/κ compares the
//! electronic and photonic dissipation rates, C = 4g²/(Γκ) is the
//! cooperativity. The reference expressions assume resonance
//! (Δ_d = Δ_r = 0) and no drive (ξ = 0); the builders expose detunings
//! and drive for the numeric engine only.

use num_complex::Complex64;

use crate::algebra::{annihilation, dqd_eigenbasis, dqd_operators, kron, Operator, ZERO};
use crate::error::{Error, Result};
use crate::liouvillian::{ChannelLabel, DensityMatrix, JumpChannel};

/// Physical parameters of the dot–cavity model.
#[derive(Debug, Clone, Copy)]
pub struct ModelParams {
    /// Dot detuning Δ_d = Ω − ω_l.
    pub delta_d: f64,
    /// Cavity detuning Δ_r = ω_r − ω_l.
    pub delta_r: f64,
    /// Dot–cavity coupling g.
    pub g: f64,
    /// Pump strength ξ.
    pub xi: f64,
    /// Electron rate Γ (both injection and extraction).
    pub gamma: f64,
    /// Photon loss rate κ.
    pub kappa: f64,
    /// Dot energy detuning ε (enters only the efficiency via Ω).
    pub epsilon: f64,
    /// Interdot coupling t_c (enters only the efficiency via Ω).
    pub t_c: f64,
    /// Fock-space cutoff: the cavity keeps states |0⟩..|n_max⟩.
    pub n_max: usize,
}

impl ModelParams {
    /// Resonant, undriven scenario parametrized by (α, C) in units of
    /// κ = 1, with the excitation-conserving cutoff n_max = n.
    pub fn resonant(alpha: f64, cooperativity: f64, n_max: usize) -> Self {
        let gamma = alpha;
        let kappa = 1.0;
        let g = (cooperativity * gamma * kappa).sqrt() / 2.0;
        Self {
            delta_d: 0.0,
            delta_r: 0.0,
            g,
            xi: 0.0,
            gamma,
            kappa,
            epsilon: 0.0,
            t_c: 0.5,
            n_max,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0) {
            return Err(Error::InvalidParameter(format!("gamma = {}", self.gamma)));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidParameter(format!("kappa = {}", self.kappa)));
        }
        if self.g < 0.0 || self.xi < 0.0 {
            return Err(Error::InvalidParameter(
                "g and xi must be nonnegative".into(),
            ));
        }
        for (name, v) in [
            ("delta_d", self.delta_d),
            ("delta_r", self.delta_r),
            ("g", self.g),
            ("xi", self.xi),
            ("gamma", self.gamma),
            ("kappa", self.kappa),
            ("epsilon", self.epsilon),
            ("t_c", self.t_c),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v}")));
            }
        }
        Ok(())
    }

    /// C = 4g²/(Γκ).
    pub fn cooperativity(&self) -> f64 {
        4.0 * self.g * self.g / (self.gamma * self.kappa)
    }

    /// α = Γ/κ.
    pub fn alpha(&self) -> f64 {
        self.gamma / self.kappa
    }

    /// Ω = √(4t_c² + ε²).
    pub fn omega(&self) -> f64 {
        (4.0 * self.t_c * self.t_c + self.epsilon * self.epsilon).sqrt()
    }
}

/// Hamiltonian and channel list of the detector model on the
/// 3·(n_max+1)-dimensional product space (dot factor first):
///
///   H = Δ_d σ₃/2 ⊗ I + I ⊗ Δ_r a†a + g(σ₋⊗a† + σ₊⊗a) + ξ I⊗(a†+a)
///
/// channels: electron_in (s_g†, Γ, unmonitored), electron_out (s_e, Γ,
/// monitored), photon_leak (a, κ, monitored).
pub fn build_model(params: &ModelParams) -> Result<(Operator, Vec<JumpChannel>)> {
    params.validate()?;
    if params.xi > 0.0 {
        log::warn!(
            "xi = {} > 0: excitation number is not conserved, the Fock cutoff n_max = {} truncates; check convergence by raising it",
            params.xi,
            params.n_max
        );
    }
    let dqd = dqd_operators();
    let a = annihilation(params.n_max);
    let ad = a.dagger();
    let id_d = Operator::identity(3);
    let id_f = Operator::identity(params.n_max + 1);
    let number = &ad * &a;

    let mut h = kron(&dqd.sigma3.scale(Complex64::new(params.delta_d / 2.0, 0.0)), &id_f);
    h = &h + &kron(&id_d, &number.scale(Complex64::new(params.delta_r, 0.0)));
    let jc = &kron(&dqd.sigma_minus, &ad) + &kron(&dqd.sigma_plus, &a);
    h = &h + &jc.scale(Complex64::new(params.g, 0.0));
    if params.xi != 0.0 {
        let drive = &a + &ad;
        h = &h + &kron(&id_d, &drive.scale(Complex64::new(params.xi, 0.0)));
    }

    let channels = vec![
        JumpChannel::new(
            ChannelLabel::ElectronIn,
            kron(&dqd.s_g.dagger(), &id_f),
            params.gamma,
            false,
        )?,
        JumpChannel::new(
            ChannelLabel::ElectronOut,
            kron(&dqd.s_e, &id_f),
            params.gamma,
            true,
        )?,
        JumpChannel::new(ChannelLabel::PhotonLeak, kron(&id_d, &a), params.kappa, true)?,
    ];
    Ok((h, channels))
}

/// ρ₀⁽ⁿ⁾ = |0⟩⟨0| ⊗ |n⟩⟨n|: empty dot, n photons.
pub fn initial_state(n: usize, n_max: usize) -> Result<DensityMatrix> {
    let psi = initial_pure_state(n, n_max)?;
    DensityMatrix::from_pure(&psi, 3, n_max + 1)
}

/// |ψ_n⟩ = |0⟩ ⊗ |n⟩ as a state vector.
pub fn initial_pure_state(n: usize, n_max: usize) -> Result<Vec<Complex64>> {
    if n > n_max {
        return Err(Error::InvalidParameter(format!(
            "photon number {n} exceeds cutoff {n_max}"
        )));
    }
    let d = 3 * (n_max + 1);
    let mut psi = vec![ZERO; d];
    psi[n] = Complex64::new(1.0, 0.0);
    Ok(psi)
}

/// One-photon success probability p_e = C/(C+1) · α²/(α+1)².
pub fn closed_form_pe(alpha: f64, c: f64) -> f64 {
    c / (c + 1.0) * alpha * alpha / ((alpha + 1.0) * (alpha + 1.0))
}

/// Dimensionless mean first-click time
/// κ⟨t₁⟩ = [(α+1)² + C(3α+1)] / [(α+1)²(C+1)].
pub fn closed_form_mean_time(alpha: f64, c: f64) -> f64 {
    let ap1 = (alpha + 1.0) * (alpha + 1.0);
    (ap1 + c * (3.0 * alpha + 1.0)) / (ap1 * (c + 1.0))
}

/// Closed-form one- and two-photon reference values at (α, C).
#[derive(Debug, Clone, Copy)]
pub struct ClosedFormTable {
    pub p_e: f64,
    pub p_gamma: f64,
    pub kappa_t1: f64,
    pub p_ee: f64,
    pub p_egamma: f64,
    pub p_gammae: f64,
    pub p_gammagamma: f64,
    /// p_e1 = p_ee + p_eγ: photocurrent on the first click.
    pub p_e1: f64,
    /// p_e2 = p_ee + p_γe: photocurrent on the second click.
    pub p_e2: f64,
}

/// Evaluate the two-photon sequence probabilities together with the
/// one-photon values.
///
/// p_ee and the marginals p_e1/p_e2 follow the published rational forms;
/// p_eγ and p_γe carry two corrections (an extra (2+α) denominator factor
/// and (1+α)² in place of (1+α²) in the p_eγ numerator) required for
/// internal consistency: without them the published large-α/large-C
/// limits, the marginal identities p_e1 = p_ee + p_eγ and
/// p_e2 = p_ee + p_γe, and the numeric engine are all violated by O(1).
/// The corrected forms agree with the engine to machine precision.
/// p_γγ is the complement.
pub fn closed_form_two_photon(alpha: f64, c: f64) -> ClosedFormTable {
    let a = alpha;
    let ap1_sq = (1.0 + a) * (1.0 + a);
    let denom_common = (1.0 + c) * ap1_sq * (2.0 + a) * (3.0 + a) * (1.0 + a + c * a);

    let p_ee = c * c * a.powi(5) / denom_common;
    let p_egamma = c * a.powi(3) * (c * (1.0 + 2.0 * a) + ap1_sq) / denom_common;
    let p_gammae =
        c * a * a * (12.0 + a * (3.0 + a) * (7.0 + a) + c * a * (9.0 + 5.0 * a)) / denom_common;
    let p_gammagamma = 1.0 - p_ee - p_egamma - p_gammae;
    let p_e1 = c * a.powi(3) / ((2.0 + a) * (3.0 + a) * (1.0 + a + c * a));
    let p_e2 = c * a * a
        * (12.0 + 3.0 * (7.0 + 3.0 * c) * a + 5.0 * (2.0 + c) * a * a + (1.0 + c) * a.powi(3))
        / denom_common;

    ClosedFormTable {
        p_e: closed_form_pe(alpha, c),
        p_gamma: 1.0 - closed_form_pe(alpha, c),
        kappa_t1: closed_form_mean_time(alpha, c),
        p_ee,
        p_egamma,
        p_gammae,
        p_gammagamma,
        p_e1,
        p_e2,
    }
}

/// Steady-state quantum efficiency with detunings,
///
///   η = 4κg²Γε / { Ω[4Δ_d²+Γ²] · [ (Δ_r − 4g²Δ_d/(4Δ_d²+Γ²))²
///                                  + (κ/2 + 2g²Γ/(4Δ_d²+Γ²))² ] },
///
/// valid with the phonon channels switched off.
pub fn efficiency_detuned(params: &ModelParams) -> Result<f64> {
    params.validate()?;
    let omega = params.omega();
    if omega == 0.0 {
        return Err(Error::DegenerateParameters(
            "Omega = 0: efficiency undefined at epsilon = t_c = 0".into(),
        ));
    }
    let g2 = params.g * params.g;
    let lorentz = 4.0 * params.delta_d * params.delta_d + params.gamma * params.gamma;
    let shift = params.delta_r - 4.0 * g2 * params.delta_d / lorentz;
    let width = params.kappa / 2.0 + 2.0 * g2 * params.gamma / lorentz;
    let numer = 4.0 * params.kappa * g2 * params.gamma * params.epsilon;
    Ok(numer / (omega * lorentz * (shift * shift + width * width)))
}

/// Resonant efficiency η = (4ε/Ω)·C/(1+C)², with Ω from the dot
/// eigenbasis.
pub fn efficiency_resonant(epsilon: f64, t_c: f64, c: f64) -> Result<f64> {
    let basis = dqd_eigenbasis(epsilon, t_c)?;
    Ok(4.0 * epsilon / basis.omega * c / ((1.0 + c) * (1.0 + c)))
}
