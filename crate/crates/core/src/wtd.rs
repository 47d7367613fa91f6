//! Deterministic waiting-time statistics.
//!
//! Everything reduces to two primitives on the no-jump generator 𝓛₀:
//! propagation e^{𝓛₀t} and the minimum-norm solve standing in for the
//! formal 𝓛₀⁻¹ (singular because of the dark state). Time-integrated
//! quantities use σ = −𝓛₀⁻¹ρ = ∫₀^∞ e^{𝓛₀t}ρ dt, obtained as
//! solve(𝓛₀, −vec ρ):
//!
//!   first-jump probability   p_j   = Tr{𝓛_j σ}
//!   two-jump probability     p_ij  = Tr{𝓛_j σ′},  σ′ = −𝓛₀⁻¹𝓛_i σ
//!   mean first-jump time     ⟨t⟩   = Tr{σ}
//!
//! all positive as written. A right-hand side outside the range of 𝓛₀
//! (nonzero survival probability) surfaces as an inconsistent-system
//! error instead of silently polluting the result with kernel content.

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::algebra::{expm, expm_action, spectrum, MinNormSolver, Operator, ZERO};
use crate::error::{Error, Result};
use crate::liouvillian::{
    split_monitored, trace_of_vec, vectorize, ChannelLabel, DensityMatrix, JumpChannel,
    MonitoredSplit, Superoperator,
};
use crate::quadrature::gauss_legendre;

/// Probabilities must sit in [0,1] within this band before clamping;
/// values further out raise instead of clamping.
pub const PROB_CLAMP_TOL: f64 = 1e-9;
/// Residual imaginary part allowed on a probability trace.
pub const IMAG_TOL: f64 = 1e-10;
/// Default node count per quadrature layer in the jump-number expansion.
pub const DYSON_NODES: usize = 64;
/// Node-doubling shift beyond which the expansion is reported unconverged.
pub const DYSON_CONVERGENCE: f64 = 1e-6;

/// Check imaginary residue and the [0,1] band, then clamp.
fn real_probability(z: Complex64) -> Result<f64> {
    if z.im.abs() > IMAG_TOL {
        return Err(Error::NumericalRange(format!(
            "probability trace has imaginary part {:.3e}",
            z.im
        )));
    }
    let p = z.re;
    if p < -PROB_CLAMP_TOL || p > 1.0 + PROB_CLAMP_TOL {
        return Err(Error::ProbabilityOutOfTolerance {
            value: p,
            tol: PROB_CLAMP_TOL,
        });
    }
    Ok(p.clamp(0.0, 1.0))
}

fn negate(v: &[Complex64]) -> Vec<Complex64> {
    v.iter().map(|z| -z).collect()
}

/// σ = −𝓛₀⁻¹ρ via the factored solver.
fn integrated_state(solver: &MinNormSolver, rho_vec: &[Complex64]) -> Result<Vec<Complex64>> {
    solver.solve(&negate(rho_vec))
}

/// Probability that the first monitored jump happens in channel j
/// (Lj the jump superoperator), given certainty of some jump.
pub fn first_jump_probability(
    l0: &Superoperator,
    lj: &Superoperator,
    rho: &DensityMatrix,
) -> Result<f64> {
    let solver = MinNormSolver::new(l0.matrix());
    let sigma = integrated_state(&solver, &vectorize(rho))?;
    real_probability(trace_of_vec(&lj.apply_vec(&sigma)))
}

/// W(j,t|ρ) = Tr{𝓛_j e^{𝓛₀t} ρ}, in units of 1/time.
pub fn wtd_time_density(
    l0: &Superoperator,
    lj: &Superoperator,
    rho: &DensityMatrix,
    t: f64,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    let prop = expm(l0.matrix(), t)?;
    let w = lj.apply_vec(&prop.apply(&vectorize(rho)));
    let z = trace_of_vec(&w);
    if z.re < -1e-10 {
        return Err(Error::NumericalRange(format!(
            "negative density {:.3e} at t = {t}",
            z.re
        )));
    }
    Ok(z.re.max(0.0))
}

/// W(t|ρ) = Σ_{j monitored} W(j,t|ρ): density of the first monitored
/// click regardless of channel. This channel-sum form is the primary
/// definition; the trace-derivative −Tr{𝓛₀e^{𝓛₀t}ρ} coincides with it
/// exactly when the unmonitored content of 𝓛₀ is trace-neutral (true for
/// this model, asserted in tests via [`no_jump_trace_derivative`]).
pub fn first_jump_time_density(
    split: &MonitoredSplit,
    rho: &DensityMatrix,
    t: f64,
) -> Result<f64> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    let prop = expm(split.no_jump.matrix(), t)?;
    let evolved = prop.apply(&vectorize(rho));
    let mut total = 0.0;
    for (_, lj) in &split.jumps {
        total += trace_of_vec(&lj.apply_vec(&evolved)).re;
    }
    Ok(total.max(0.0))
}

/// −Tr{𝓛₀ e^{𝓛₀t} ρ}: the trace-derivative form of the first-jump
/// density, exposed for cross-checking against the channel sum.
pub fn no_jump_trace_derivative(
    l0: &Superoperator,
    rho: &DensityMatrix,
    t: f64,
) -> Result<f64> {
    let prop = expm(l0.matrix(), t)?;
    let evolved = prop.apply(&vectorize(rho));
    Ok(-trace_of_vec(&l0.apply_vec(&evolved)).re)
}

/// p_ij = Tr{𝓛_j 𝓛₀⁻¹ 𝓛_i 𝓛₀⁻¹ ρ}: first a click in channel i, then in
/// channel j. Each inverse is a minimum-norm solve contributing one sign
/// flip, leaving the expression positive.
pub fn two_jump_probability(
    l0: &Superoperator,
    li: &Superoperator,
    lj: &Superoperator,
    rho: &DensityMatrix,
) -> Result<f64> {
    let solver = MinNormSolver::new(l0.matrix());
    let sigma1 = integrated_state(&solver, &vectorize(rho))?;
    let after_first = li.apply_vec(&sigma1);
    let sigma2 = integrated_state(&solver, &after_first)?;
    real_probability(trace_of_vec(&lj.apply_vec(&sigma2)))
}

/// ⟨t⟩ = −Tr{𝓛₀⁻¹ρ} = Tr{σ}; strictly positive.
pub fn mean_first_jump_time(l0: &Superoperator, rho: &DensityMatrix) -> Result<f64> {
    let solver = MinNormSolver::new(l0.matrix());
    let sigma = integrated_state(&solver, &vectorize(rho))?;
    let z = trace_of_vec(&sigma);
    if z.im.abs() > IMAG_TOL || z.re <= 0.0 {
        return Err(Error::NumericalRange(format!(
            "mean first-jump time came out as {z} (must be real positive)"
        )));
    }
    Ok(z.re)
}

/// Map from monitored-channel sequences (length 1 or 2) to probabilities,
/// with the unaccounted mass.
#[derive(Debug, Clone)]
pub struct JumpProbabilityTable {
    pub entries: BTreeMap<Vec<ChannelLabel>, f64>,
    pub residual: f64,
}

impl JumpProbabilityTable {
    fn from_entries(entries: BTreeMap<Vec<ChannelLabel>, f64>) -> Result<Self> {
        let mut sum = 0.0;
        for (seq, &p) in &entries {
            if !(-1e-10..=1.0 + 1e-10).contains(&p) {
                return Err(Error::ProbabilityOutOfTolerance {
                    value: p,
                    tol: 1e-10,
                });
            }
            sum += p;
            debug_assert!(!seq.is_empty());
        }
        let residual = 1.0 - sum;
        if residual.abs() > 1e-9 {
            return Err(Error::NumericalRange(format!(
                "jump table mass {sum} deviates from 1 beyond 1e-9"
            )));
        }
        Ok(Self { entries, residual })
    }

    pub fn get(&self, seq: &[ChannelLabel]) -> Option<f64> {
        self.entries.get(seq).copied()
    }
}

/// Exact propagation backend for quadratures: spectral when 𝓛₀ is
/// safely diagonalizable, Padé action otherwise.
enum Backend {
    Spectral {
        v: Operator,
        vinv: Operator,
        eigs: Vec<Complex64>,
    },
    Direct(Operator),
}

pub struct Propagator {
    backend: Backend,
}

impl Propagator {
    pub fn new(m: &Operator) -> Self {
        if let Ok(s) = spectrum(m) {
            let v = s.right_eigenvectors;
            // residual test: M·V ≈ V·Λ
            let mv = m * &v;
            let vl = Operator::from_fn(v.dim(), |i, j| v[(i, j)] * s.eigenvalues[j]);
            let resid = (&mv - &vl).max_abs();
            let ok = resid <= 1e-9 * m.max_abs().max(f64::MIN_POSITIVE)
                && s.condition_estimate <= 1e10;
            if ok {
                if let Ok(lu) = crate::algebra::LuFactors::new(&v) {
                    return Self {
                        backend: Backend::Spectral {
                            vinv: lu.inverse(),
                            v,
                            eigs: s.eigenvalues,
                        },
                    };
                }
            }
        }
        Self {
            backend: Backend::Direct(m.clone()),
        }
    }

    pub fn is_spectral(&self) -> bool {
        matches!(self.backend, Backend::Spectral { .. })
    }

    /// e^{Mt}·w.
    pub fn act(&self, t: f64, w: &[Complex64]) -> Result<Vec<Complex64>> {
        match &self.backend {
            Backend::Spectral { v, vinv, eigs } => {
                let mut y = vinv.apply(w);
                for (yi, lam) in y.iter_mut().zip(eigs.iter()) {
                    *yi *= (lam * t).exp();
                }
                Ok(v.apply(&y))
            }
            Backend::Direct(m) => expm_action(m, t, w),
        }
    }
}

/// Dyson jump-number decomposition: P_k(t) for k = 0..=k_max, the
/// probability of exactly k monitored clicks in [0, t].
///
/// P₀(t) = Tr{e^{𝓛₀t}ρ}; for k ≥ 1 the k-fold time-ordered integrals are
/// evaluated by iterated Gauss–Legendre quadrature with `nodes` points
/// per layer, summing over channel sequences via 𝓛_Σ = Σ_j 𝓛_j. The
/// result is recomputed at half the nodes; a shift above
/// [`DYSON_CONVERGENCE`] in any P_k is reported as non-convergence.
pub fn jump_number_decomposition(
    l0: &Superoperator,
    jumps: &[&Superoperator],
    rho: &DensityMatrix,
    t: f64,
    k_max: usize,
    nodes: usize,
) -> Result<Vec<f64>> {
    if t < 0.0 {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    if nodes < 2 {
        return Err(Error::InvalidParameter("need at least 2 nodes".into()));
    }
    let mut lsum = Operator::zeros(l0.matrix().dim());
    for j in jumps {
        lsum = &lsum + j.matrix();
    }
    let prop = Propagator::new(l0.matrix());
    let v0 = vectorize(rho);

    let coarse = dyson_at_nodes(&prop, &lsum, &v0, t, k_max, nodes / 2)?;
    let fine = dyson_at_nodes(&prop, &lsum, &v0, t, k_max, nodes)?;
    let shift = coarse
        .iter()
        .zip(fine.iter())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if shift > DYSON_CONVERGENCE {
        return Err(Error::QuadratureNotConverged {
            shift,
            threshold: DYSON_CONVERGENCE,
        });
    }
    Ok(fine)
}

fn dyson_at_nodes(
    prop: &Propagator,
    lsum: &Operator,
    v0: &[Complex64],
    t: f64,
    k_max: usize,
    nodes: usize,
) -> Result<Vec<f64>> {
    let gl = gauss_legendre(nodes);
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let wk = k_jump_vector(prop, lsum, v0, t, k, &gl)?;
        out.push(trace_of_vec(&wk).re);
    }
    Ok(out)
}

/// w_k(s): unnormalized state carrying exactly k monitored clicks in
/// [0, s]; w₀(s) = e^{𝓛₀s}ρ and
/// w_k(s) = ∫₀^s e^{𝓛₀(s−u)} 𝓛_Σ w_{k−1}(u) du.
fn k_jump_vector(
    prop: &Propagator,
    lsum: &Operator,
    v0: &[Complex64],
    s: f64,
    k: usize,
    gl: &(Vec<f64>, Vec<f64>),
) -> Result<Vec<Complex64>> {
    if k == 0 {
        return prop.act(s, v0);
    }
    let mut acc = vec![ZERO; v0.len()];
    if s == 0.0 {
        return Ok(acc);
    }
    let (xs, ws) = gl;
    for (x, w) in xs.iter().zip(ws.iter()) {
        let u = 0.5 * s * (x + 1.0);
        let inner = k_jump_vector(prop, lsum, v0, u, k - 1, gl)?;
        let kicked = lsum.apply(&inner);
        let moved = prop.act(s - u, &kicked)?;
        let scale = Complex64::new(0.5 * s * w, 0.0);
        for (a, m) in acc.iter_mut().zip(moved.iter()) {
            *a += m * scale;
        }
    }
    Ok(acc)
}

/// A prepared scenario: split generator, factored 𝓛₀ solver and
/// propagator, for repeated queries against one model.
pub struct WtdScenario {
    split: MonitoredSplit,
    solver: MinNormSolver,
}

impl WtdScenario {
    pub fn new(h: &Operator, channels: &[JumpChannel]) -> Result<Self> {
        let split = split_monitored(h, channels)?;
        let solver = MinNormSolver::new(split.no_jump.matrix());
        Ok(Self { split, solver })
    }

    pub fn split(&self) -> &MonitoredSplit {
        &self.split
    }

    pub fn labels(&self) -> Vec<ChannelLabel> {
        self.split.labels()
    }

    fn jump(&self, label: ChannelLabel) -> Result<&Superoperator> {
        self.split.jump(label).ok_or_else(|| {
            Error::InvalidParameter(format!("channel {label} is not monitored"))
        })
    }

    pub fn first_jump_probability(
        &self,
        label: ChannelLabel,
        rho: &DensityMatrix,
    ) -> Result<f64> {
        let sigma = integrated_state(&self.solver, &vectorize(rho))?;
        real_probability(trace_of_vec(&self.jump(label)?.apply_vec(&sigma)))
    }

    pub fn mean_first_jump_time(&self, rho: &DensityMatrix) -> Result<f64> {
        let sigma = integrated_state(&self.solver, &vectorize(rho))?;
        let z = trace_of_vec(&sigma);
        if z.im.abs() > IMAG_TOL || z.re <= 0.0 {
            return Err(Error::NumericalRange(format!(
                "mean first-jump time came out as {z}"
            )));
        }
        Ok(z.re)
    }

    pub fn two_jump_probability(
        &self,
        first: ChannelLabel,
        second: ChannelLabel,
        rho: &DensityMatrix,
    ) -> Result<f64> {
        let sigma1 = integrated_state(&self.solver, &vectorize(rho))?;
        let after = self.jump(first)?.apply_vec(&sigma1);
        let sigma2 = integrated_state(&self.solver, &after)?;
        real_probability(trace_of_vec(&self.jump(second)?.apply_vec(&sigma2)))
    }

    pub fn wtd_time_density(
        &self,
        label: ChannelLabel,
        rho: &DensityMatrix,
        t: f64,
    ) -> Result<f64> {
        wtd_time_density(&self.split.no_jump, self.jump(label)?, rho, t)
    }

    pub fn first_jump_time_density(&self, rho: &DensityMatrix, t: f64) -> Result<f64> {
        first_jump_time_density(&self.split, rho, t)
    }

    /// Complete length-1 table over the monitored channels.
    pub fn first_jump_table(&self, rho: &DensityMatrix) -> Result<JumpProbabilityTable> {
        let sigma = integrated_state(&self.solver, &vectorize(rho))?;
        let mut entries = BTreeMap::new();
        for (label, lj) in &self.split.jumps {
            entries.insert(vec![*label], real_probability(trace_of_vec(&lj.apply_vec(&sigma)))?);
        }
        JumpProbabilityTable::from_entries(entries)
    }

    /// Complete length-2 table over ordered monitored-channel pairs.
    pub fn two_jump_table(&self, rho: &DensityMatrix) -> Result<JumpProbabilityTable> {
        let sigma1 = integrated_state(&self.solver, &vectorize(rho))?;
        let mut entries = BTreeMap::new();
        for (li_label, li) in &self.split.jumps {
            let after = li.apply_vec(&sigma1);
            let sigma2 = integrated_state(&self.solver, &after)?;
            for (lj_label, lj) in &self.split.jumps {
                entries.insert(
                    vec![*li_label, *lj_label],
                    real_probability(trace_of_vec(&lj.apply_vec(&sigma2)))?,
                );
            }
        }
        JumpProbabilityTable::from_entries(entries)
    }

    pub fn jump_number_decomposition(
        &self,
        rho: &DensityMatrix,
        t: f64,
        k_max: usize,
        nodes: usize,
    ) -> Result<Vec<f64>> {
        let jumps: Vec<&Superoperator> = self.split.jumps.iter().map(|(_, j)| j).collect();
        jump_number_decomposition(&self.split.no_jump, &jumps, rho, t, k_max, nodes)
    }

    /// Time-density curve on a uniform grid: per-channel densities, their
    /// sum, and the no-click survival probability. Steps with a single
    /// precomputed e^{𝓛₀Δ}.
    pub fn wtd_curve(
        &self,
        rho: &DensityMatrix,
        t_max: f64,
        count: usize,
    ) -> Result<Vec<CurvePoint>> {
        if count < 2 || t_max <= 0.0 {
            return Err(Error::InvalidParameter(
                "curve needs t_max > 0 and count >= 2".into(),
            ));
        }
        let dt = t_max / (count - 1) as f64;
        let step = expm(self.split.no_jump.matrix(), dt)?;
        let mut state = vectorize(rho);
        let mut out = Vec::with_capacity(count);
        for i in 0..count {
            let t = i as f64 * dt;
            let mut per_channel = Vec::with_capacity(self.split.jumps.len());
            let mut total = 0.0;
            for (label, lj) in &self.split.jumps {
                let d = trace_of_vec(&lj.apply_vec(&state)).re.max(0.0);
                per_channel.push((*label, d));
                total += d;
            }
            out.push(CurvePoint {
                t,
                per_channel,
                total,
                survival: trace_of_vec(&state).re,
            });
            if i + 1 < count {
                state = step.apply(&state);
            }
        }
        Ok(out)
    }

    /// ∫₀^{t_upper} W(j,t)dt by adaptive quadrature over the propagated
    /// density; marginalization cross-check for the probabilities.
    /// Integrates over geometrically refined panels so the adaptive rule
    /// cannot mistake a density localized near t = 0 for zero.
    pub fn integrated_density(
        &self,
        label: ChannelLabel,
        rho: &DensityMatrix,
        t_upper: f64,
        tol: f64,
    ) -> Result<f64> {
        let prop = Propagator::new(self.split.no_jump.matrix());
        let lj = self.jump(label)?;
        let v0 = vectorize(rho);
        let mut failed: Option<Error> = None;
        let mut density = |t: f64| match prop.act(t, &v0) {
            Ok(w) => trace_of_vec(&lj.apply_vec(&w)).re,
            Err(e) => {
                failed = Some(e);
                0.0
            }
        };
        let mut edges = vec![0.0];
        for k in (0..=20).rev() {
            edges.push(t_upper * 0.5f64.powi(k));
        }
        let mut total = 0.0;
        for pair in edges.windows(2) {
            total +=
                crate::quadrature::integrate_adaptive(&mut density, pair[0], pair[1], tol / 21.0);
        }
        match failed {
            Some(e) => Err(e),
            None => Ok(total),
        }
    }
}

/// One sample of a waiting-time density curve.
#[derive(Debug, Clone)]
pub struct CurvePoint {
    pub t: f64,
    pub per_channel: Vec<(ChannelLabel, f64)>,
    pub total: f64,
    pub survival: f64,
}
