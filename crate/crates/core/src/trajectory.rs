//! Quantum-jump (Monte Carlo wave function) unraveling.
//!
//! Pure-state trajectories are valid here because every dissipator is
//! single-Kraus and the scenario starts pure. Between jumps the state
//! follows dψ/dt = −i H_eff ψ with H_eff = H − (i/2)Σ rateₖ Lₖ†Lₖ,
//! integrated by adaptive RK4 with step-doubling error control. Jump
//! times are sampled exactly in distribution: draw u ~ U(0,1], evolve
//! until ‖ψ‖² crosses u, refine the crossing by bisection. All channels
//! jump — monitored and unmonitored alike — but only monitored clicks are
//! recorded, which is precisely what makes the ensemble estimate the
//! no-jump-resolvent statistics with the injection channel inside 𝓛₀.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::collections::BTreeMap;

use crate::algebra::{vec_norm, Operator, ZERO};
use crate::error::{Error, Result};
use crate::liouvillian::{ChannelLabel, JumpChannel};
use crate::stats::{frequency_stderr, RunningStats};

/// Time-stamped clicks of one trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct ClickRecord {
    /// (channel, absolute time), strictly increasing in time.
    pub clicks: Vec<(ChannelLabel, f64)>,
    /// true when the dark state was reached (no channel can fire);
    /// false when the t_max budget ran out first.
    pub terminated: bool,
}

/// Knobs for a single trajectory.
#[derive(Debug, Clone, Copy)]
pub struct TrajectoryOptions {
    /// Absolute time budget, in the same units as the rates.
    pub t_max: f64,
    /// Record clicks of unmonitored channels too (for diagnostics; the
    /// dynamics is identical either way).
    pub record_unmonitored: bool,
    /// Local error tolerance of the adaptive integrator.
    pub local_tol: f64,
    /// Relative time tolerance of the bisection refinement.
    pub time_rel_tol: f64,
}

impl Default for TrajectoryOptions {
    fn default() -> Self {
        Self {
            t_max: 200.0,
            record_unmonitored: false,
            local_tol: 1e-10,
            time_rel_tol: 1e-10,
        }
    }
}

/// Pre-assembled pieces shared by all trajectories of one model.
pub struct EffectiveModel {
    /// G = −iH − ½ Σ rateₖ Lₖ†Lₖ, so that dψ/dt = Gψ.
    generator: Operator,
    channels: Vec<PreparedChannel>,
    rate_scale: f64,
}

struct PreparedChannel {
    label: ChannelLabel,
    rate: f64,
    op: Operator,
    monitored: bool,
}

impl EffectiveModel {
    pub fn new(h: &Operator, channels: &[JumpChannel]) -> Result<Self> {
        let d = h.dim();
        let minus_i = Complex64::new(0.0, -1.0);
        let mut g = h.scale(minus_i);
        let mut prepared = Vec::with_capacity(channels.len());
        let mut rate_scale = 0.0f64;
        for ch in channels {
            if ch.op.dim() != d {
                return Err(Error::DimensionMismatch(format!(
                    "channel {} dim {} vs Hamiltonian dim {}",
                    ch.label,
                    ch.op.dim(),
                    d
                )));
            }
            let ldl = &ch.op.dagger() * &ch.op;
            g = &g - &ldl.scale(Complex64::new(0.5 * ch.rate, 0.0));
            rate_scale = rate_scale.max(ch.rate);
            prepared.push(PreparedChannel {
                label: ch.label,
                rate: ch.rate,
                op: ch.op.clone(),
                monitored: ch.monitored,
            });
        }
        Ok(Self {
            generator: g,
            channels: prepared,
            rate_scale: rate_scale.max(f64::MIN_POSITIVE),
        })
    }

    /// Σ rateₖ ‖Lₖψ‖² — the total jump intensity at ψ.
    fn jump_weights(&self, psi: &[Complex64], weights: &mut Vec<f64>) -> f64 {
        weights.clear();
        let mut total = 0.0;
        for ch in &self.channels {
            let lpsi = ch.op.apply(psi);
            let w = ch.rate * lpsi.iter().map(|z| z.norm_sqr()).sum::<f64>();
            weights.push(w);
            total += w;
        }
        total
    }
}

/// Fixed classic RK4 update ψ ← ψ + (h/6)(k₁+2k₂+2k₃+k₄) with reusable
/// buffers.
struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    fn new(d: usize) -> Self {
        Self {
            k1: vec![ZERO; d],
            k2: vec![ZERO; d],
            k3: vec![ZERO; d],
            k4: vec![ZERO; d],
            tmp: vec![ZERO; d],
        }
    }

    fn step(&mut self, g: &Operator, psi: &[Complex64], h: f64, out: &mut [Complex64]) {
        let half = 0.5 * h;
        g.apply_into(psi, &mut self.k1);
        for i in 0..psi.len() {
            self.tmp[i] = psi[i] + self.k1[i] * half;
        }
        g.apply_into(&self.tmp, &mut self.k2);
        for i in 0..psi.len() {
            self.tmp[i] = psi[i] + self.k2[i] * half;
        }
        g.apply_into(&self.tmp, &mut self.k3);
        for i in 0..psi.len() {
            self.tmp[i] = psi[i] + self.k3[i] * h;
        }
        g.apply_into(&self.tmp, &mut self.k4);
        let w = h / 6.0;
        for i in 0..psi.len() {
            out[i] =
                psi[i] + (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * w;
        }
    }

    /// Step doubling: one full step vs two half steps, Richardson
    /// extrapolated. Returns the error estimate.
    fn double_step(
        &mut self,
        g: &Operator,
        psi: &[Complex64],
        h: f64,
        out: &mut Vec<Complex64>,
        scratch: &mut Vec<Complex64>,
    ) -> f64 {
        self.step(g, psi, h, scratch); // full step → scratch
        let mut half1 = vec![ZERO; psi.len()];
        self.step(g, psi, 0.5 * h, &mut half1);
        self.step(g, &half1, 0.5 * h, out); // two halves → out
        let mut err: f64 = 0.0;
        for i in 0..psi.len() {
            let d = out[i] - scratch[i];
            err = err.max(d.norm());
            out[i] += d / 15.0;
        }
        err
    }
}

enum SegmentEnd {
    /// Crossed the norm threshold at relative time τ with (unnormalized)
    /// state ψ(τ).
    Crossing(f64, Vec<Complex64>),
    /// Budget exhausted before the crossing.
    BudgetExhausted,
}

/// Evolve from a normalized ψ until ‖ψ(τ)‖² = u or τ = budget.
fn propagate_to_threshold(
    model: &EffectiveModel,
    rk4: &mut Rk4,
    psi0: &[Complex64],
    u: f64,
    budget: f64,
    opts: &TrajectoryOptions,
) -> Result<SegmentEnd> {
    let g = &model.generator;
    let scale = g.norm_one().max(model.rate_scale);
    let mut h = 0.1 / scale;
    let mut tau = 0.0f64;
    let mut psi = psi0.to_vec();
    let mut next = vec![ZERO; psi.len()];
    let mut scratch = vec![ZERO; psi.len()];

    while tau < budget {
        let h_try = h.min(budget - tau);
        let err = rk4.double_step(g, &psi, h_try, &mut next, &mut scratch);
        if !err.is_finite() {
            return Err(Error::NormIntegrationFailure(format!(
                "non-finite error estimate at tau = {tau}"
            )));
        }
        if err > opts.local_tol {
            h = 0.9 * h_try * (opts.local_tol / err).powf(0.2);
            if h < 1e-15 / scale {
                return Err(Error::NormIntegrationFailure(format!(
                    "step size underflow at tau = {tau}"
                )));
            }
            continue;
        }
        let q_new = next.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if q_new <= u {
            let (tau_star, psi_star) =
                bisect_crossing(model, rk4, &psi, tau, h_try, u, opts)?;
            return Ok(SegmentEnd::Crossing(tau_star, psi_star));
        }
        tau += h_try;
        std::mem::swap(&mut psi, &mut next);
        let grow = if err > 0.0 {
            (opts.local_tol / err).powf(0.2)
        } else {
            5.0
        };
        h = h_try * (0.9 * grow).clamp(0.2, 5.0);
    }
    Ok(SegmentEnd::BudgetExhausted)
}

/// Bisection for ‖ψ(τ)‖² = u inside the bracketing step [tau_lo,
/// tau_lo+h]; re-integrates from the stored step start with fixed RK4
/// substeps (their error is far below the threshold's slope scale).
fn bisect_crossing(
    model: &EffectiveModel,
    rk4: &mut Rk4,
    psi_lo: &[Complex64],
    tau_lo: f64,
    h: f64,
    u: f64,
    opts: &TrajectoryOptions,
) -> Result<(f64, Vec<Complex64>)> {
    let g = &model.generator;
    let mut lo = 0.0f64;
    let mut hi = h;
    let eval = |rk4: &mut Rk4, dt: f64| -> Vec<Complex64> {
        // four fixed substeps keep the local error ~ (h/4)^5
        let mut cur = psi_lo.to_vec();
        let mut nxt = vec![ZERO; cur.len()];
        let sub = dt / 4.0;
        for _ in 0..4 {
            rk4.step(g, &cur, sub, &mut nxt);
            std::mem::swap(&mut cur, &mut nxt);
        }
        cur
    };
    let tol = opts.time_rel_tol * (tau_lo + h).max(h);
    let mut psi_hi = eval(rk4, hi);
    for _ in 0..200 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        let psi_mid = eval(rk4, mid);
        let q = psi_mid.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if q <= u {
            hi = mid;
            psi_hi = psi_mid;
        } else {
            lo = mid;
        }
    }
    Ok((tau_lo + hi, psi_hi))
}

/// Run one trajectory from a normalized pure state. Monitored clicks are
/// recorded with absolute time stamps; the trajectory ends in the dark
/// state (`terminated = true`) or at `opts.t_max`.
pub fn run_trajectory(
    model: &EffectiveModel,
    psi0: &[Complex64],
    seed: TrajectorySeed,
    opts: &TrajectoryOptions,
) -> Result<ClickRecord> {
    run_trajectory_observed(model, psi0, seed, opts, |_, _| {})
}

/// Seed of one trajectory: a master seed plus a counter-derived stream,
/// so ensembles are embarrassingly parallel and order-independent.
#[derive(Debug, Clone, Copy)]
pub struct TrajectorySeed {
    pub master: u64,
    pub stream: u64,
}

impl TrajectorySeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// [`run_trajectory`] with an observer called at every accepted
/// integrator state (t_absolute, ψ); lets tests watch the norm decay.
pub fn run_trajectory_observed(
    model: &EffectiveModel,
    psi0: &[Complex64],
    seed: TrajectorySeed,
    opts: &TrajectoryOptions,
    mut observer: impl FnMut(f64, &[Complex64]),
) -> Result<ClickRecord> {
    let d = model.generator.dim();
    if psi0.len() != d {
        return Err(Error::DimensionMismatch(format!(
            "state len {} vs dim {d}",
            psi0.len()
        )));
    }
    let nrm = vec_norm(psi0);
    if (nrm - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidParameter(format!(
            "initial state norm {nrm} (must be 1)"
        )));
    }
    let mut rng = seed.rng();
    let mut rk4 = Rk4::new(d);
    let mut psi: Vec<Complex64> = psi0.to_vec();
    let mut t = 0.0f64;
    let mut clicks = Vec::new();
    let mut weights = Vec::with_capacity(model.channels.len());
    let dark_threshold = 1e-12 * model.rate_scale;

    loop {
        let total_weight = model.jump_weights(&psi, &mut weights);
        if total_weight <= dark_threshold {
            return Ok(ClickRecord {
                clicks,
                terminated: true,
            });
        }
        let u = 1.0 - rng.random::<f64>(); // (0, 1]
        observer(t, &psi);
        match propagate_to_threshold(model, &mut rk4, &psi, u, opts.t_max - t, opts)? {
            SegmentEnd::BudgetExhausted => {
                return Ok(ClickRecord {
                    clicks,
                    terminated: false,
                });
            }
            SegmentEnd::Crossing(tau, psi_at_jump) => {
                t += tau;
                observer(t, &psi_at_jump);
                let total = model.jump_weights(&psi_at_jump, &mut weights);
                if total <= 0.0 {
                    return Err(Error::NormIntegrationFailure(format!(
                        "zero jump weight at crossing, t = {t}"
                    )));
                }
                let draw = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = weights.len() - 1;
                for (k, w) in weights.iter().enumerate() {
                    acc += w;
                    if draw < acc {
                        chosen = k;
                        break;
                    }
                }
                let ch = &model.channels[chosen];
                let mut jumped = ch.op.apply(&psi_at_jump);
                let jn = vec_norm(&jumped);
                if jn == 0.0 {
                    return Err(Error::NormIntegrationFailure(format!(
                        "selected channel {} annihilates the state at t = {t}",
                        ch.label
                    )));
                }
                for z in jumped.iter_mut() {
                    *z /= jn;
                }
                if ch.monitored || opts.record_unmonitored {
                    clicks.push((ch.label, t));
                }
                psi = jumped;
            }
        }
    }
}

/// Aggregated click statistics of an ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleStats {
    pub n_traj: usize,
    pub seed: u64,
    /// Per-channel frequency of the FIRST monitored click, with
    /// √(p(1−p)/n) standard errors; denominator = trajectories with at
    /// least one click.
    pub first_click_freq: BTreeMap<ChannelLabel, (f64, f64)>,
    /// Ordered (first, second) click-pair frequencies; denominator =
    /// trajectories with at least two clicks.
    pub sequence_freq: BTreeMap<(ChannelLabel, ChannelLabel), (f64, f64)>,
    /// Mean first-click time with standard error.
    pub mean_first_click_time: (f64, f64),
    /// Trajectories that hit t_max before reaching the dark state.
    pub non_terminated: usize,
}

/// Run `n_traj` independent trajectories (parallel over a counter-derived
/// seed per trajectory; aggregation is in trajectory-index order, so the
/// result is independent of thread count).
pub fn run_ensemble(
    h: &Operator,
    channels: &[JumpChannel],
    psi0: &[Complex64],
    n_traj: usize,
    seed: u64,
    t_max: f64,
) -> Result<EnsembleStats> {
    if n_traj == 0 {
        return Err(Error::InvalidParameter("n_traj must be >= 1".into()));
    }
    let model = EffectiveModel::new(h, channels)?;
    let opts = TrajectoryOptions {
        t_max,
        ..TrajectoryOptions::default()
    };

    struct Summary {
        first: Option<(ChannelLabel, f64)>,
        second: Option<ChannelLabel>,
        terminated: bool,
    }

    let summaries: Vec<Result<Summary>> = (0..n_traj)
        .into_par_iter()
        .map(|i| {
            let rec = run_trajectory(
                &model,
                psi0,
                TrajectorySeed::new(seed, i as u64),
                &opts,
            )?;
            Ok(Summary {
                first: rec.clicks.first().copied(),
                second: rec.clicks.get(1).map(|(l, _)| *l),
                terminated: rec.terminated,
            })
        })
        .collect();

    let mut first_counts: BTreeMap<ChannelLabel, usize> = BTreeMap::new();
    let mut pair_counts: BTreeMap<(ChannelLabel, ChannelLabel), usize> = BTreeMap::new();
    let mut times = RunningStats::default();
    let mut with_first = 0usize;
    let mut with_pair = 0usize;
    let mut non_terminated = 0usize;
    for ch in channels.iter().filter(|c| c.monitored) {
        first_counts.insert(ch.label, 0);
    }

    for (i, s) in summaries.into_iter().enumerate() {
        let s = s.map_err(|e| Error::TrajectoryFailed {
            index: i,
            source: Box::new(e),
        })?;
        if !s.terminated {
            non_terminated += 1;
        }
        if let Some((label, time)) = s.first {
            with_first += 1;
            *first_counts.entry(label).or_insert(0) += 1;
            times.push(time);
            if let Some(second) = s.second {
                with_pair += 1;
                *pair_counts.entry((label, second)).or_insert(0) += 1;
            }
        }
    }

    let first_click_freq = first_counts
        .into_iter()
        .map(|(label, count)| {
            let p = if with_first > 0 {
                count as f64 / with_first as f64
            } else {
                0.0
            };
            (label, (p, frequency_stderr(p, with_first)))
        })
        .collect();
    let sequence_freq = pair_counts
        .into_iter()
        .map(|(pair, count)| {
            let p = count as f64 / with_pair as f64;
            (pair, (p, frequency_stderr(p, with_pair)))
        })
        .collect();

    Ok(EnsembleStats {
        n_traj,
        seed,
        first_click_freq,
        sequence_freq,
        mean_first_click_time: (times.mean(), times.stderr()),
        non_terminated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{build_model, initial_pure_state, ModelParams};
    use crate::stats::{ks_critical, ks_statistic};
    use approx::assert_abs_diff_eq;

    fn scenario(alpha: f64, coop: f64, n: usize) -> (EffectiveModel, Vec<Complex64>) {
        let p = ModelParams::resonant(alpha, coop, n);
        let (h, channels) = build_model(&p).unwrap();
        let model = EffectiveModel::new(&h, &channels).unwrap();
        let psi0 = initial_pure_state(n, n).unwrap();
        (model, psi0)
    }

    #[test]
    fn one_photon_gives_exactly_one_click() {
        let (model, psi0) = scenario(1.0, 1.0, 1);
        let opts = TrajectoryOptions::default();
        for i in 0..300 {
            let rec =
                run_trajectory(&model, &psi0, TrajectorySeed::new(7, i), &opts).unwrap();
            assert!(rec.terminated, "trajectory {i} hit t_max");
            assert_eq!(rec.clicks.len(), 1, "trajectory {i}");
        }
    }

    #[test]
    fn click_times_strictly_increase() {
        let (model, psi0) = scenario(5.0, 10.0, 2);
        let opts = TrajectoryOptions::default();
        for i in 0..100 {
            let rec =
                run_trajectory(&model, &psi0, TrajectorySeed::new(11, i), &opts).unwrap();
            assert!(rec.terminated);
            assert_eq!(rec.clicks.len(), 2);
            assert!(rec.clicks[0].1 < rec.clicks[1].1);
        }
    }

    #[test]
    fn fixed_seed_replay_is_bitwise_identical() {
        let (model, psi0) = scenario(2.0, 3.0, 2);
        let opts = TrajectoryOptions::default();
        let a = run_trajectory(&model, &psi0, TrajectorySeed::new(42, 5), &opts).unwrap();
        let b = run_trajectory(&model, &psi0, TrajectorySeed::new(42, 5), &opts).unwrap();
        assert_eq!(a, b);
        // different stream → different record (with overwhelming probability)
        let c = run_trajectory(&model, &psi0, TrajectorySeed::new(42, 6), &opts).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bare_cavity_decay_is_exponential() {
        // g = 0: the sole monitored click is the photon leak, and its time
        // is Exp(κ) distributed
        let (model, psi0) = scenario(1.0, 0.0, 1);
        let opts = TrajectoryOptions::default();
        let n = 2000;
        let mut times = Vec::with_capacity(n);
        for i in 0..n {
            let rec =
                run_trajectory(&model, &psi0, TrajectorySeed::new(3, i as u64), &opts)
                    .unwrap();
            assert_eq!(rec.clicks.len(), 1);
            assert_eq!(rec.clicks[0].0, ChannelLabel::PhotonLeak);
            times.push(rec.clicks[0].1);
        }
        times.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = ks_statistic(&times, |t| 1.0 - (-t).exp());
        assert!(
            d < ks_critical(n, 0.01),
            "KS statistic {d} above the 1% critical value"
        );
    }

    #[test]
    fn norm_decreases_between_jumps() {
        let (model, psi0) = scenario(1.0, 2.0, 1);
        let opts = TrajectoryOptions::default();
        let mut last: Option<(f64, f64)> = None; // (t, norm²)
        run_trajectory_observed(
            &model,
            &psi0,
            TrajectorySeed::new(9, 0),
            &opts,
            |t, psi| {
                let q: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
                if let Some((t_prev, q_prev)) = last {
                    if t > t_prev {
                        assert!(q < q_prev + 1e-12, "norm grew between {t_prev} and {t}");
                    }
                }
                last = Some((t, q));
            },
        )
        .unwrap();
    }

    #[test]
    fn unmonitored_recording_changes_nothing_after_filtering() {
        let p = ModelParams::resonant(1.5, 2.5, 2);
        let (h, channels) = build_model(&p).unwrap();
        let model = EffectiveModel::new(&h, &channels).unwrap();
        let psi0 = initial_pure_state(2, 2).unwrap();
        let base = TrajectoryOptions::default();
        let loud = TrajectoryOptions {
            record_unmonitored: true,
            ..base
        };
        for i in 0..50 {
            let seed = TrajectorySeed::new(100, i);
            let a = run_trajectory(&model, &psi0, seed, &base).unwrap();
            let b = run_trajectory(&model, &psi0, seed, &loud).unwrap();
            let filtered: Vec<_> = b
                .clicks
                .iter()
                .filter(|(l, _)| *l != ChannelLabel::ElectronIn)
                .copied()
                .collect();
            assert_eq!(a.clicks, filtered);
            assert_eq!(a.terminated, b.terminated);
        }
    }

    #[test]
    fn zero_photon_scenario_terminates_quietly() {
        // |0,0⟩ → injection (unmonitored) → dark |g,0⟩: no clicks
        let (model, psi0) = scenario(1.0, 1.0, 0);
        let opts = TrajectoryOptions::default();
        let rec = run_trajectory(&model, &psi0, TrajectorySeed::new(1, 0), &opts).unwrap();
        assert!(rec.terminated);
        assert!(rec.clicks.is_empty());
    }

    #[test]
    fn ensemble_reproducible_and_near_closed_form() {
        let p = ModelParams::resonant(1.0, 1.0, 1);
        let (h, channels) = build_model(&p).unwrap();
        let psi0 = initial_pure_state(1, 1).unwrap();
        let n = 20_000;
        let s1 = run_ensemble(&h, &channels, &psi0, n, 12345, 200.0).unwrap();
        let s2 = run_ensemble(&h, &channels, &psi0, n, 12345, 200.0).unwrap();
        assert_eq!(s1, s2);
        assert_eq!(s1.non_terminated, 0);

        // p_e = 0.125, κ⟨t₁⟩ = 1 within 4σ at this n
        let (pe, se) = s1.first_click_freq[&ChannelLabel::ElectronOut];
        assert!((pe - 0.125).abs() < 4.0 * se, "pe = {pe} ± {se}");
        let (tbar, terr) = s1.mean_first_click_time;
        assert!((tbar - 1.0).abs() < 4.0 * terr, "t1 = {tbar} ± {terr}");
        // frequencies over the complete outcome set sum to one
        let total: f64 = s1.first_click_freq.values().map(|(p, _)| p).sum();
        assert_abs_diff_eq!(total, 1.0, epsilon = 1e-12);
    }
}
