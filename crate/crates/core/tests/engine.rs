//! Engine-level integration tests: the superoperator machinery against
//! the closed forms, against an independently computed set of frozen
//! reference values, and against its own marginalization identities.

use jumptime_core::algebra::eigvalsh;
use jumptime_core::quadrature::integrate_adaptive;
use jumptime_core::*;

fn scenario(alpha: f64, coop: f64, n: usize) -> (WtdScenario, DensityMatrix) {
    let params = ModelParams::resonant(alpha, coop, n);
    let (h, channels) = build_model(&params).unwrap();
    let engine = WtdScenario::new(&h, &channels).unwrap();
    let rho = initial_state(n, n).unwrap();
    (engine, rho)
}

#[test]
fn one_photon_probability_examples() {
    let (engine, rho) = scenario(1.0, 1.0, 1);
    let pe = engine
        .first_jump_probability(ChannelLabel::ElectronOut, &rho)
        .unwrap();
    assert!((pe - 0.125).abs() <= 1e-9, "pe = {pe}");

    let (engine0, rho0) = scenario(1.0, 0.0, 1);
    let pe0 = engine0
        .first_jump_probability(ChannelLabel::ElectronOut, &rho0)
        .unwrap();
    assert!(pe0 <= 1e-12, "pe at C=0 must vanish, got {pe0}");
}

#[test]
fn one_photon_channel_probabilities_sum_to_one() {
    for &(a, c) in &[(0.3, 0.7), (2.0, 5.0), (7.7, 0.2), (1.0, 25.0), (0.1, 12.0)] {
        let (engine, rho) = scenario(a, c, 1);
        let table = engine.first_jump_table(&rho).unwrap();
        let pe = table.get(&[ChannelLabel::ElectronOut]).unwrap();
        let pg = table.get(&[ChannelLabel::PhotonLeak]).unwrap();
        assert!((pe + pg - 1.0).abs() <= 1e-9, "alpha={a} C={c}");
        assert!((pe - closed_form_pe(a, c)).abs() <= 1e-9);
    }
}

// Reference values computed with an independent implementation of the
// same model (different language, different SVD, different expm).
#[test]
fn frozen_reference_values() {
    let (engine, rho) = scenario(2.3, 3.7, 1);
    let pe = engine
        .first_jump_probability(ChannelLabel::ElectronOut, &rho)
        .unwrap();
    assert!((pe - 0.382412129027216).abs() <= 1e-10, "pe = {pe:.15}");
    let t1 = engine.mean_first_jump_time(&rho).unwrap();
    assert!((t1 - 0.783854014028095).abs() <= 1e-10, "t1 = {t1:.15}");

    let (engine2, rho2) = scenario(2.3, 3.7, 2);
    use ChannelLabel::{ElectronOut as E, PhotonLeak as G};
    let checks = [
        ((E, E), 0.063962093180545),
        ((E, G), 0.103297489676443),
        ((G, E), 0.425991498972126),
        ((G, G), 0.406748918170885),
    ];
    for ((i, j), want) in checks {
        let p = engine2.two_jump_probability(i, j, &rho2).unwrap();
        assert!((p - want).abs() <= 1e-10, "p_{i}{j} = {p:.15} want {want}");
    }

    // density values at t = 0.7 for (α, C) = (1, 1), n = 1
    let (engine11, rho11) = scenario(1.0, 1.0, 1);
    let w_e = engine11.wtd_time_density(E, &rho11, 0.7).unwrap();
    let w_g = engine11.wtd_time_density(G, &rho11, 0.7).unwrap();
    assert!((w_e - 0.011713804447833).abs() <= 1e-10, "W_e = {w_e:.15}");
    assert!((w_g - 0.484871499343577).abs() <= 1e-10, "W_g = {w_g:.15}");
}

#[test]
fn density_at_time_zero() {
    let (engine, rho) = scenario(1.5, 2.0, 1);
    // the dot starts empty: no photocurrent click density at t = 0
    let w_e = engine
        .wtd_time_density(ChannelLabel::ElectronOut, &rho, 0.0)
        .unwrap();
    assert!(w_e.abs() <= 1e-12);
    // one photon present: leak density κ = 1 at t = 0
    let w_g = engine
        .wtd_time_density(ChannelLabel::PhotonLeak, &rho, 0.0)
        .unwrap();
    assert!((w_g - 1.0).abs() <= 1e-12);
    // same statements through the channel-sum total density
    let w_tot = engine.first_jump_time_density(&rho, 0.0).unwrap();
    assert!((w_tot - 1.0).abs() <= 1e-12);
}

#[test]
fn time_marginal_matches_first_jump_probability() {
    for &(a, c) in &[(0.6, 1.4), (1.0, 1.0), (3.1, 0.5), (5.0, 10.0), (0.9, 8.0)] {
        let (engine, rho) = scenario(a, c, 1);
        for label in [ChannelLabel::ElectronOut, ChannelLabel::PhotonLeak] {
            let integral = engine.integrated_density(label, &rho, 50.0, 1e-9).unwrap();
            let direct = engine.first_jump_probability(label, &rho).unwrap();
            assert!(
                (integral - direct).abs() <= 1e-6,
                "alpha={a} C={c} {label}: {integral} vs {direct}"
            );
        }
    }
}

#[test]
fn first_jump_density_normalizes_and_gives_mean_time() {
    let (engine, rho) = scenario(1.0, 1.0, 1);
    let norm = integrate_adaptive(
        |t| engine.first_jump_time_density(&rho, t).unwrap(),
        0.0,
        50.0,
        1e-9,
    );
    assert!((norm - 1.0).abs() <= 1e-6, "norm = {norm}");
    let mean = integrate_adaptive(
        |t| t * engine.first_jump_time_density(&rho, t).unwrap(),
        0.0,
        60.0,
        1e-9,
    );
    assert!(
        (mean - closed_form_mean_time(1.0, 1.0)).abs() <= 1e-6,
        "mean = {mean}"
    );
}

#[test]
fn channel_sum_equals_trace_derivative() {
    // the unmonitored injection lives inside 𝓛₀ as a full trace-neutral
    // dissipator, so both definitions of W(t|ρ) coincide
    let (engine, rho) = scenario(2.0, 4.0, 2);
    for &t in &[0.0, 0.3, 1.1, 2.7, 6.0] {
        let a = engine.first_jump_time_density(&rho, t).unwrap();
        let b = no_jump_trace_derivative(&engine.split().no_jump, &rho, t).unwrap();
        assert!((a - b).abs() <= 1e-10, "t={t}: {a} vs {b}");
    }
}

#[test]
fn two_jump_examples() {
    // α → ∞ limit: p_ee → C²/(1+C)² = 1/4 at C = 1
    let (engine, rho) = scenario(1e6, 1.0, 2);
    let p_ee = engine
        .two_jump_probability(ChannelLabel::ElectronOut, ChannelLabel::ElectronOut, &rho)
        .unwrap();
    assert!((p_ee - 0.25).abs() <= 1e-4, "p_ee = {p_ee}");

    // C = 0: both photons leak with certainty
    let (engine0, rho0) = scenario(2.2, 0.0, 2);
    let p_gg = engine0
        .two_jump_probability(ChannelLabel::PhotonLeak, ChannelLabel::PhotonLeak, &rho0)
        .unwrap();
    assert!((p_gg - 1.0).abs() <= 1e-10, "p_gg = {p_gg}");

    // normalization of the complete pair table
    let (engine5, rho5) = scenario(5.0, 10.0, 2);
    let table = engine5.two_jump_table(&rho5).unwrap();
    let sum: f64 = table.entries.values().sum();
    assert!((sum - 1.0).abs() <= 1e-9, "sum = {sum}");
    assert!(table.residual.abs() <= 1e-9);
}

#[test]
fn complement_and_direct_gamma_gamma_agree() {
    let (engine, rho) = scenario(3.0, 6.0, 2);
    let t = engine.two_jump_table(&rho).unwrap();
    use ChannelLabel::{ElectronOut as E, PhotonLeak as G};
    let direct = t.get(&[G, G]).unwrap();
    let complement =
        1.0 - t.get(&[E, E]).unwrap() - t.get(&[E, G]).unwrap() - t.get(&[G, E]).unwrap();
    assert!((direct - complement).abs() <= 1e-10);
}

#[test]
fn mean_first_jump_time_examples() {
    // α = 1: κ⟨t₁⟩ = 1 independent of C
    for &c in &[0.3, 1.0, 7.3, 20.0] {
        let (engine, rho) = scenario(1.0, c, 1);
        let t1 = engine.mean_first_jump_time(&rho).unwrap();
        assert!((t1 - 1.0).abs() <= 1e-10, "C={c}: t1={t1}");
    }
    // α = 0.5, C → ∞: κ⟨t₁⟩ → 10/9
    let (engine, rho) = scenario(0.5, 1e6, 1);
    let t1 = engine.mean_first_jump_time(&rho).unwrap();
    assert!((t1 - 10.0 / 9.0).abs() <= 1e-4, "t1 = {t1}");
    // C = 0: bare cavity decay of one photon
    let (engine0, rho0) = scenario(0.8, 0.0, 1);
    let t0 = engine0.mean_first_jump_time(&rho0).unwrap();
    assert!((t0 - 1.0).abs() <= 1e-10, "t1 = {t0}");
}

#[test]
fn zero_photon_scenario_raises_inconsistent_system() {
    let params = ModelParams::resonant(1.0, 1.0, 1);
    let (h, channels) = build_model(&params).unwrap();
    let engine = WtdScenario::new(&h, &channels).unwrap();
    let rho0 = initial_state(0, 1).unwrap();
    match engine.first_jump_probability(ChannelLabel::ElectronOut, &rho0) {
        Err(Error::InconsistentSystem { .. }) => {}
        other => panic!("expected inconsistent-system error, got {other:?}"),
    }
    match engine.mean_first_jump_time(&rho0) {
        Err(Error::InconsistentSystem { .. }) => {}
        other => panic!("expected inconsistent-system error, got {other:?}"),
    }
}

#[test]
fn dark_state_is_right_null_vector_of_no_jump_generator() {
    let params = ModelParams::resonant(1.7, 2.9, 1);
    let (h, channels) = build_model(&params).unwrap();
    let split = split_monitored(&h, &channels).unwrap();
    // |g,0⟩ at index 1·(n_max+1)+0 = 2
    let dark = Operator::ket_bra(6, 2, 2);
    let image = split.no_jump.apply_to_operator(&dark);
    assert!(image.max_abs() <= 1e-12 * split.no_jump.matrix().max_abs());
}

#[test]
fn full_liouvillian_spectral_abscissa_is_zero() {
    let params = ModelParams::resonant(1.0, 1.0, 2);
    let (h, channels) = build_model(&params).unwrap();
    let liouv = build_liouvillian(&h, &channels).unwrap();
    let spec = spectrum(liouv.matrix()).unwrap();
    let scale = liouv.matrix().max_abs();
    let abscissa = spec
        .eigenvalues
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(abscissa.abs() <= 1e-9 * scale, "abscissa = {abscissa:.3e}");
    // a genuine zero mode exists
    let near_zero = spec.eigenvalues.iter().any(|z| z.norm() <= 1e-9 * scale);
    assert!(near_zero);
}

#[test]
fn no_jump_survival_contracts() {
    let (engine, rho) = scenario(1.0, 1.0, 1);
    let curve = engine.wtd_curve(&rho, 10.0, 101).unwrap();
    let mut prev = 1.0 + 1e-15;
    for p in &curve {
        assert!(p.survival <= prev + 1e-12, "survival grew at t={}", p.t);
        assert!((-1e-12..=1.0 + 1e-12).contains(&p.survival));
        prev = p.survival;
    }
}

#[test]
fn excitation_number_never_grows_without_drive() {
    // evolve ρ₀⁽¹⁾ under the FULL generator with n_max = 2 headroom and
    // check populations above N = 1 stay at numerical zero
    let params = ModelParams::resonant(1.3, 3.0, 2);
    let (h, channels) = build_model(&params).unwrap();
    let liouv = build_liouvillian(&h, &channels).unwrap();
    let rho = initial_state(1, 2).unwrap();
    // N(dqd d, fock k) = k + (d == e)
    let dim = 9;
    let number = |idx: usize| -> usize {
        let d = idx / 3;
        let k = idx % 3;
        k + usize::from(d == 2)
    };
    for &t in &[0.5, 2.0, 8.0] {
        let prop = expm(liouv.matrix(), t).unwrap();
        let evolved = devectorize(&prop.apply(&vectorize(&rho)));
        for i in 0..dim {
            for j in 0..dim {
                if number(i) > 1 || number(j) > 1 {
                    assert!(
                        evolved[(i, j)].norm() <= 1e-12,
                        "support leaked to N>1 at t={t}, ({i},{j})"
                    );
                }
            }
        }
    }
}

#[test]
fn jump_superoperators_are_completely_positive() {
    let params = ModelParams::resonant(2.0, 5.0, 1);
    let (h, channels) = build_model(&params).unwrap();
    let split = split_monitored(&h, &channels).unwrap();
    let mut seed = 5u64;
    let mut lcg = move || {
        seed = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        ((seed >> 11) as f64) / ((1u64 << 53) as f64) - 0.5
    };
    for _ in 0..5 {
        let b = Operator::from_fn(6, |_, _| num_complex::Complex64::new(lcg(), lcg()));
        let pos = &b * &b.dagger();
        let rho = pos.scale(num_complex::Complex64::new(1.0, 0.0) / pos.trace());
        for (_, j) in &split.jumps {
            let img = j.apply_to_operator(&rho);
            let min = eigvalsh(&img).first().copied().unwrap();
            assert!(min >= -1e-10, "jump image eigenvalue {min}");
        }
    }
}

#[test]
fn dyson_one_photon() {
    let (engine, rho) = scenario(1.0, 1.0, 1);
    // t = 0: no time, no jumps
    let p = engine.jump_number_decomposition(&rho, 0.0, 2, 64).unwrap();
    assert!((p[0] - 1.0).abs() <= 1e-12);
    assert!(p[1].abs() <= 1e-12 && p[2].abs() <= 1e-12);

    for &t in &[0.5, 1.0, 2.0, 5.0] {
        let p = engine.jump_number_decomposition(&rho, t, 2, 64).unwrap();
        assert!((p[0] + p[1] - 1.0).abs() <= 1e-6, "t={t}: P0+P1 = {}", p[0] + p[1]);
        assert!(p[2].abs() <= 1e-8, "t={t}: P2 = {}", p[2]);
    }
    // frozen: P0(1) = e^{−1} at (α, C) = (1, 1)
    let p = engine.jump_number_decomposition(&rho, 1.0, 1, 64).unwrap();
    assert!((p[0] - (-1.0f64).exp()).abs() <= 1e-10, "P0 = {}", p[0]);
}

#[test]
fn dyson_two_photon_frozen_values() {
    let (engine, rho) = scenario(1.0, 1.0, 2);
    let p = engine.jump_number_decomposition(&rho, 1.0, 2, 64).unwrap();
    // independently computed: P0 = e^{−2}, P1 by high-precision quadrature
    assert!((p[0] - (-2.0f64).exp()).abs() <= 1e-10, "P0 = {}", p[0]);
    assert!((p[1] - 0.465088315869659).abs() <= 1e-7, "P1 = {}", p[1]);
    assert!((p[2] - 0.399576400893728).abs() <= 1e-7, "P2 = {}", p[2]);
    assert!((p[0] + p[1] + p[2] - 1.0).abs() <= 1e-6);
}

#[test]
fn engine_matches_closed_forms_on_a_coarse_grid() {
    use ChannelLabel::{ElectronOut as E, PhotonLeak as G};
    for &a in &[0.4, 1.0, 6.0] {
        for &c in &[0.5, 4.0, 18.0] {
            let cf = closed_form_two_photon(a, c);
            let (e1, rho1) = scenario(a, c, 1);
            let pe = e1.first_jump_probability(E, &rho1).unwrap();
            assert!((pe - cf.p_e).abs() <= 1e-9, "pe at ({a},{c})");
            let t1 = e1.mean_first_jump_time(&rho1).unwrap();
            assert!((t1 - cf.kappa_t1).abs() <= 1e-9, "t1 at ({a},{c})");

            let (e2, rho2) = scenario(a, c, 2);
            let tbl = e2.two_jump_table(&rho2).unwrap();
            assert!((tbl.get(&[E, E]).unwrap() - cf.p_ee).abs() <= 1e-9);
            assert!((tbl.get(&[E, G]).unwrap() - cf.p_egamma).abs() <= 1e-9);
            assert!((tbl.get(&[G, E]).unwrap() - cf.p_gammae).abs() <= 1e-9);
            assert!((tbl.get(&[G, G]).unwrap() - cf.p_gammagamma).abs() <= 1e-9);
        }
    }
}
