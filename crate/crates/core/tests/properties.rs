//! Property tests for the algebra/superoperator invariants.

use jumptime_core::*;
use num_complex::Complex64;
use proptest::prelude::*;

fn complex_entry() -> impl Strategy<Value = Complex64> {
    (-1.0f64..1.0, -1.0f64..1.0).prop_map(|(re, im)| Complex64::new(re, im))
}

fn operator(dim: usize) -> impl Strategy<Value = Operator> {
    proptest::collection::vec(complex_entry(), dim * dim)
        .prop_map(move |data| Operator::from_vec(dim, data).unwrap())
}

fn density(dim: usize) -> impl Strategy<Value = Operator> {
    operator(dim).prop_map(|b| {
        let p = &b * &b.dagger();
        let tr = p.trace() + Complex64::new(1e-9, 0.0);
        p.scale(Complex64::new(1.0, 0.0) / tr)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn kron_is_associative(a in operator(2), b in operator(3), c in operator(2)) {
        let left = kron(&kron(&a, &b), &c);
        let right = kron(&a, &kron(&b, &c));
        let scale = left.max_abs().max(1.0);
        prop_assert!((&left - &right).max_abs() <= 1e-14 * scale);
    }

    #[test]
    fn expm_semigroup(m in operator(4), s in 0.05f64..1.5, t in 0.05f64..1.5) {
        // contractive scaling keeps the comparison well conditioned
        let m = m.scale(Complex64::new(1.0 / m.norm_one().max(1.0), 0.0));
        let es = expm(&m, s).unwrap();
        let et = expm(&m, t).unwrap();
        let est = expm(&m, s + t).unwrap();
        prop_assert!((&(&es * &et) - &est).max_abs() <= 1e-9);
    }

    #[test]
    fn vectorize_roundtrip(rho in density(3)) {
        let back = devectorize(&vectorize_operator(&rho));
        prop_assert!((&back - &rho).max_abs() == 0.0);
    }

    #[test]
    fn sandwich_superoperator_identity(a in operator(2), b in operator(2), x in operator(2)) {
        let lhs = kron(&b.transpose(), &a).apply(&vectorize_operator(&x));
        let rhs = vectorize_operator(&(&(&a * &x) * &b));
        let diff: f64 = lhs.iter().zip(rhs.iter()).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        prop_assert!(diff <= 1e-13 * (1.0 + rhs.iter().map(|z| z.norm()).fold(0.0, f64::max)));
    }

    #[test]
    fn lindblad_generator_annihilates_trace(h0 in operator(3), l1 in operator(3), rho in density(3)) {
        let h = &(&h0 + &h0.dagger()) * Complex64::new(0.5, 0.0);
        let channels = vec![
            JumpChannel::new(ChannelLabel::PhotonLeak, l1, 0.8, true).unwrap(),
        ];
        let liouv = build_liouvillian(&h, &channels).unwrap();
        let img = liouv.apply_to_operator(&rho);
        prop_assert!(img.trace().norm() <= 1e-12 * liouv.matrix().norm_one().max(1.0));
    }

    #[test]
    fn jump_images_stay_positive(l in operator(3), rho in density(3)) {
        let ch = JumpChannel::new(ChannelLabel::PhotonLeak, l, 1.3, true).unwrap();
        let split = split_monitored(&Operator::zeros(3), &[ch]).unwrap();
        let img = split.jumps[0].1.apply_to_operator(&rho);
        let min = algebra::eigvalsh(&img).first().copied().unwrap();
        prop_assert!(min >= -1e-10);
    }

    #[test]
    fn min_norm_solve_consistent_residual(m in operator(5), x0 in proptest::collection::vec(complex_entry(), 5)) {
        let b = m.apply(&x0);
        let bn = algebra::vec_norm(&b);
        prop_assume!(bn > 1e-6);
        let x = solve_min_norm(&m, &b).unwrap();
        let r: Vec<Complex64> = m.apply(&x).iter().zip(b.iter()).map(|(p, q)| q - p).collect();
        prop_assert!(algebra::vec_norm(&r) <= 1e-10 * bn);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn first_jump_probabilities_are_complete(alpha in 0.1f64..10.0, coop in 0.1f64..25.0) {
        let params = ModelParams::resonant(alpha, coop, 1);
        let (h, channels) = build_model(&params).unwrap();
        let engine = WtdScenario::new(&h, &channels).unwrap();
        let rho = initial_state(1, 1).unwrap();
        let table = engine.first_jump_table(&rho).unwrap();
        let sum: f64 = table.entries.values().sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        let pe = table.get(&[ChannelLabel::ElectronOut]).unwrap();
        prop_assert!((pe - closed_form_pe(alpha, coop)).abs() <= 1e-9);
    }

    #[test]
    fn no_jump_survival_monotone(alpha in 0.2f64..5.0, coop in 0.0f64..10.0) {
        let params = ModelParams::resonant(alpha, coop, 1);
        let (h, channels) = build_model(&params).unwrap();
        let engine = WtdScenario::new(&h, &channels).unwrap();
        let rho = initial_state(1, 1).unwrap();
        let curve = engine.wtd_curve(&rho, 10.0, 101).unwrap();
        let mut prev = 1.0 + 1e-15;
        for p in &curve {
            prop_assert!(p.survival <= prev + 1e-12);
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(&p.survival));
            prev = p.survival;
        }
    }
}
