use std::f64::consts::PI;

use postq_core::aq::{aq_bound, membership_sdp, MembershipVerdict};
use postq_core::assemblage::validate_tripartite_ns;
use postq_core::constructions::{add_noise, behaviour, lift_qutrit, prbox_product};
use postq_core::functional::{evaluate_functional, expand_minimal, MinimalFunctional};
use postq_core::ghjw::ghjw_realize;
use postq_core::locality::{cover_noisy_measurement, enumerate_strategies, is_local, octagon_set, BehaviourDims, DeterministicStrategy};
use postq_core::random::{random_bipartite_ns, random_hermitian, random_ns_assemblage};
use postq_core::search::{affinity_deviation, random_functional};
use postq_core::{HermitianMatrix, Scenario};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn scenarios() -> impl Strategy<Value = Scenario> {
    (2usize..=3, 2usize..=3, 2usize..=3, 1usize..=3, 1usize..=3)
        .prop_map(|(d, ob, oc, sb, sc)| Scenario::new(d, ob, oc, sb, sc).unwrap())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn valid_assemblages_have_setting_independent_marginals(seed: u64, s in scenarios()) {
        let asm = random_ns_assemblage(&mut rng(seed), s);
        prop_assert!(validate_tripartite_ns(&asm, 1e-10).passed);
        let rho = asm.reduced_state(0, 0);
        for y in 0..s.set_b {
            for z in 0..s.set_c {
                prop_assert!(asm.reduced_state(y, z).max_abs_diff(&rho) <= 1e-10);
                for b in 0..s.out_b {
                    prop_assert!(asm.bob_marginal(b, y, z).max_abs_diff(&asm.bob_marginal(b, y, 0)) <= 1e-10);
                }
                for c in 0..s.out_c {
                    prop_assert!(asm.charlie_marginal(c, z, y).max_abs_diff(&asm.charlie_marginal(c, z, 0)) <= 1e-10);
                }
            }
        }
    }

    #[test]
    fn noise_and_lifting_preserve_traces(seed: u64, mu in 0.0f64..=1.0) {
        let asm = random_ns_assemblage(&mut rng(seed), Scenario::qubit_2222());
        let noisy = add_noise(&asm, mu).unwrap();
        let lifted = lift_qutrit(&asm).unwrap();
        for ((a, n), l) in asm.blocks().iter().zip(noisy.blocks()).zip(lifted.blocks()) {
            prop_assert!((a.trace() - n.trace()).abs() <= 1e-14);
            prop_assert!((a.trace() - l.trace()).abs() <= 1e-14);
        }
    }

    #[test]
    fn minimal_form_round_trips(seed: u64) {
        let mut r = rng(seed);
        let mut h = || random_hermitian(&mut r, 2);
        let fmin = MinimalFunctional { f_a: h(), f_b: vec![h(), h()], f_c: vec![h(), h()], f_yz: vec![vec![h(), h()], vec![h(), h()]] };
        let back = MinimalFunctional::of(&expand_minimal(&fmin).unwrap()).unwrap();
        let (a, b) = (fmin.word_coefficients().unwrap(), back.word_coefficients().unwrap());
        prop_assert!(a.iter().zip(&b).all(|(x, y)| x.max_abs_diff(y) <= 1e-12));
    }

    #[test]
    fn prbox_marginals_are_uniform(seed: u64) {
        let rho = postq_core::random::random_density(&mut rng(seed), 2, 2, true);
        let asm = prbox_product(&rho).unwrap();
        for y in 0..2 {
            for z in 0..2 {
                for k in 0..2 {
                    prop_assert!((asm.bob_marginal(k, y, z).trace() - 0.5).abs() <= 1e-12);
                    prop_assert!((asm.charlie_marginal(k, z, y).trace() - 0.5).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn behaviours_of_valid_assemblages_do_not_signal(seed: u64) {
        let asm = random_ns_assemblage(&mut rng(seed), Scenario::qubit_2222());
        let p = behaviour(&asm, &octagon_set().povms).unwrap();
        prop_assert!(p.check(1e-10).is_ok());
        prop_assert!(p.signaling_deviation() <= 1e-10);
    }

    #[test]
    fn ghjw_reconstructs_valid_assemblages(seed: u64, dim in 2usize..=3, settings in 2usize..=3, outcomes in 2usize..=3, deficient: bool) {
        let mut r = rng(seed);
        let rank = if deficient { dim - 1 } else { dim };
        let complex = r.random_bool(0.5);
        let asm = random_bipartite_ns(&mut r, dim, outcomes, settings, rank, complex);
        let tol = 1e-10;
        let real = ghjw_realize(&asm, tol).unwrap();
        prop_assert!(real.reconstruct().unwrap().max_abs_diff(&asm) <= 10.0 * tol);
        for y in 0..settings {
            for b in 0..outcomes {
                let p = real.steer(real.effect(b, y).unwrap()).trace();
                prop_assert!((p - asm.block(b, y).trace()).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn covering_reconstructs_the_bloch_vector(theta in 0.0f64..2.0 * PI, mu in 0.0f64..=0.9238795325112867) {
        let cov = cover_noisy_measurement(theta, mu).unwrap();
        let (mut x, mut z, mut total) = (0.0, 0.0, 0.0);
        for (ap, row) in cov.coefficients.iter().enumerate() {
            let sign = if ap == 0 { 1.0 } else { -1.0 };
            for (k, &c) in row.iter().enumerate() {
                let th = k as f64 * PI / 4.0;
                x += c * sign * th.cos();
                z += c * sign * th.sin();
                total += c;
            }
        }
        prop_assert!((total - 1.0).abs() <= 1e-10);
        prop_assert!((x - mu * theta.cos()).abs() <= 1e-10);
        prop_assert!((z - mu * theta.sin()).abs() <= 1e-10);
    }

    #[test]
    fn affinity_in_the_visibility(seed: u64) {
        let mut r = rng(seed);
        let asm = random_ns_assemblage(&mut r, Scenario::qubit_2222());
        let sym = r.random_bool(0.5);
        let f = random_functional(&mut r, Scenario::qubit_2222(), sym).unwrap();
        let mus: Vec<f64> = (0..10).map(|_| r.random::<f64>()).collect();
        prop_assert!(affinity_deviation(&f, &asm, &mus).unwrap() <= 1e-10);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn deterministic_behaviours_are_their_own_model(a in proptest::collection::vec(0usize..2, 4), b in proptest::collection::vec(0usize..2, 2), c in proptest::collection::vec(0usize..2, 2)) {
        let dims = BehaviourDims { n_x: 4, n_y: 2, n_z: 2, n_a: 2, n_b: 2, n_c: 2 };
        let strategy = DeterministicStrategy { a, b, c };
        let cert = is_local(&strategy.behaviour(dims).unwrap(), 1e-7).unwrap();
        prop_assert!(cert.local);
        let index = enumerate_strategies(dims, 1 << 20).unwrap().iter().position(|s| *s == strategy).unwrap();
        prop_assert!((cert.weights[index] - 1.0).abs() <= 1e-9, "{}", cert.weights[index]);
    }

    #[test]
    fn locality_survives_depolarization(seed: u64, mu in 0.0f64..=1.0) {
        let asm = random_ns_assemblage(&mut rng(seed), Scenario::qubit_2222());
        let p = behaviour(&asm, &octagon_set().povms).unwrap();
        if is_local(&p, 1e-7).unwrap().local {
            let q = behaviour(&add_noise(&asm, mu).unwrap(), &octagon_set().povms).unwrap();
            prop_assert!(is_local(&q, 1e-7).unwrap().local);
        }
    }

    #[test]
    fn bound_is_scale_covariant(seed: u64, lambda in 0.1f64..10.0) {
        let f = random_functional(&mut rng(seed), Scenario::qubit_2222(), false).unwrap();
        let a = aq_bound(&f).unwrap().value;
        let b = aq_bound(&f.scale(lambda)).unwrap().value;
        prop_assert!((b - lambda * a).abs() <= 1e-8 * lambda.max(1.0), "{} vs {}", b, lambda * a);
    }

    #[test]
    fn bound_never_exceeds_values_on_members(seed: u64) {
        let mut r = rng(seed);
        let asm = random_ns_assemblage(&mut r, Scenario::qubit_2222());
        let m = membership_sdp(&asm).unwrap();
        if m.verdict == MembershipVerdict::In {
            prop_assert!(m.moment_matrix.as_ref().unwrap().min_eigenvalue() >= -1e-8);
            let f = random_functional(&mut r, Scenario::qubit_2222(), false).unwrap();
            prop_assert!(aq_bound(&f).unwrap().value <= evaluate_functional(&f, &asm).unwrap() + 1e-7);
        }
    }
}

#[test]
fn identity_functional_is_flat_on_valid_assemblages() {
    let f = postq_core::SteeringFunctional::from_fn(Scenario::qubit_2222(), |_| HermitianMatrix::identity(2).scale(0.25)).unwrap();
    let asm = random_ns_assemblage(&mut rng(1), Scenario::qubit_2222());
    assert!((evaluate_functional(&f, &asm).unwrap() - 1.0).abs() < 1e-12);
}
