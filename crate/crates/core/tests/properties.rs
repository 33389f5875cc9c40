//! Randomized invariants of the public API.
use nmrb_core::average::{exact_curve, twirl, Superoperator};
use nmrb_core::fit::fit_exponential;
use nmrb_core::learner::{diagnose_markovianity, project_pair, split_truncate, LearningProblem};
use nmrb_core::linalg::random::{gaussian_matrix, haar_unitary};
use nmrb_core::linalg::{project_to_unitary, regroup, svd, Regroup};
use nmrb_core::noise::NoiseModel;
use nmrb_core::process::joint_node;
use nmrb_core::quantum::{DensityMatrix, KrausChannel, PovmElement, UnitaryGate};
use nmrb_core::rb::AsfCurve;
use nmrb_core::{ComplexMatrix, C64};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_joint_noise(seed: u64) -> NoiseModel {
    let mut r = rng(seed);
    let lam = UnitaryGate::new(haar_unitary(&mut r, 4)).unwrap();
    NoiseModel::joint_unitary(lam, DensityMatrix::basis(2, 0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn svd_reconstructs(seed in any::<u64>(), rows in 1usize..7, cols in 1usize..7) {
        let a = gaussian_matrix(&mut rng(seed), rows, cols);
        let f = svd(&a).unwrap();
        prop_assert!(f.reconstruct().distance(&a) < 1e-10 * (1.0 + a.frobenius_norm()));
        prop_assert!(f.s.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(f.s.iter().all(|&s| s >= 0.0));
    }

    #[test]
    fn projection_is_unitary_and_equivariant(seed in any::<u64>()) {
        let mut r = rng(seed);
        let x = gaussian_matrix(&mut r, 4, 4);
        let (u, v) = (haar_unitary(&mut r, 4), haar_unitary(&mut r, 4));
        let p = project_to_unitary(&x).unwrap();
        prop_assert!(p.unitarity_defect() < 1e-12);
        let lhs = project_to_unitary(&(&(&u * &x) * &v)).unwrap();
        prop_assert!(lhs.distance(&(&(&u * &p) * &v)) < 1e-10);
        let w = haar_unitary(&mut r, 4);
        prop_assert!(p.distance(&x) <= w.distance(&x) + 1e-12);
    }

    #[test]
    fn regroup_inverse_round_trips(seed in any::<u64>()) {
        let x = gaussian_matrix(&mut rng(seed), 8, 8);
        let scheme = Regroup::new(&[2, 2, 2, 2, 2, 2], 3, &[0, 3, 1, 4, 2, 5], 2).unwrap();
        let y = regroup(&x, &scheme).unwrap();
        prop_assert_eq!(regroup(&y, &scheme.inverse()).unwrap(), x);
    }

    #[test]
    fn twirl_is_idempotent_and_trace_preserving(seed in any::<u64>()) {
        let u = haar_unitary(&mut rng(seed), 4);
        let l = Superoperator::sandwich(&u, &u);
        let t = twirl(&l, 2, 2).unwrap();
        let tt = twirl(&t, 2, 2).unwrap();
        prop_assert!(tt.matrix().distance(t.matrix()) < 1e-10);
        let rho = nmrb_core::linalg::random::random_density(&mut rng(seed ^ 1), 4);
        prop_assert!((t.apply(&rho).trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn exact_curve_is_a_probability(seed in any::<u64>()) {
        let noise = random_joint_noise(seed);
        let f = exact_curve(&noise, &DensityMatrix::basis(2, 0), &PovmElement::projector(2, 0), 12).unwrap();
        prop_assert!(f.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)));
    }

    #[test]
    fn markovian_curves_are_exponential(p in 0.0f64..0.5) {
        let z = nmrb_core::quantum::pauli_z();
        let k0 = ComplexMatrix::identity(2).scale_real((1.0 - p).sqrt());
        let k1 = z.scale_real(p.sqrt());
        let noise = NoiseModel::markovian(KrausChannel::new(vec![k0, k1]).unwrap());
        let f = exact_curve(&noise, &DensityMatrix::basis(2, 0), &PovmElement::projector(2, 0), 15).unwrap();
        let lengths: Vec<usize> = (1..=15).collect();
        let fit = fit_exponential(&lengths, &f).unwrap();
        prop_assert!(fit.max_residual < 1e-9, "{}", fit.max_residual);
    }

    #[test]
    fn split_of_a_unitary_pair_is_exact(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (haar_unitary(&mut r, 4), haar_unitary(&mut r, 4));
        let l = joint_node(&a, &b, 2, 2).unwrap();
        let s = split_truncate(&l, 2, 2).unwrap();
        prop_assert!(s.discarded < 1e-20);
        prop_assert!(joint_node(&s.upper, &s.lower, 2, 2).unwrap().distance(&l) < 1e-10);
        let lam = project_pair(&s.upper, &s.lower).unwrap();
        prop_assert!(lam.distance(&(&a * &b)) < 1e-9);
    }

    #[test]
    fn split_is_the_best_truncation(seed in any::<u64>()) {
        let l = gaussian_matrix(&mut rng(seed), 8, 8);
        let s = split_truncate(&l, 2, 2).unwrap();
        let back = joint_node(&s.upper, &s.lower, 2, 2).unwrap();
        prop_assert!((back.distance(&l).powi(2) - s.discarded).abs() < 1e-9 * (1.0 + s.discarded));
    }

    #[test]
    fn diagnosis_ignores_global_phase(seed in any::<u64>(), phase in 0.0f64..6.3) {
        let u = haar_unitary(&mut rng(seed), 4);
        let d = diagnose_markovianity(&u, 2, 2, 1e-2).unwrap();
        let e = diagnose_markovianity(&u.scale(C64::from_polar(1.0, phase)), 2, 2, 1e-2).unwrap();
        prop_assert!((d.off_block_norm - e.off_block_norm).abs() < 1e-12);
        prop_assert_eq!(d.markovian, e.markovian);
    }

    #[test]
    fn exact_data_has_zero_cost_and_gradient(seed in any::<u64>(), slot in 1usize..7) {
        let lam = haar_unitary(&mut rng(seed), 4);
        let placeholder = AsfCurve { lengths: (1..=5).collect(), means: vec![0.5; 5], stderrs: vec![0.0; 5], n_samples: 1 };
        let rho = DensityMatrix::basis(2, 0);
        let povm = PovmElement::projector(2, 0);
        let probe = LearningProblem::new(placeholder, rho.clone(), povm.clone(), 2).unwrap();
        let pred = probe.predict(&lam).unwrap();
        let data = AsfCurve { lengths: (1..=5).collect(), means: pred, stderrs: vec![0.0; 5], n_samples: 1 };
        let p = LearningProblem::new(data, rho, povm, 2).unwrap();
        prop_assert!(p.cost(&lam).unwrap() < 1e-26);
        prop_assert!(p.gradient_joint(&lam, slot).unwrap().max_abs() < 1e-11);
    }
}
