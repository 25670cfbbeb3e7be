use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recc_core::cluster_eval::kmeans::inertia_trace;
use recc_core::cluster_eval::{ari, evaluate, kmeans, EvalError};
use recc_core::trainer::assignment::{soft_assign, target_distribution};

#[test]
fn identity_swap_and_constant() {
    let truth = [0, 0, 1, 1];
    let e = evaluate(&truth, &truth).unwrap();
    assert_eq!((e.acc, e.nmi, e.ari), (1.0, 1.0, 1.0));
    let e = evaluate(&[1, 1, 0, 0], &truth).unwrap();
    assert_eq!((e.acc, e.ari), (1.0, 1.0));
    let e = evaluate(&[0, 0, 0, 0], &truth).unwrap();
    assert_eq!((e.acc, e.nmi, e.ari), (0.5, 0.0, 0.0));
    assert!(matches!(evaluate(&[0, 1], &truth), Err(EvalError::LengthMismatch { .. })));
}

#[test]
fn random_labelings_have_ari_near_zero() {
    let mean = (0..100)
        .map(|seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a: Vec<usize> = (0..1000).map(|_| rng.random_range(0..2)).collect();
            let b: Vec<usize> = (0..1000).map(|_| rng.random_range(0..2)).collect();
            ari(&a, &b).unwrap()
        })
        .sum::<f64>()
        / 100.0;
    assert!(mean.abs() < 0.05, "{mean}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn relabeling_invariance(labels in proptest::collection::vec(0usize..4, 4..60), truth_seed in 0u64..100, shift in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(truth_seed);
        let truth: Vec<usize> = labels.iter().map(|_| rng.random_range(0..3)).collect();
        let relabeled: Vec<usize> = labels.iter().map(|l| (l + shift) % 4).collect();
        let a = evaluate(&labels, &truth).unwrap();
        let b = evaluate(&relabeled, &truth).unwrap();
        prop_assert!((a.acc - b.acc).abs() < 1e-12);
        prop_assert!((a.nmi - b.nmi).abs() < 1e-12);
        prop_assert!((a.ari - b.ari).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&a.acc));
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&a.nmi));
    }

    #[test]
    fn assignments_are_distributions(seed in 0u64..500, k in 2usize..5, tau in 0.2f64..4.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(12, 3, |_, _| rng.random_range(-2.0..2.0));
        let c = DMatrix::from_fn(k, 3, |_, _| rng.random_range(-2.0..2.0));
        let q = soft_assign(&z, &c, tau).unwrap();
        let p = target_distribution(&q).unwrap();
        for m in [&q, &p] {
            for row in m.row_iter() {
                prop_assert!((row.sum() - 1.0).abs() < 1e-12);
                prop_assert!(row.iter().all(|&v| v > 0.0));
            }
        }
    }

    #[test]
    fn lloyd_inertia_is_monotone(seed in 0u64..200) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let z = DMatrix::from_fn(40, 2, |_, _| rng.random_range(-5.0..5.0));
        let trace = inertia_trace(&z, 3, seed).unwrap();
        prop_assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-9));
        let r = kmeans(&z, 3, seed, 4).unwrap();
        prop_assert!(r.cluster_sizes().iter().all(|&s| s > 0));
    }
}
