use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recc_core::gcn::{self, GcnModel, NormalizedAdjacency};
use recc_core::gradcheck::{max_relative_error, numeric_gradient, DEFAULT_STEP};
use recc_core::graph::Graph;
use recc_core::synthetic::gnp;
use recc_core::trainer::assignment::{kl_loss, kl_loss_and_grad, ClusterState};
use recc_core::trainer::contrastive::{contrastive_loss, contrastive_loss_and_grad};
use recc_core::trainer::samples::select_from_similarity;

const TOL: f64 = 1e-4;

fn random_matrix(rows: usize, cols: usize, scale: f64, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-scale..scale))
}

fn fixture(seed: u64) -> (Graph, DMatrix<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(5..=10);
    let dim = rng.random_range(2..=16);
    let g = (0..).find_map(|s| gnp(n, 0.4, seed * 1000 + s)).unwrap();
    (g, random_matrix(n, dim, 0.6, &mut rng))
}

#[test]
fn reconstruction_gradient() {
    for seed in 0..6 {
        let (g, z) = fixture(seed);
        let (_, analytic) = gcn::reconstruction_loss_and_grad(&z, &g);
        let numeric = numeric_gradient(&z, DEFAULT_STEP, |m| gcn::reconstruction_loss(m, &g));
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < TOL, "seed {seed}: {err}");
    }
}

#[test]
fn contrastive_gradient() {
    for seed in 0..6 {
        let (_, z) = fixture(seed);
        let n = z.nrows();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 77);
        let s = random_matrix(n, n, 1.0, &mut rng);
        let s = &s + s.transpose();
        let samples = select_from_similarity(&s, 2, 2).unwrap();
        let analytic = contrastive_loss_and_grad(&z, &samples).grad;
        let numeric = numeric_gradient(&z, DEFAULT_STEP, |m| contrastive_loss(m, &samples));
        let err = max_relative_error(&analytic, &numeric);
        assert!(err < TOL, "seed {seed}: {err}");
    }
}

#[test]
fn kl_gradient_with_fixed_targets() {
    for seed in 0..6 {
        let (_, z) = fixture(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 99);
        for tau in [1.0, 0.5, 3.0] {
            let centroids = random_matrix(3, z.ncols(), 0.6, &mut rng);
            let state = ClusterState::new(&z, centroids, tau).unwrap();
            let (_, analytic) = kl_loss_and_grad(&z, &state).unwrap();
            let numeric = numeric_gradient(&z, DEFAULT_STEP, |m| kl_loss(m, &state).unwrap());
            let err = max_relative_error(&analytic, &numeric);
            assert!(err < TOL, "seed {seed}, tau {tau}: {err}");
        }
    }
}

#[test]
fn gcn_backprop_all_layers() {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).unwrap();
    let agg = NormalizedAdjacency::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let x = random_matrix(6, 3, 1.0, &mut rng);
    let model = GcnModel::new(&[3, 8, 8, 8], 0.0, 11).unwrap();
    let (z, cache) = model.forward_train(&agg, &x, false, 0).unwrap();
    let (_, dz) = gcn::reconstruction_loss_and_grad(&z, &g);
    let grads = model.backward(&cache, &dz).unwrap();
    for l in 0..3 {
        let numeric = numeric_gradient(&model.layers()[l], DEFAULT_STEP, |w| {
            let mut layers = model.layers().to_vec();
            layers[l] = w.clone();
            let m = GcnModel::from_layers(layers, 0.0).unwrap();
            gcn::reconstruction_loss(&m.forward(&agg, &x).unwrap(), &g)
        });
        let err = max_relative_error(&grads[l], &numeric);
        assert!(err < TOL, "layer {l}: {err}");
    }
}

#[test]
fn dropout_backprop_uses_same_masks() {
    let g = Graph::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5), (5, 0)]).unwrap();
    let agg = NormalizedAdjacency::new(&g);
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let x = random_matrix(6, 2, 1.0, &mut rng);
    let model = GcnModel::new(&[2, 6, 6, 4], 0.3, 2).unwrap();
    let (z, cache) = model.forward_train(&agg, &x, true, 123).unwrap();
    let (_, dz) = gcn::reconstruction_loss_and_grad(&z, &g);
    let grads = model.backward(&cache, &dz).unwrap();
    for l in 0..3 {
        let numeric = numeric_gradient(&model.layers()[l], DEFAULT_STEP, |w| {
            let mut layers = model.layers().to_vec();
            layers[l] = w.clone();
            let m = GcnModel::from_layers(layers, 0.3).unwrap();
            gcn::reconstruction_loss(&m.forward_train(&agg, &x, true, 123).unwrap().0, &g)
        });
        assert!(max_relative_error(&grads[l], &numeric) < TOL, "layer {l}");
    }
}
