//! Shared fixtures for the criterion benchmarks.

use nalgebra::DMatrix;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use recc_core::cluster_eval::bench::{random_samples, random_unit_embeddings};
use recc_core::gcn::HIDDEN_DIM;
use recc_core::trainer::ContrastiveSamples;

/// `n` random unit embeddings of the encoder's output width with random
/// positive/negative lists.
pub fn embedding_fixture(n: usize, k_p: usize, k_n: usize, seed: u64) -> (DMatrix<f64>, ContrastiveSamples) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let z = random_unit_embeddings(n, HIDDEN_DIM, &mut rng);
    let s = random_samples(n, k_p, k_n, &mut rng);
    (z, s)
}
