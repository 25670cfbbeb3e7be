//! Timing harness comparing the sampled contrastive loss with a
//! full-pairwise softmax loss.

use std::hint::black_box;
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::gcn::HIDDEN_DIM;
use crate::trainer::contrastive::{contrastive_loss, full_pairwise_loss};
use crate::trainer::samples::ContrastiveSamples;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub n: usize,
    pub recc_seconds: f64,
    pub baseline_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchReport {
    pub dim: usize,
    pub k_p: usize,
    pub k_n: usize,
    pub reps: usize,
    pub records: Vec<BenchRecord>,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,recc_seconds,baseline_seconds\n");
        for r in &self.records {
            out.push_str(&format!("{},{:e},{:e}\n", r.n, r.recc_seconds, r.baseline_seconds));
        }
        out
    }
}

/// `n` random unit-norm embeddings of width `dim`.
pub fn random_unit_embeddings(n: usize, dim: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let mut z = DMatrix::from_fn(n, dim, |_, _| StandardNormal.sample(rng));
    for mut row in z.row_iter_mut() {
        let norm = row.norm();
        row /= norm;
    }
    z
}

/// Random disjoint positive/negative lists excluding each node itself.
pub fn random_samples(n: usize, k_p: usize, k_n: usize, rng: &mut ChaCha8Rng) -> ContrastiveSamples {
    let (mut pos, mut neg) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for i in 0..n {
        let picked: Vec<usize> = sample(rng, n - 1, k_p + k_n).into_iter().map(|j| if j >= i { j + 1 } else { j }).collect();
        pos.push(picked[..k_p].to_vec());
        neg.push(picked[k_p..].to_vec());
    }
    ContrastiveSamples { pos, neg, k_p, k_n }
}

/// Mean wall time of `f`, over at least `reps` calls and at least
/// `min_total` of accumulated time, after one warm-up call.
pub fn mean_seconds<F: FnMut() -> f64>(reps: usize, min_total: Duration, mut f: F) -> f64 {
    black_box(f());
    let mut calls = 0usize;
    let start = Instant::now();
    while calls < reps.max(1) || start.elapsed() < min_total {
        black_box(f());
        calls += 1;
    }
    start.elapsed().as_secs_f64() / calls as f64
}

const MIN_TOTAL: Duration = Duration::from_millis(100);

/// Times both losses at each size on random unit embeddings.
pub fn bench_contrastive(sizes: &[usize], k_p: usize, k_n: usize, reps: usize, seed: u64) -> Result<BenchReport, EvalError> {
    if sizes.len() < 2 {
        return Err(EvalError::BenchSizes("need at least two sizes".into()));
    }
    if sizes.windows(2).any(|w| w[0] >= w[1]) {
        return Err(EvalError::BenchSizes("sizes must be strictly increasing".into()));
    }
    if sizes[0] <= k_p + k_n {
        return Err(EvalError::BenchSizes(format!("smallest size must exceed k_p + k_n = {}", k_p + k_n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut records = Vec::with_capacity(sizes.len());
    for &n in sizes {
        let z = random_unit_embeddings(n, HIDDEN_DIM, &mut rng);
        let s = random_samples(n, k_p, k_n, &mut rng);
        let recc_seconds = mean_seconds(reps, MIN_TOTAL, || contrastive_loss(black_box(&z), &s));
        let baseline_seconds = mean_seconds(reps, Duration::ZERO, || full_pairwise_loss(black_box(&z), &s));
        log::info!("n = {n}: sampled {recc_seconds:.3e} s, full-pairwise {baseline_seconds:.3e} s");
        records.push(BenchRecord { n, recc_seconds, baseline_seconds });
    }
    Ok(BenchReport { dim: HIDDEN_DIM, k_p, k_n, reps, records })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = random_samples(20, 2, 3, &mut rng);
        for i in 0..20 {
            assert!(!s.pos[i].contains(&i) && !s.neg[i].contains(&i));
            assert!(s.pos[i].iter().all(|j| !s.neg[i].contains(j)));
            assert_eq!((s.pos[i].len(), s.neg[i].len()), (2, 3));
        }
    }

    #[test]
    fn embeddings_are_unit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let z = random_unit_embeddings(10, 16, &mut rng);
        assert!(z.row_iter().all(|r| (r.norm() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn small_report() {
        let r = bench_contrastive(&[50, 100], 2, 1, 2, 0).unwrap();
        assert_eq!(r.records.len(), 2);
        assert!(r.records.iter().all(|x| x.recc_seconds > 0.0 && x.baseline_seconds > 0.0));
        assert!(r.to_csv().starts_with("n,recc_seconds,baseline_seconds\n50,"));
        assert!(bench_contrastive(&[100], 2, 1, 1, 0).is_err());
        assert!(bench_contrastive(&[100, 50], 2, 1, 1, 0).is_err());
    }
}
