//! Final clustering, evaluation against ground truth, and the contrastive
//! loss timing harness.

pub mod bench;
pub mod kmeans;
pub mod metrics;

use thiserror::Error;

pub use bench::{bench_contrastive, BenchRecord, BenchReport};
pub use kmeans::{kmeans, label_influential, ClusteringResult, DEFAULT_RESTARTS};
pub use metrics::{accuracy, ari, evaluate, nmi, EvalReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("k-means needs k >= 2, got {0}")]
    TooFewClusters(usize),
    #[error("k-means needs at least k = {k} points, got {n}")]
    TooFewPoints { n: usize, k: usize },
    #[error("label vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("cannot evaluate empty labelings")]
    Empty,
    #[error("benchmark sizes: {0}")]
    BenchSizes(String),
}
