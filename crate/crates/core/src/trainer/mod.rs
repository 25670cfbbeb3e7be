//! Contrastive sampling, fine-tuning losses, Adam, and the two-phase
//! training loop.

pub mod adam;
pub mod assignment;
pub mod contrastive;
pub mod samples;
mod train;

use thiserror::Error;

pub use adam::{AdamConfig, AdamState};
pub use assignment::{kl_loss_and_grad, soft_assign, target_distribution, ClusterState, DEFAULT_TAU};
pub use contrastive::{contrastive_grad, contrastive_loss};
pub use samples::{select_samples, ContrastiveSamples, DEFAULT_K_NEG, DEFAULT_K_POS};
pub use train::{
    finetune, pretrain, FinetuneOutcome, FinetuneRecord, LossMask, PretrainRecord, TrainConfig, TrainHistory,
};

use crate::cluster_eval::EvalError;
use crate::gcn::GcnError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("need more than k_p + k_n nodes with k_p, k_n >= 1 (n = {n}, k_p = {k_p}, k_n = {k_n})")]
    TooFewNodes { n: usize, k_p: usize, k_n: usize },
    #[error("temperature must be positive and finite, got {0}")]
    InvalidTau(f64),
    #[error("need at least two clusters, got {0}")]
    TooFewClusters(usize),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape { expected: (usize, usize), got: (usize, usize) },
    #[error("soft cluster {0} has zero total assignment")]
    EmptySoftCluster(usize),
    #[error("KL divergence undefined: q = 0 where p > 0 (node {node}, cluster {cluster})")]
    UndefinedKl { node: usize, cluster: usize },
    #[error("expected {expected} parameter tensors, got {got}")]
    ParamCount { expected: usize, got: usize },
    #[error("epoch count must be at least 1")]
    ZeroEpochs,
    #[error("loss mask disables every fine-tuning loss")]
    EmptyLossMask,
    #[error("{phase} epoch {epoch}: non-finite loss {loss}")]
    NonFinite { phase: &'static str, epoch: usize, loss: f64 },
    #[error("sample lists cover {got} nodes, graph has {want}")]
    SampleMismatch { got: usize, want: usize },
    #[error(transparent)]
    Gcn(#[from] GcnError),
    #[error(transparent)]
    Cluster(#[from] EvalError),
}
