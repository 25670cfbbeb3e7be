use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::adam::{AdamConfig, AdamState};
use super::assignment::{self, ClusterState};
use super::contrastive;
use super::samples::ContrastiveSamples;
use super::TrainError;
use crate::cluster_eval::kmeans;
use crate::gcn::{self, GcnModel, NormalizedAdjacency};
use crate::graph::Graph;

/// Which fine-tuning losses contribute gradient.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LossMask {
    pub use_con: bool,
    pub use_kl: bool,
}

impl LossMask {
    pub const BOTH: Self = Self { use_con: true, use_kl: true };
    pub const CON_ONLY: Self = Self { use_con: true, use_kl: false };
    pub const KL_ONLY: Self = Self { use_con: false, use_kl: true };
}

impl Default for LossMask {
    fn default() -> Self {
        Self::BOTH
    }
}

impl fmt::Display for LossMask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match (self.use_con, self.use_kl) {
            (true, true) => "both",
            (true, false) => "con",
            (false, true) => "kl",
            (false, false) => "none",
        })
    }
}

impl FromStr for LossMask {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "both" | "con+kl" => Ok(Self::BOTH),
            "con" | "con-only" | "contrastive" => Ok(Self::CON_ONLY),
            "kl" | "kl-only" => Ok(Self::KL_ONLY),
            other => Err(format!("unknown loss mask `{other}` (expected both, con or kl)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs_pre: usize,
    pub epochs_ft: usize,
    pub adam: AdamConfig,
    pub k: usize,
    pub tau: f64,
    pub loss_mask: LossMask,
    pub kmeans_restarts: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs_pre: 100,
            epochs_ft: 100,
            adam: AdamConfig::default(),
            k: 2,
            tau: assignment::DEFAULT_TAU,
            loss_mask: LossMask::BOTH,
            kmeans_restarts: crate::cluster_eval::DEFAULT_RESTARTS,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PretrainRecord {
    pub epoch: usize,
    pub l_re: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FinetuneRecord {
    pub epoch: usize,
    pub l_con: f64,
    pub l_kl: f64,
    /// Sum of the losses enabled by the mask.
    pub total: f64,
    /// Wall-clock seconds spent on the contrastive loss and its gradient.
    pub con_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub pretrain: Vec<PretrainRecord>,
    pub finetune: Vec<FinetuneRecord>,
}

impl TrainHistory {
    /// Loss curves only; wall-clock timings are left out so the output is
    /// reproducible.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("phase,epoch,l_re,l_con,l_kl,total\n");
        for r in &self.pretrain {
            out.push_str(&format!("pretrain,{},{:e},,,{:e}\n", r.epoch, r.l_re, r.l_re));
        }
        for r in &self.finetune {
            out.push_str(&format!("finetune,{},,{:e},{:e},{:e}\n", r.epoch, r.l_con, r.l_kl, r.total));
        }
        out
    }
}

fn epoch_seed(seed: u64, phase: u64, epoch: usize) -> u64 {
    let mut x = seed ^ (phase << 56) ^ (epoch as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    x ^= x >> 31;
    x.wrapping_mul(0xBF58_476D_1CE4_E5B9)
}

fn finite(phase: &'static str, epoch: usize, loss: f64) -> Result<f64, TrainError> {
    if loss.is_finite() {
        Ok(loss)
    } else {
        Err(TrainError::NonFinite { phase, epoch, loss })
    }
}

/// Full-batch reconstruction training without dropout.
pub fn pretrain(
    mut model: GcnModel,
    g: &Graph,
    x: &DMatrix<f64>,
    epochs: usize,
    adam: AdamConfig,
    seed: u64,
) -> Result<(GcnModel, Vec<PretrainRecord>), TrainError> {
    if epochs == 0 {
        return Err(TrainError::ZeroEpochs);
    }
    let agg = NormalizedAdjacency::new(g);
    let mut opt = AdamState::new(adam, model.layers());
    let mut history = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let (z, cache) = model.forward_train(&agg, x, false, epoch_seed(seed, 1, epoch))?;
        let (l_re, dz) = gcn::reconstruction_loss_and_grad(&z, g);
        finite("pretrain", epoch, l_re)?;
        let grads = model.backward(&cache, &dz)?;
        opt.step(model.layers_mut(), &grads)?;
        history.push(PretrainRecord { epoch, l_re });
    }
    Ok((model, history))
}

#[derive(Debug, Clone)]
pub struct FinetuneOutcome {
    pub model: GcnModel,
    pub history: Vec<FinetuneRecord>,
    pub state: ClusterState,
}

/// Means of the embeddings assigned to each cluster by argmax `Q`. An empty
/// cluster takes the point farthest from its own centroid.
fn hard_centroids(z: &DMatrix<f64>, q: &DMatrix<f64>, old: &DMatrix<f64>) -> DMatrix<f64> {
    let k = q.ncols();
    let labels: Vec<usize> = q.row_iter().map(|r| r.transpose().argmax().0).collect();
    let mut counts = vec![0usize; k];
    labels.iter().for_each(|&l| counts[l] += 1);
    let mut c = DMatrix::zeros(k, z.ncols());
    for (i, &l) in labels.iter().enumerate() {
        let mut row = c.row_mut(l);
        row += z.row(i);
    }
    for (j, &count) in counts.iter().enumerate() {
        if count > 0 {
            let mut row = c.row_mut(j);
            row /= count as f64;
        }
    }
    let mut taken = vec![false; z.nrows()];
    for j in 0..k {
        if counts[j] > 0 {
            continue;
        }
        let far = (0..z.nrows())
            .filter(|&i| !taken[i] && counts[labels[i]] > 1)
            .map(|i| (i, (z.row(i) - old.row(labels[i])).norm_squared()))
            .fold(None, |best: Option<(usize, f64)>, cur| match best {
                Some(b) if b.1 >= cur.1 => Some(b),
                _ => Some(cur),
            });
        match far {
            Some((i, _)) => {
                log::debug!("cluster {j} emptied; re-seeding at node {i}");
                taken[i] = true;
                counts[labels[i]] -= 1;
                counts[j] = 1;
                c.set_row(j, &z.row(i));
            }
            None => c.set_row(j, &old.row(j)),
        }
    }
    c
}

/// Joint contrastive + KL fine-tuning.
///
/// Centroids start from k-means on the pre-trained embeddings. Each epoch
/// takes one Adam step on the enabled losses (with `P` and the centroids
/// fixed), then refreshes centroids, `Q` and `P` from eval-mode embeddings.
pub fn finetune(
    mut model: GcnModel,
    g: &Graph,
    x: &DMatrix<f64>,
    samples: &ContrastiveSamples,
    cfg: &TrainConfig,
) -> Result<FinetuneOutcome, TrainError> {
    if cfg.epochs_ft == 0 {
        return Err(TrainError::ZeroEpochs);
    }
    if !cfg.loss_mask.use_con && !cfg.loss_mask.use_kl {
        return Err(TrainError::EmptyLossMask);
    }
    if samples.n() != g.n_nodes() {
        return Err(TrainError::SampleMismatch { got: samples.n(), want: g.n_nodes() });
    }
    let agg = NormalizedAdjacency::new(g);
    let z0 = model.forward(&agg, x)?;
    let init = kmeans(&z0, cfg.k, cfg.seed, cfg.kmeans_restarts)?;
    let mut state = ClusterState::new(&z0, init.centroid_matrix(), cfg.tau)?;
    let mut opt = AdamState::new(cfg.adam, model.layers());
    let mut history = Vec::with_capacity(cfg.epochs_ft);
    for epoch in 0..cfg.epochs_ft {
        let (z, cache) = model.forward_train(&agg, x, true, epoch_seed(cfg.seed, 2, epoch))?;
        let started = Instant::now();
        let con = contrastive::contrastive_loss_and_grad(&z, samples);
        let con_seconds = started.elapsed().as_secs_f64();
        let (l_kl, kl_grad) = assignment::kl_loss_and_grad(&z, &state)?;
        let mut dz = DMatrix::zeros(z.nrows(), z.ncols());
        let mut total = 0.0;
        if cfg.loss_mask.use_con {
            dz += &con.grad;
            total += con.loss;
        }
        if cfg.loss_mask.use_kl {
            dz += &kl_grad;
            total += l_kl;
        }
        finite("finetune", epoch, total)?;
        let grads = model.backward(&cache, &dz)?;
        opt.step(model.layers_mut(), &grads)?;
        history.push(FinetuneRecord { epoch, l_con: con.loss, l_kl, total, con_seconds });

        let z_eval = model.forward(&agg, x)?;
        let q = assignment::soft_assign(&z_eval, &state.centroids, cfg.tau)?;
        let centroids = hard_centroids(&z_eval, &q, &state.centroids);
        state = ClusterState::new(&z_eval, centroids, cfg.tau)?;
    }
    Ok(FinetuneOutcome { model, history, state })
}
