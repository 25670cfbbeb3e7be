//! In-memory end-to-end run: similarity, features, training, clustering
//! and optional evaluation.

use std::time::Instant;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster_eval::{self, ClusteringResult, EvalError, EvalReport};
use crate::features::{self, FeatureCombo, FeatureError, FeatureMatrix, Representatives};
use crate::gcn::{self, GcnError, GcnModel, NormalizedAdjacency};
use crate::graph::{Graph, LabelVector};
use crate::resim::{self, ReEigFeatures, ReSimConfig, ReSimMatrix, ResimError};
use crate::trainer::{self, samples, TrainConfig, TrainError, TrainHistory};

pub const DEFAULT_MAX_DIMS: usize = 64;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("labels cover {got} nodes, graph has {want}")]
    LabelLength { got: usize, want: usize },
    #[error(transparent)]
    Resim(#[from] ResimError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Gcn(#[from] GcnError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl PipelineError {
    pub fn stage(&self) -> &'static str {
        match self {
            Self::LabelLength { .. } => "labels",
            Self::Resim(_) => "resim",
            Self::Features(_) => "features",
            Self::Gcn(_) => "gcn",
            Self::Train(_) => "train",
            Self::Eval(_) => "cluster",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub resim: ReSimConfig,
    pub max_dims: usize,
    pub combo: FeatureCombo,
    pub representatives: Representatives,
    pub k_p: usize,
    pub k_n: usize,
    pub dropout: f64,
    pub train: TrainConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            resim: ReSimConfig::default(),
            max_dims: DEFAULT_MAX_DIMS,
            combo: FeatureCombo::ReEigDegree,
            representatives: Representatives::default(),
            k_p: samples::DEFAULT_K_POS,
            k_n: samples::DEFAULT_K_NEG,
            dropout: gcn::DEFAULT_DROPOUT,
            train: TrainConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub resim: f64,
    pub features: f64,
    pub pretrain: f64,
    pub finetune: f64,
    pub cluster: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub similarity: ReSimMatrix,
    pub reeig: Option<ReEigFeatures>,
    pub features: FeatureMatrix,
    pub model: GcnModel,
    pub embeddings: DMatrix<f64>,
    pub history: TrainHistory,
    pub clustering: ClusteringResult,
    /// Cluster labels for k = 2 remapped so the influential cluster is 1;
    /// raw cluster labels otherwise.
    pub predicted: Vec<usize>,
    pub eval: Option<EvalReport>,
    pub timings: StageTimings,
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

pub fn predicted_labels(r: &ClusteringResult) -> Vec<usize> {
    match (r.k(), r.influential_cluster) {
        (2, Some(c)) => r.labels.iter().map(|&l| usize::from(l == c)).collect(),
        _ => r.labels.clone(),
    }
}

/// Runs every stage from a precomputed similarity matrix.
pub fn run_with_similarity(
    g: &Graph,
    similarity: ReSimMatrix,
    labels: Option<&LabelVector>,
    cfg: &RunConfig,
) -> Result<RunOutcome, PipelineError> {
    if let Some(y) = labels {
        if y.len() != g.n_nodes() {
            return Err(PipelineError::LabelLength { got: y.len(), want: g.n_nodes() });
        }
    }
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let reeig = if cfg.combo.uses_reeig() { Some(resim::re_eigenfeatures(&similarity, cfg.max_dims)?) } else { None };
    let feats = features::build_features(g, reeig.as_ref(), cfg.combo, &cfg.representatives)?;
    let pos_neg = samples::select_samples(&similarity, cfg.k_p, cfg.k_n)?;
    timings.features = secs(t);

    let t = Instant::now();
    let dims = [feats.n_features(), gcn::HIDDEN_DIM, gcn::HIDDEN_DIM, gcn::HIDDEN_DIM];
    let model = GcnModel::new(&dims, cfg.dropout, cfg.train.seed)?;
    let (model, pre) = trainer::pretrain(model, g, &feats.x, cfg.train.epochs_pre, cfg.train.adam, cfg.train.seed)?;
    timings.pretrain = secs(t);

    let t = Instant::now();
    let ft = trainer::finetune(model, g, &feats.x, &pos_neg, &cfg.train)?;
    timings.finetune = secs(t);

    let t = Instant::now();
    let agg = NormalizedAdjacency::new(g);
    let embeddings = ft.model.forward(&agg, &feats.x)?;
    let clustering = cluster_eval::kmeans(&embeddings, cfg.train.k, cfg.train.seed, cfg.train.kmeans_restarts)?;
    let clustering = cluster_eval::label_influential(clustering, g);
    let predicted = predicted_labels(&clustering);
    let eval = labels.map(|y| cluster_eval::evaluate(&predicted, y.as_slice())).transpose()?;
    timings.cluster = secs(t);

    Ok(RunOutcome {
        similarity,
        reeig,
        features: feats,
        model: ft.model,
        embeddings,
        history: TrainHistory { pretrain: pre, finetune: ft.history },
        clustering,
        predicted,
        eval,
        timings,
    })
}

pub fn run_on_graph(g: &Graph, labels: Option<&LabelVector>, cfg: &RunConfig) -> Result<RunOutcome, PipelineError> {
    let t = Instant::now();
    let similarity = resim::compute_re_similarity(g, &cfg.resim)?;
    let resim_secs = secs(t);
    let mut out = run_with_similarity(g, similarity, labels, cfg)?;
    out.timings.resim = resim_secs;
    Ok(out)
}
