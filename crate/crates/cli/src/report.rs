//! JSON run reports.

use std::collections::BTreeMap;

use recc_core::cluster_eval::{ClusteringResult, EvalReport};
use recc_core::pipeline::{RunOutcome, StageTimings};
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema_version: u32,
    pub config: BTreeMap<String, String>,
    pub timings: Timings,
    pub cache: CacheInfo,
    /// Everything that must be identical across reruns with the same config.
    pub metrics: RunMetrics,
    /// SHA-256 of every artifact written, keyed by file name.
    pub artifacts: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub stages: StageTimings,
    /// Time inside the contrastive loss across all fine-tuning epochs.
    pub contrastive_seconds: f64,
    pub total_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheInfo {
    pub similarity_key: String,
    pub similarity_hit: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub graph_hash: String,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub resim: ResimSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub reeig: Option<ReEigSummary>,
    pub feature_schema: Vec<String>,
    pub pretrain: PretrainSummary,
    pub finetune: FinetuneSummary,
    pub clustering: ClusteringSummary,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub eval: Option<EvalReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResimSummary {
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReEigSummary {
    pub r: usize,
    pub drop_index: usize,
    pub degenerate: bool,
    pub leading_eigenvalues: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PretrainSummary {
    pub epochs: usize,
    pub first_l_re: f64,
    pub last_l_re: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FinetuneSummary {
    pub epochs: usize,
    pub loss_mask: String,
    pub first_l_con: f64,
    pub last_l_con: f64,
    pub first_l_kl: f64,
    pub last_l_kl: f64,
    pub first_total: f64,
    pub last_total: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringSummary {
    pub k: usize,
    pub inertia: f64,
    pub sizes: Vec<usize>,
    pub influential_cluster: Option<usize>,
    pub influential_tie: bool,
    pub n_influential: usize,
}

impl ClusteringSummary {
    pub fn new(r: &ClusteringResult) -> Self {
        let sizes = r.cluster_sizes();
        Self {
            k: r.k(),
            inertia: r.inertia,
            n_influential: r.influential_cluster.map_or(0, |c| sizes[c]),
            sizes,
            influential_cluster: r.influential_cluster,
            influential_tie: r.influential_tie,
        }
    }
}

impl RunMetrics {
    pub fn from_outcome(graph_hash: String, n_edges: usize, out: &RunOutcome, loss_mask: String) -> Self {
        let pre = &out.history.pretrain;
        let ft = &out.history.finetune;
        let (pf, pl) = (pre.first(), pre.last());
        let (ff, fl) = (ft.first(), ft.last());
        Self {
            graph_hash,
            n_nodes: out.similarity.n(),
            n_edges,
            resim: ResimSummary {
                alpha: out.similarity.alpha,
                iterations: out.similarity.iterations,
                converged: out.similarity.converged,
            },
            reeig: out.reeig.as_ref().map(|re| ReEigSummary {
                r: re.r,
                drop_index: re.drop_index,
                degenerate: re.degenerate,
                leading_eigenvalues: re.eigenvalues.iter().take(re.drop_index + 1).copied().collect(),
            }),
            feature_schema: out.features.schema.clone(),
            pretrain: PretrainSummary {
                epochs: pre.len(),
                first_l_re: pf.map_or(f64::NAN, |r| r.l_re),
                last_l_re: pl.map_or(f64::NAN, |r| r.l_re),
            },
            finetune: FinetuneSummary {
                epochs: ft.len(),
                loss_mask,
                first_l_con: ff.map_or(f64::NAN, |r| r.l_con),
                last_l_con: fl.map_or(f64::NAN, |r| r.l_con),
                first_l_kl: ff.map_or(f64::NAN, |r| r.l_kl),
                last_l_kl: fl.map_or(f64::NAN, |r| r.l_kl),
                first_total: ff.map_or(f64::NAN, |r| r.total),
                last_total: fl.map_or(f64::NAN, |r| r.total),
            },
            clustering: ClusteringSummary::new(&out.clustering),
            eval: out.eval,
        }
    }
}

impl RunReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    /// Canonical serialization of [`RunReport::metrics`] used for
    /// reproducibility comparisons.
    pub fn metrics_json(&self) -> String {
        serde_json::to_string(&self.metrics).expect("metrics serialize")
    }
}
