//! File-backed pipeline runs.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use recc_core::pipeline::{run_with_similarity, PipelineError, RunOutcome};
use recc_core::resim;
use thiserror::Error;

use crate::artifacts::{self, ArtifactError};
use crate::config::{ConfigError, PipelineConfig};
use crate::report::{CacheInfo, RunMetrics, RunReport, Timings, SCHEMA_VERSION};

#[derive(Debug, Error)]
pub enum RunError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("input: {0}")]
    Input(ArtifactError),
    #[error("stage resim: {0}")]
    Similarity(ArtifactError),
    #[error("stage {stage}: {0}", stage = .0.stage())]
    Stage(#[from] PipelineError),
    #[error("writing artifacts: {0}")]
    Output(ArtifactError),
}

/// Name of the report file inside the output directory.
pub const REPORT_FILE: &str = "report.json";

pub fn cache_dir(out_dir: &Path) -> PathBuf {
    out_dir.join("cache")
}

/// A completed run: the report plus the in-memory outcome.
pub struct PipelineRun {
    pub report: RunReport,
    pub outcome: RunOutcome,
}

/// Parses inputs, runs every stage, writes artifacts under `out_dir`, and
/// returns the report.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, RunError> {
    run_pipeline_in(cfg, &cache_dir(&cfg.out_dir))
}

/// Like [`run_pipeline`], with the similarity cache at `cache`.
pub fn run_pipeline_in(cfg: &PipelineConfig, cache: &Path) -> Result<PipelineRun, RunError> {
    let started = Instant::now();
    cfg.validate()?;
    let edges = cfg.edges.as_ref().expect("validated");
    let g = artifacts::read_graph(edges).map_err(RunError::Input)?;
    let labels = cfg.labels.as_ref().map(|p| artifacts::read_labels(p, &g)).transpose().map_err(RunError::Input)?;
    log::info!("graph: {} nodes, {} edges", g.n_nodes(), g.n_edges());

    let t = Instant::now();
    let (sim, hit) = artifacts::cached_similarity(&g, &cfg.run.resim, cache).map_err(RunError::Similarity)?;
    let resim_seconds = t.elapsed().as_secs_f64();
    log::info!("similarity: alpha {:.6e}, {} iterations (cache hit: {hit})", sim.alpha, sim.iterations);

    let mut outcome = run_with_similarity(&g, sim, labels.as_ref(), &cfg.run)?;
    outcome.timings.resim = resim_seconds;

    let out = &cfg.out_dir;
    let mut hashes = BTreeMap::new();
    let mut write = |name: &str, bytes: &[u8]| -> Result<(), RunError> {
        let h = artifacts::write_atomic(&out.join(name), bytes).map_err(RunError::Output)?;
        hashes.insert(name.to_string(), h);
        Ok(())
    };
    write("config.txt", cfg.to_text().as_bytes())?;
    write("features.csv", outcome.features.to_csv(g.node_ids()).as_bytes())?;
    write("embeddings.csv", artifacts::matrix_csv(g.node_ids(), "z", &outcome.embeddings).as_bytes())?;
    write("history.csv", outcome.history.to_csv().as_bytes())?;
    write("predictions.txt", artifacts::labels_text(&g, &outcome.predicted).as_bytes())?;
    let mut ckpt = Vec::new();
    outcome.model.write_checkpoint(&mut ckpt).expect("in-memory write");
    write("model.ckpt", &ckpt)?;

    let metrics = RunMetrics::from_outcome(g.content_hash(), g.n_edges(), &outcome, cfg.run.train.loss_mask.to_string());
    let report = RunReport {
        schema_version: SCHEMA_VERSION,
        config: cfg.echo().into_iter().collect(),
        timings: Timings {
            stages: outcome.timings.clone(),
            contrastive_seconds: outcome.history.finetune.iter().map(|r| r.con_seconds).sum(),
            total_seconds: started.elapsed().as_secs_f64(),
        },
        cache: CacheInfo { similarity_key: resim::cache_key(&g, &cfg.run.resim), similarity_hit: hit },
        metrics,
        artifacts: hashes,
    };
    artifacts::write_atomic(&out.join(REPORT_FILE), report.to_json().as_bytes()).map_err(RunError::Output)?;
    Ok(PipelineRun { report, outcome })
}
