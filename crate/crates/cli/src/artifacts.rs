//! Reading inputs and writing CSV / binary artifacts.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use recc_core::graph::{parse_edge_list, parse_labels, Graph, GraphError, LabelVector};
use recc_core::resim::{self, ReSimConfig, ReSimMatrix, ResimError};
use recc_core::structmetrics::{CorrelationKind, CorrelationReport, MetricName, MetricVector};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Graph { path: PathBuf, source: GraphError },
    #[error("{path} line {line}: {reason}")]
    Csv { path: PathBuf, line: usize, reason: String },
    #[error(transparent)]
    Resim(#[from] ResimError),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ArtifactError + '_ {
    move |source| ArtifactError::Io { path: path.to_path_buf(), source }
}

pub fn read_text(path: &Path) -> Result<String, ArtifactError> {
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn read_graph(path: &Path) -> Result<Graph, ArtifactError> {
    parse_edge_list(&read_text(path)?).map_err(|source| ArtifactError::Graph { path: path.to_path_buf(), source })
}

pub fn read_labels(path: &Path, g: &Graph) -> Result<LabelVector, ArtifactError> {
    parse_labels(&read_text(path)?, g).map_err(|source| ArtifactError::Graph { path: path.to_path_buf(), source })
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Writes `bytes` through a temporary sibling and a rename, creating parent
/// directories. Returns the SHA-256 of the content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<String, ArtifactError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let tmp = path.with_extension(format!("tmp{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))?;
    Ok(sha256_hex(bytes))
}

/// `id label` lines readable by [`read_labels`].
pub fn labels_text(g: &Graph, labels: &[usize]) -> String {
    let mut out = String::from("# node label\n");
    for (i, l) in labels.iter().enumerate() {
        out.push_str(&format!("{} {l}\n", g.node_id(i)));
    }
    out
}

pub fn matrix_csv(node_ids: &[String], prefix: &str, m: &DMatrix<f64>) -> String {
    let mut out = String::from("node");
    for j in 0..m.ncols() {
        out.push_str(&format!(",{prefix}{j}"));
    }
    out.push('\n');
    for (i, id) in node_ids.iter().enumerate() {
        out.push_str(id);
        for j in 0..m.ncols() {
            out.push_str(&format!(",{:e}", m[(i, j)]));
        }
        out.push('\n');
    }
    out
}

/// Parses a `node,<col>,...` numeric CSV such as the one from [`matrix_csv`].
pub fn read_matrix_csv(path: &Path) -> Result<(Vec<String>, DMatrix<f64>), ArtifactError> {
    let text = read_text(path)?;
    let bad = |line: usize, reason: String| ArtifactError::Csv { path: path.to_path_buf(), line, reason };
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let cols = header.split(',').count() - 1;
    if cols == 0 {
        return Err(bad(1, "no value columns".into()));
    }
    let mut ids = Vec::new();
    let mut data = Vec::new();
    for (i, line) in lines {
        let mut fields = line.split(',');
        ids.push(fields.next().unwrap_or_default().to_string());
        let row = fields
            .map(|f| f.trim().parse::<f64>().map_err(|e| bad(i + 1, format!("`{f}`: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if row.len() != cols {
            return Err(bad(i + 1, format!("expected {cols} values, found {}", row.len())));
        }
        data.extend(row);
    }
    Ok((ids.clone(), DMatrix::from_row_slice(ids.len(), cols, &data)))
}

pub fn metrics_csv(g: &Graph, metrics: &[MetricVector]) -> String {
    let mut out = String::from("node");
    for m in metrics {
        out.push(',');
        out.push_str(m.metric.as_str());
    }
    out.push('\n');
    for i in 0..g.n_nodes() {
        out.push_str(g.node_id(i));
        for m in metrics {
            out.push_str(&format!(",{:e}", m.values[i]));
        }
        out.push('\n');
    }
    out
}

/// Square correlation matrix over `names`; undefined and cross-group cells
/// are left empty.
pub fn correlation_matrix_csv(names: &[MetricName], reports: &[CorrelationReport]) -> String {
    let lookup = |a: MetricName, b: MetricName| -> Option<f64> {
        if a == b {
            return reports.iter().any(|r| r.metric_pair.0 == a || r.metric_pair.1 == a).then_some(1.0);
        }
        reports
            .iter()
            .find(|r| r.metric_pair == (a, b) || r.metric_pair == (b, a))
            .and_then(|r| r.coefficient)
    };
    let mut out = String::from("metric");
    for n in names {
        out.push(',');
        out.push_str(n.as_str());
    }
    out.push('\n');
    for &a in names {
        out.push_str(a.as_str());
        for &b in names {
            out.push(',');
            if let Some(c) = lookup(a, b) {
                out.push_str(&format!("{c:.6}"));
            }
        }
        out.push('\n');
    }
    out
}

pub fn correlation_kind(kind: CorrelationKind) -> &'static str {
    match kind {
        CorrelationKind::SpearmanGlobal => "spearman_global",
        CorrelationKind::PearsonNeighborhoodRank => "pearson_neighborhood_rank",
    }
}

pub fn similarity_cache_path(cache_dir: &Path, g: &Graph, cfg: &ReSimConfig) -> PathBuf {
    cache_dir.join(format!("resim-{}.bin", resim::cache_key(g, cfg)))
}

/// Loads the similarity matrix from `cache_dir` when present, computing and
/// storing it otherwise. The flag reports a cache hit.
pub fn cached_similarity(g: &Graph, cfg: &ReSimConfig, cache_dir: &Path) -> Result<(ReSimMatrix, bool), ArtifactError> {
    let path = similarity_cache_path(cache_dir, g, cfg);
    if let Ok(bytes) = fs::read(&path) {
        match resim::read_similarity(bytes.as_slice()) {
            Ok(sim) if sim.n() == g.n_nodes() => return Ok((sim, true)),
            Ok(_) | Err(_) => log::warn!("ignoring unreadable cache entry {}", path.display()),
        }
    }
    let sim = resim::compute_re_similarity(g, cfg)?;
    let mut buf = Vec::new();
    resim::write_similarity(&sim, &mut buf).map_err(io_err(&path))?;
    write_atomic(&path, &buf)?;
    Ok((sim, false))
}
