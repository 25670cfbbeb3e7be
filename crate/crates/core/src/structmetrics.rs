//! Global and local structural metrics, plus the correlation machinery used
//! to pick representative metrics.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{self, Graph, GraphError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("graph has no nodes")]
    EmptyGraph,
    #[error("metric vectors differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("need at least two metric vectors, got {0}")]
    TooFewVectors(usize),
    #[error("unknown metric `{0}`")]
    UnknownMetric(String),
    #[error("pagerank did not converge in {0} iterations")]
    PageRankNoConvergence(usize),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricName {
    EC,
    PR,
    CC,
    BC,
    Deg,
    EXTD,
    ACCD,
    NM,
    CE,
    DE,
    LCC,
    CoreDC,
    CoreDJ,
    CoreDP,
    SPA,
}

impl MetricName {
    pub const GLOBAL: [MetricName; 4] = [Self::EC, Self::PR, Self::CC, Self::BC];
    pub const LOCAL: [MetricName; 11] = [
        Self::Deg,
        Self::EXTD,
        Self::ACCD,
        Self::NM,
        Self::CE,
        Self::DE,
        Self::LCC,
        Self::CoreDC,
        Self::CoreDJ,
        Self::CoreDP,
        Self::SPA,
    ];

    pub fn is_global(self) -> bool {
        Self::GLOBAL.contains(&self)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Self::EC => "EC",
            Self::PR => "PR",
            Self::CC => "CC",
            Self::BC => "BC",
            Self::Deg => "Deg",
            Self::EXTD => "EXTD",
            Self::ACCD => "ACCD",
            Self::NM => "NM",
            Self::CE => "CE",
            Self::DE => "DE",
            Self::LCC => "LCC",
            Self::CoreDC => "CoreDC",
            Self::CoreDJ => "CoreDJ",
            Self::CoreDP => "CoreDP",
            Self::SPA => "SPA",
        }
    }
}

impl fmt::Display for MetricName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetricName {
    type Err = MetricsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::GLOBAL
            .iter()
            .chain(Self::LOCAL.iter())
            .copied()
            .find(|m| m.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| MetricsError::UnknownMetric(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricVector {
    pub metric: MetricName,
    pub values: Vec<f64>,
}

pub const PAGERANK_DAMPING: f64 = 0.85;
const PAGERANK_TOL: f64 = 1e-10;
const PAGERANK_MAX_ITER: usize = 10_000;

/// Principal adjacency eigenvector scaled to unit 1-norm.
pub fn eigenvector_centrality(g: &Graph) -> Result<Vec<f64>, MetricsError> {
    if g.n_edges() == 0 {
        return Ok(vec![0.0; g.n_nodes()]);
    }
    let (_, mut v) = graph::principal_eigenpair(g, graph::DEFAULT_EIG_TOL, graph::DEFAULT_EIG_MAX_ITER)?;
    let total: f64 = v.iter().map(|x| x.abs()).sum();
    v.iter_mut().for_each(|x| *x = x.abs() / total);
    Ok(v)
}

/// `PR_i = β + α Σ_j A_ji PR_j / k_j` with `β = (1 − α)/n`, renormalized to
/// sum 1 (isolated nodes leak mass otherwise).
pub fn pagerank(g: &Graph, damping: f64) -> Result<Vec<f64>, MetricsError> {
    let n = g.n_nodes();
    let beta = (1.0 - damping) / n as f64;
    let mut pr = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..PAGERANK_MAX_ITER {
        for (i, out) in next.iter_mut().enumerate() {
            let inflow: f64 = g.neighbors(i).iter().map(|&j| pr[j] / g.degree(j) as f64).sum();
            *out = beta + damping * inflow;
        }
        let total: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= total);
        let diff: f64 = pr.iter().zip(&next).map(|(a, b)| (a - b).abs()).sum();
        std::mem::swap(&mut pr, &mut next);
        if diff < PAGERANK_TOL {
            return Ok(pr);
        }
    }
    Err(MetricsError::PageRankNoConvergence(PAGERANK_MAX_ITER))
}

fn bfs_distances(g: &Graph, s: usize, dist: &mut [usize], queue: &mut VecDeque<usize>) {
    dist.fill(usize::MAX);
    dist[s] = 0;
    queue.clear();
    queue.push_back(s);
    while let Some(u) = queue.pop_front() {
        for &v in g.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
}

/// Closeness within each connected component: `(|comp| − 1) / Σ_j l_ij`.
pub fn closeness(g: &Graph) -> Vec<f64> {
    let n = g.n_nodes();
    let mut dist = vec![0; n];
    let mut queue = VecDeque::new();
    (0..n)
        .map(|s| {
            bfs_distances(g, s, &mut dist, &mut queue);
            let (reached, total) = dist
                .iter()
                .filter(|&&d| d != usize::MAX)
                .fold((0usize, 0usize), |(c, t), &d| (c + 1, t + d));
            if total == 0 {
                0.0
            } else {
                (reached - 1) as f64 / total as f64
            }
        })
        .collect()
}

/// Brandes betweenness over unordered pairs `{p, q}`, unnormalized.
pub fn betweenness(g: &Graph) -> Vec<f64> {
    let n = g.n_nodes();
    let mut bc = vec![0.0; n];
    let mut sigma = vec![0.0f64; n];
    let mut dist = vec![usize::MAX; n];
    let mut delta = vec![0.0f64; n];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::new();
    for s in 0..n {
        sigma.fill(0.0);
        dist.fill(usize::MAX);
        delta.fill(0.0);
        order.clear();
        sigma[s] = 1.0;
        dist[s] = 0;
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &v in g.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
                if dist[v] == dist[u] + 1 {
                    sigma[v] += sigma[u];
                }
            }
        }
        for &w in order.iter().rev() {
            for &v in g.neighbors(w) {
                if dist[v] != usize::MAX && dist[v] + 1 == dist[w] {
                    delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
                }
            }
            if w != s {
                bc[w] += delta[w];
            }
        }
    }
    // Each unordered pair was accumulated from both endpoints.
    bc.iter_mut().for_each(|x| *x /= 2.0);
    bc
}

pub fn compute_global_metrics(g: &Graph) -> Result<Vec<MetricVector>, MetricsError> {
    if g.n_nodes() == 0 {
        return Err(MetricsError::EmptyGraph);
    }
    Ok(vec![
        MetricVector { metric: MetricName::EC, values: eigenvector_centrality(g)? },
        MetricVector { metric: MetricName::PR, values: pagerank(g, PAGERANK_DAMPING)? },
        MetricVector { metric: MetricName::CC, values: closeness(g) },
        MetricVector { metric: MetricName::BC, values: betweenness(g) },
    ])
}

fn intersection_size(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut c) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                c += 1;
                i += 1;
                j += 1;
            }
        }
    }
    c
}

fn pairs(k: usize) -> usize {
    k * k.saturating_sub(1) / 2
}

/// Pearson correlation of adjacency rows `u` and `v` over all `n` columns.
fn adjacency_row_pearson(g: &Graph, u: usize, v: usize) -> f64 {
    let n = g.n_nodes() as f64;
    let (du, dv) = (g.degree(u) as f64, g.degree(v) as f64);
    let common = intersection_size(g.neighbors(u), g.neighbors(v)) as f64;
    let cov = common - du * dv / n;
    let var_u = du - du * du / n;
    let var_v = dv - dv * dv / n;
    if var_u <= 0.0 || var_v <= 0.0 {
        return 0.0;
    }
    cov / (var_u.sqrt() * var_v.sqrt())
}

/// Evaluates a single local metric for every node.
pub fn local_metric(g: &Graph, metric: MetricName) -> Vec<f64> {
    let n = g.n_nodes();
    let d = |i: usize| g.degree(i) as f64;
    let total_volume = 2.0 * g.n_edges() as f64;
    let mut in_ego = vec![false; n];
    (0..n)
        .map(|u| {
            let nbrs = g.neighbors(u);
            match metric {
                MetricName::Deg => d(u),
                MetricName::EXTD => d(u) + nbrs.iter().map(|&v| d(v)).sum::<f64>(),
                MetricName::ACCD => {
                    d(u) + nbrs
                        .iter()
                        .map(|&v| d(v) + g.neighbors(v).iter().map(|&w| d(w)).sum::<f64>())
                        .sum::<f64>()
                }
                MetricName::SPA => nbrs.iter().map(|&v| d(u) * d(v)).sum(),
                MetricName::CoreDC => nbrs
                    .iter()
                    .map(|&v| intersection_size(nbrs, g.neighbors(v)) as f64 / (d(u) * d(v)).sqrt())
                    .sum(),
                MetricName::CoreDJ => nbrs
                    .iter()
                    .map(|&v| {
                        let common = intersection_size(nbrs, g.neighbors(v));
                        let union = nbrs.len() + g.degree(v) - common;
                        common as f64 / union as f64
                    })
                    .sum(),
                MetricName::CoreDP => nbrs.iter().map(|&v| adjacency_row_pearson(g, u, v)).sum(),
                MetricName::LCC => {
                    let links: usize = nbrs.iter().map(|&v| intersection_size(nbrs, g.neighbors(v))).sum::<usize>() / 2;
                    match pairs(nbrs.len()) {
                        0 => 0.0,
                        p => links as f64 / p as f64,
                    }
                }
                MetricName::NM | MetricName::DE | MetricName::CE => {
                    in_ego[u] = true;
                    nbrs.iter().for_each(|&v| in_ego[v] = true);
                    let ego: Vec<usize> = std::iter::once(u).chain(nbrs.iter().copied()).collect();
                    let (mut internal2, mut cut, mut vol) = (0usize, 0usize, 0usize);
                    for &v in &ego {
                        vol += g.degree(v);
                        for &w in g.neighbors(v) {
                            if in_ego[w] {
                                internal2 += 1;
                            } else {
                                cut += 1;
                            }
                        }
                    }
                    ego.iter().for_each(|&v| in_ego[v] = false);
                    let internal = internal2 / 2;
                    match metric {
                        MetricName::NM => internal as f64,
                        MetricName::DE => match pairs(ego.len()) {
                            0 => 0.0,
                            p => internal as f64 / p as f64,
                        },
                        _ => {
                            let denom = (vol as f64).min(total_volume - vol as f64);
                            if denom > 0.0 {
                                cut as f64 / denom
                            } else {
                                0.0
                            }
                        }
                    }
                }
                MetricName::EC | MetricName::PR | MetricName::CC | MetricName::BC => {
                    unreachable!("{metric} is a global metric")
                }
            }
        })
        .collect()
}

pub fn compute_local_metrics(g: &Graph) -> Vec<MetricVector> {
    MetricName::LOCAL
        .iter()
        .map(|&metric| MetricVector { metric, values: local_metric(g, metric) })
        .collect()
}

/// Computes any named metric.
pub fn compute_metric(g: &Graph, metric: MetricName) -> Result<MetricVector, MetricsError> {
    let values = match metric {
        MetricName::EC => eigenvector_centrality(g)?,
        MetricName::PR => pagerank(g, PAGERANK_DAMPING)?,
        MetricName::CC => closeness(g),
        MetricName::BC => betweenness(g),
        m => local_metric(g, m),
    };
    Ok(MetricVector { metric, values })
}

/// Fraction of each node's neighbors whose metric value exceeds its own.
pub fn neighborhood_ranks(g: &Graph, values: &[f64]) -> Vec<f64> {
    (0..g.n_nodes())
        .map(|i| {
            let nbrs = g.neighbors(i);
            if nbrs.is_empty() {
                return 0.0;
            }
            let above = nbrs.iter().filter(|&&j| values[j] > values[i]).count();
            above as f64 / nbrs.len() as f64
        })
        .collect()
}

/// Pearson correlation; `None` when either input is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return None;
    }
    Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their average rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let avg = (start + end + 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn spearman(a: &[f64], b: &[f64]) -> Option<f64> {
    pearson(&average_ranks(a), &average_ranks(b))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrelationKind {
    SpearmanGlobal,
    PearsonNeighborhoodRank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub metric_pair: (MetricName, MetricName),
    /// `None` when either vector is constant.
    pub coefficient: Option<f64>,
    pub kind: CorrelationKind,
}

/// Pairwise correlations within the global group (Spearman on raw values)
/// and within the local group (Pearson on neighborhood ranks).
pub fn correlation_analysis(vectors: &[MetricVector], g: &Graph) -> Result<Vec<CorrelationReport>, MetricsError> {
    if vectors.len() < 2 {
        return Err(MetricsError::TooFewVectors(vectors.len()));
    }
    for v in vectors {
        if v.values.len() != g.n_nodes() {
            return Err(MetricsError::LengthMismatch(v.values.len(), g.n_nodes()));
        }
    }
    let ranked: Vec<Option<Vec<f64>>> = vectors
        .iter()
        .map(|v| (!v.metric.is_global()).then(|| neighborhood_ranks(g, &v.values)))
        .collect();
    let mut out = Vec::new();
    for i in 0..vectors.len() {
        for j in i + 1..vectors.len() {
            let (a, b) = (&vectors[i], &vectors[j]);
            if a.metric.is_global() != b.metric.is_global() {
                continue;
            }
            let (coefficient, kind) = if a.metric.is_global() {
                (spearman(&a.values, &b.values), CorrelationKind::SpearmanGlobal)
            } else {
                let (ra, rb) = (ranked[i].as_ref().unwrap(), ranked[j].as_ref().unwrap());
                (pearson(ra, rb), CorrelationKind::PearsonNeighborhoodRank)
            };
            out.push(CorrelationReport { metric_pair: (a.metric, b.metric), coefficient, kind });
        }
    }
    Ok(out)
}
