//! Undirected simple graphs, edge-list ingestion and spectral helpers.
//!
//! Nodes are stored densely as `0..n`. External ids from the edge list are
//! kept in first-appearance order so reports can be written back with the
//! original vocabulary.

use std::collections::{BTreeSet, HashMap};

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("line {line}: expected at least two node ids, found {found}")]
    MalformedLine { line: usize, found: usize },
    #[error("no edges")]
    NoEdges,
    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NoConvergence { iterations: usize, estimate: f64 },
    #[error("label file line {line}: {reason}")]
    MalformedLabel { line: usize, reason: String },
    #[error("label file references node `{0}` which is not in the edge list")]
    UnknownLabelNode(String),
    #[error("node `{0}` has no label")]
    MissingLabel(String),
    #[error("label ids must be contiguous from 0; label {0} has no members")]
    NonContiguousLabels(usize),
}

/// Undirected, unweighted graph without self-loops or parallel edges.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    neighbors: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
    node_ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Graph {
    /// Builds a graph over `n` nodes named `"0".."n-1"`.
    ///
    /// Self-loops are dropped and duplicate edges (in either orientation)
    /// are collapsed.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let ids = (0..n).map(|i| i.to_string()).collect();
        Self::from_named_edges(ids, edges)
    }

    fn from_named_edges(node_ids: Vec<String>, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let n = node_ids.len();
        let mut set = BTreeSet::new();
        for &(u, v) in edges {
            for index in [u, v] {
                if index >= n {
                    return Err(GraphError::NodeOutOfRange { index, n });
                }
            }
            if u != v {
                set.insert((u.min(v), u.max(v)));
            }
        }
        let mut neighbors = vec![Vec::new(); n];
        for &(u, v) in &set {
            neighbors[u].push(v);
            neighbors[v].push(u);
        }
        for list in &mut neighbors {
            list.sort_unstable();
        }
        let index = node_ids.iter().cloned().enumerate().map(|(i, id)| (id, i)).collect();
        Ok(Self { neighbors, edges: set.into_iter().collect(), node_ids, index })
    }

    pub fn n_nodes(&self) -> usize {
        self.neighbors.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Canonical edge list, each pair as `(min, max)`, sorted.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Sorted neighbor indices of `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors[u].binary_search(&v).is_ok()
    }

    pub fn node_id(&self, i: usize) -> &str {
        &self.node_ids[i]
    }

    pub fn node_ids(&self) -> &[String] {
        &self.node_ids
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency_dense(&self) -> nalgebra::DMatrix<f64> {
        let n = self.n_nodes();
        let mut a = nalgebra::DMatrix::zeros(n, n);
        for &(u, v) in &self.edges {
            a[(u, v)] = 1.0;
            a[(v, u)] = 1.0;
        }
        a
    }

    /// `y = A x`.
    pub fn adj_mul(&self, x: &[f64], y: &mut [f64]) {
        for (yi, nbrs) in y.iter_mut().zip(&self.neighbors) {
            *yi = nbrs.iter().map(|&j| x[j]).sum();
        }
    }

    /// Hex SHA-256 over the node vocabulary and canonical edge list.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.n_nodes() as u64).to_le_bytes());
        for id in &self.node_ids {
            h.update((id.len() as u64).to_le_bytes());
            h.update(id.as_bytes());
        }
        for &(u, v) in &self.edges {
            h.update((u as u64).to_le_bytes());
            h.update((v as u64).to_le_bytes());
        }
        hex::encode(h.finalize())
    }

    /// Returns the same graph with node `i` renamed to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let n = self.n_nodes();
        let mut ids = vec![String::new(); n];
        for (i, &p) in perm.iter().enumerate() {
            ids[p] = self.node_ids[i].clone();
        }
        let edges: Vec<_> = self.edges.iter().map(|&(u, v)| (perm[u], perm[v])).collect();
        Self::from_named_edges(ids, &edges)
    }
}

/// Parses a whitespace-separated edge list.
///
/// Lines starting with `#` or `%` are comments. Ids are assigned dense
/// indices in first-appearance order; any token after the second is ignored.
pub fn parse_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut ids: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut intern = |tok: &str, ids: &mut Vec<String>| -> usize {
        *index.entry(tok.to_string()).or_insert_with(|| {
            ids.push(tok.to_string());
            ids.len() - 1
        })
    };
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(a), Some(b)) = (toks.next(), toks.next()) else {
            return Err(GraphError::MalformedLine { line: lineno + 1, found: 1 });
        };
        let u = intern(a, &mut ids);
        let v = intern(b, &mut ids);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(GraphError::NoEdges);
    }
    Graph::from_named_edges(ids, &edges)
}

/// Per-node labels, contiguous from 0.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct LabelVector(pub Vec<usize>);

impl LabelVector {
    pub fn new(labels: Vec<usize>) -> Result<Self, GraphError> {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        let mut seen = vec![false; k];
        for &l in &labels {
            seen[l] = true;
        }
        if let Some(missing) = seen.iter().position(|s| !s) {
            return Err(GraphError::NonContiguousLabels(missing));
        }
        Ok(Self(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn n_labels(&self) -> usize {
        self.0.iter().max().map_or(0, |m| m + 1)
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

/// Parses `node_id label` lines against the id vocabulary of `g`.
///
/// Every node of `g` must be labeled, and ids that do not occur in the edge
/// list are rejected.
pub fn parse_labels(text: &str, g: &Graph) -> Result<LabelVector, GraphError> {
    let mut labels: Vec<Option<usize>> = vec![None; g.n_nodes()];
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with('%') {
            continue;
        }
        let mut toks = line.split_whitespace();
        let (Some(id), Some(label)) = (toks.next(), toks.next()) else {
            return Err(GraphError::MalformedLabel {
                line: lineno + 1,
                reason: "expected `node_id label`".into(),
            });
        };
        let label: usize = label.parse().map_err(|_| GraphError::MalformedLabel {
            line: lineno + 1,
            reason: format!("`{label}` is not a non-negative integer"),
        })?;
        let i = g.index_of(id).ok_or_else(|| GraphError::UnknownLabelNode(id.to_string()))?;
        labels[i] = Some(label);
    }
    let labels = labels
        .into_iter()
        .enumerate()
        .map(|(i, l)| l.ok_or_else(|| GraphError::MissingLabel(g.node_id(i).to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    LabelVector::new(labels)
}

pub fn degree_vector(g: &Graph) -> Vec<usize> {
    (0..g.n_nodes()).map(|i| g.degree(i)).collect()
}

pub const DEFAULT_EIG_TOL: f64 = 1e-10;
pub const DEFAULT_EIG_MAX_ITER: usize = 10_000;

/// Largest adjacency eigenvalue and its unit-2-norm eigenvector.
///
/// Power iteration from the all-ones vector on `A + I`; the unit shift keeps
/// the `-λ_max` mode of bipartite graphs from stalling the iteration. Stops
/// once `‖Ax − ρx‖ ≤ tol · max(1, ρ)` for the Rayleigh quotient `ρ`; if that
/// never happens but `ρ` has stopped moving, the estimate is returned with a
/// warning (nearly degenerate leading eigenvalues).
pub fn principal_eigenpair(g: &Graph, tol: f64, max_iter: usize) -> Result<(f64, Vec<f64>), GraphError> {
    let n = g.n_nodes();
    if g.n_edges() == 0 {
        return Err(GraphError::NoEdges);
    }
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut y = vec![0.0; n];
    let mut prev = f64::NAN;
    let mut rq = f64::NAN;
    for _ in 0..max_iter {
        g.adj_mul(&x, &mut y);
        rq = x.iter().zip(&y).map(|(a, b)| a * b).sum();
        let residual = x.iter().zip(&y).map(|(a, b)| (b - rq * a).powi(2)).sum::<f64>().sqrt();
        if residual <= tol * rq.abs().max(1.0) {
            return Ok((rq, x));
        }
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi;
        }
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        prev = rq;
    }
    if (rq - prev).abs() < tol {
        log::warn!("power iteration residual did not reach {tol:e} in {max_iter} iterations; eigenvalue has settled");
        return Ok((rq, x));
    }
    Err(GraphError::NoConvergence { iterations: max_iter, estimate: rq })
}

/// `λ_max` of the adjacency matrix.
pub fn largest_eigenvalue(g: &Graph, tol: f64, max_iter: usize) -> Result<f64, GraphError> {
    principal_eigenpair(g, tol, max_iter).map(|(l, _)| l)
}

/// Connected component id for every node, numbered in order of first node.
pub fn connected_components(g: &Graph) -> Vec<usize> {
    let n = g.n_nodes();
    let mut comp = vec![usize::MAX; n];
    let mut next = 0;
    let mut stack = Vec::new();
    for s in 0..n {
        if comp[s] != usize::MAX {
            continue;
        }
        comp[s] = next;
        stack.push(s);
        while let Some(u) = stack.pop() {
            for &v in g.neighbors(u) {
                if comp[v] == usize::MAX {
                    comp[v] = next;
                    stack.push(v);
                }
            }
        }
        next += 1;
    }
    comp
}
