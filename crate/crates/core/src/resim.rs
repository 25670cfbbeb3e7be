//! Regular-equivalence similarity and its spectral node features.
//!
//! The similarity matrix is the fixed point of `S = αAS + I`, reached by
//! iterating from `S⁰ = I`. For `α < 1/λ_max` this is `(I − αA)⁻¹`, the
//! Katz-style sum `Σₘ αᵐAᵐ`.

use std::io::{self, Read, Write};

use nalgebra::{DMatrix, SymmetricEigen};
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{self, Graph, GraphError};

#[derive(Debug, Error)]
pub enum ResimError {
    #[error("alpha_fraction must lie in (0, 1), got {0}")]
    InvalidAlphaFraction(f64),
    #[error("graph has {n} nodes; dense similarity is capped at {cap}")]
    Capacity { n: usize, cap: usize },
    #[error("fixed-point iteration did not converge in {} iterations", .0.iterations)]
    NoConvergence(Box<ReSimMatrix>),
    #[error("max_dims must be at least 1")]
    ZeroDims,
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error("similarity dump: {0}")]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ReSimConfig {
    /// α is set to `alpha_fraction / λ_max`.
    pub alpha_fraction: f64,
    pub tol: f64,
    pub max_iter: usize,
    pub max_nodes: usize,
}

impl Default for ReSimConfig {
    fn default() -> Self {
        Self { alpha_fraction: 0.5, tol: 1e-8, max_iter: 1000, max_nodes: 20_000 }
    }
}

impl ReSimConfig {
    pub fn validate(&self) -> Result<(), ResimError> {
        if !(self.alpha_fraction > 0.0 && self.alpha_fraction < 1.0) {
            return Err(ResimError::InvalidAlphaFraction(self.alpha_fraction));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReSimMatrix {
    pub s: DMatrix<f64>,
    pub alpha: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl ReSimMatrix {
    pub fn n(&self) -> usize {
        self.s.nrows()
    }

    /// Row `i` of `S` (equal to column `i` by symmetry).
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n();
        &self.s.as_slice()[i * n..(i + 1) * n]
    }
}

/// Computes the RE similarity matrix with `α = alpha_fraction / λ_max`.
pub fn compute_re_similarity(g: &Graph, cfg: &ReSimConfig) -> Result<ReSimMatrix, ResimError> {
    cfg.validate()?;
    if g.n_nodes() > cfg.max_nodes {
        return Err(ResimError::Capacity { n: g.n_nodes(), cap: cfg.max_nodes });
    }
    let lambda = graph::largest_eigenvalue(g, graph::DEFAULT_EIG_TOL, graph::DEFAULT_EIG_MAX_ITER)?;
    re_similarity_with_alpha(g, cfg.alpha_fraction / lambda, cfg.tol, cfg.max_iter)
}

/// Fixed-point iteration `S ← αAS + I` with an explicit `α`.
///
/// Stops when the largest elementwise change drops below `tol`. Columns are
/// updated independently, so the parallel sweep is bit-stable.
pub fn re_similarity_with_alpha(g: &Graph, alpha: f64, tol: f64, max_iter: usize) -> Result<ReSimMatrix, ResimError> {
    let n = g.n_nodes();
    let mut s = DMatrix::<f64>::identity(n, n);
    let mut next = DMatrix::<f64>::zeros(n, n);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let cur = s.as_slice();
        let delta = next
            .as_mut_slice()
            .par_chunks_mut(n)
            .enumerate()
            .map(|(j, out)| {
                let col = &cur[j * n..(j + 1) * n];
                let mut delta = 0.0f64;
                for (i, o) in out.iter_mut().enumerate() {
                    let acc: f64 = g.neighbors(i).iter().map(|&k| col[k]).sum();
                    *o = alpha * acc + if i == j { 1.0 } else { 0.0 };
                    delta = delta.max((*o - col[i]).abs());
                }
                delta
            })
            .reduce(|| 0.0, f64::max);
        std::mem::swap(&mut s, &mut next);
        if delta < tol {
            converged = true;
            break;
        }
    }
    // Round-off can leave S asymmetric in the last few ulps.
    let s = (&s + s.transpose()) * 0.5;
    let out = ReSimMatrix { s, alpha, iterations, converged };
    if converged {
        Ok(out)
    } else {
        Err(ResimError::NoConvergence(Box::new(out)))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReEigFeatures {
    /// `n × r`, unit-norm columns with their largest-magnitude entry positive.
    pub vectors: DMatrix<f64>,
    /// Full spectrum of `S`, descending.
    pub eigenvalues: Vec<f64>,
    pub r: usize,
    /// 1-based position `k` of the largest ratio `λ_k / λ_{k+1}`.
    pub drop_index: usize,
    /// Set when the spectrum has no drop at all.
    pub degenerate: bool,
}

/// Relative spread under which a spectrum counts as flat.
const FLAT_SPECTRUM: f64 = 1e-9;

/// Locates the first significant drop in a descending spectrum.
///
/// Returns `(drop_index, degenerate)` where `drop_index` is the 1-based `k`
/// in `1..=min(n−1, max_dims)` maximizing `λ_k / λ_{k+1}`.
pub fn select_drop(eigenvalues: &[f64], max_dims: usize) -> (usize, bool) {
    let n = eigenvalues.len();
    let last = n.saturating_sub(1).min(max_dims);
    let mut best = (1, f64::NEG_INFINITY);
    for k in 1..=last {
        let ratio = eigenvalues[k - 1] / eigenvalues[k];
        if ratio > best.1 {
            best = (k, ratio);
        }
    }
    if last == 0 || best.1 <= 1.0 + FLAT_SPECTRUM || !best.1.is_finite() {
        (1, true)
    } else {
        (best.0, false)
    }
}

/// Eigenvectors of `S` preceding the largest successive-ratio drop.
pub fn re_eigenfeatures(sim: &ReSimMatrix, max_dims: usize) -> Result<ReEigFeatures, ResimError> {
    if max_dims == 0 {
        return Err(ResimError::ZeroDims);
    }
    let n = sim.n();
    let eig = SymmetricEigen::new(sim.s.clone());
    let mut order: Vec<usize> = (0..n).collect();
    // Stable sort keeps the solver's order among exact ties.
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let (drop_index, degenerate) = select_drop(&eigenvalues, max_dims);
    let r = drop_index;
    let mut vectors = DMatrix::zeros(n, r);
    for (c, &src) in order.iter().take(r).enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        let norm = col.norm();
        col /= norm;
        let pivot = col.iter().copied().fold(0.0f64, |m, v| if v.abs() > m.abs() { v } else { m });
        if pivot < 0.0 {
            col.neg_mut();
        }
        vectors.set_column(c, &col);
    }
    Ok(ReEigFeatures { vectors, eigenvalues, r, drop_index, degenerate })
}

const DUMP_MAGIC: &[u8; 8] = b"RESIMv01";

/// Writes `S` and its provenance as little-endian binary.
pub fn write_similarity<W: Write>(sim: &ReSimMatrix, mut w: W) -> io::Result<()> {
    w.write_all(DUMP_MAGIC)?;
    w.write_all(&(sim.n() as u64).to_le_bytes())?;
    w.write_all(&sim.alpha.to_le_bytes())?;
    w.write_all(&(sim.iterations as u64).to_le_bytes())?;
    w.write_all(&[sim.converged as u8])?;
    for v in sim.s.iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_similarity<R: Read>(mut r: R) -> io::Result<ReSimMatrix> {
    let bad = |m: &str| io::Error::new(io::ErrorKind::InvalidData, m.to_string());
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != DUMP_MAGIC {
        return Err(bad("not a similarity dump"));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n = u64::from_le_bytes(b8) as usize;
    r.read_exact(&mut b8)?;
    let alpha = f64::from_le_bytes(b8);
    r.read_exact(&mut b8)?;
    let iterations = u64::from_le_bytes(b8) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let mut data = vec![0.0; n.checked_mul(n).ok_or_else(|| bad("size overflow"))?];
    for v in &mut data {
        r.read_exact(&mut b8)?;
        *v = f64::from_le_bytes(b8);
    }
    Ok(ReSimMatrix { s: DMatrix::from_vec(n, n, data), alpha, iterations, converged: flag[0] != 0 })
}

/// Cache key for a similarity computed from `g` under `cfg`.
pub fn cache_key(g: &Graph, cfg: &ReSimConfig) -> String {
    use sha2::{Digest, Sha256};
    let mut h = Sha256::new();
    h.update(g.content_hash().as_bytes());
    h.update(cfg.alpha_fraction.to_le_bytes());
    h.update(cfg.tol.to_le_bytes());
    h.update((cfg.max_iter as u64).to_le_bytes());
    hex::encode(h.finalize())
}
