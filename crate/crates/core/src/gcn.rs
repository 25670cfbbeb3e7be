//! Three-layer graph convolutional encoder with hand-written backprop.
//!
//! Each layer computes `H^l = ELU(Â H^{l−1} Θ^l)` where `Â` is the
//! symmetric normalization of `A + I`, i.e. coefficients
//! `1/(√d̃(i)·√d̃(j))` over `N(v_i) ∪ {v_i}` with `d̃ = d + 1`.

use std::io::{self, Read, Write};
use std::sync::Arc;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::Graph;

pub const HIDDEN_DIM: usize = 128;
pub const N_LAYERS: usize = 3;
pub const DEFAULT_DROPOUT: f64 = 0.2;

#[derive(Debug, Error)]
pub enum GcnError {
    #[error("input dimension must be at least 1")]
    ZeroInputDim,
    #[error("dropout rate must lie in [0, 1), got {0}")]
    InvalidDropout(f64),
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    Shape { expected: (usize, usize), got: (usize, usize) },
    #[error("forward cache is stale: model changed since the forward pass")]
    StaleCache,
    #[error("checkpoint: {0}")]
    Io(#[from] io::Error),
}

pub fn elu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        x.exp_m1()
    }
}

fn elu_grad(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else {
        x.exp()
    }
}

/// Sparse `D̃^{-1/2}(A + I)D̃^{-1/2}`. Cheap to clone.
#[derive(Debug, Clone)]
pub struct NormalizedAdjacency {
    rows: Arc<Vec<Vec<(usize, f64)>>>,
}

impl NormalizedAdjacency {
    pub fn new(g: &Graph) -> Self {
        let inv_sqrt: Vec<f64> = (0..g.n_nodes()).map(|i| 1.0 / ((g.degree(i) + 1) as f64).sqrt()).collect();
        let rows = (0..g.n_nodes())
            .map(|i| {
                let mut row: Vec<(usize, f64)> =
                    g.neighbors(i).iter().map(|&j| (j, inv_sqrt[i] * inv_sqrt[j])).collect();
                let pos = row.partition_point(|&(j, _)| j < i);
                row.insert(pos, (i, inv_sqrt[i] * inv_sqrt[i]));
                row
            })
            .collect();
        Self { rows: Arc::new(rows) }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    /// `Â h`. `Â` is symmetric, so this is also `Âᵀ h`.
    pub fn apply(&self, h: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(h.nrows(), h.ncols());
        for c in 0..h.ncols() {
            let src = h.column(c);
            let mut dst = out.column_mut(c);
            for (i, row) in self.rows.iter().enumerate() {
                dst[i] = row.iter().map(|&(j, w)| w * src[j]).sum();
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    layers: Vec<DMatrix<f64>>,
    pub dropout_rate: f64,
    version: u64,
}

/// Per-layer intermediates of a train-mode forward.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    version: u64,
    agg: NormalizedAdjacency,
    /// `Â H^{l−1}` per layer.
    aggregated: Vec<DMatrix<f64>>,
    pre_activation: Vec<DMatrix<f64>>,
    /// Scaled keep-masks applied to each layer's activation.
    masks: Vec<Option<DMatrix<f64>>>,
}

/// Three `f → 128 → 128 → 128` layers, Xavier-uniform initialized.
pub fn init_model(input_dim: usize, seed: u64) -> Result<GcnModel, GcnError> {
    GcnModel::new(&[input_dim, HIDDEN_DIM, HIDDEN_DIM, HIDDEN_DIM], DEFAULT_DROPOUT, seed)
}

impl GcnModel {
    pub fn new(dims: &[usize], dropout_rate: f64, seed: u64) -> Result<Self, GcnError> {
        if dims.first().is_none_or(|&d| d == 0) {
            return Err(GcnError::ZeroInputDim);
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(GcnError::InvalidDropout(dropout_rate));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = dims
            .windows(2)
            .map(|w| {
                let bound = (6.0 / (w[0] + w[1]) as f64).sqrt();
                DMatrix::from_fn(w[0], w[1], |_, _| rng.random_range(-bound..bound))
            })
            .collect();
        Ok(Self { layers, dropout_rate, version: 0 })
    }

    pub fn from_layers(layers: Vec<DMatrix<f64>>, dropout_rate: f64) -> Result<Self, GcnError> {
        for w in layers.windows(2) {
            if w[0].ncols() != w[1].nrows() {
                return Err(GcnError::Shape { expected: (w[0].ncols(), w[1].ncols()), got: w[1].shape() });
            }
        }
        if !(0.0..1.0).contains(&dropout_rate) {
            return Err(GcnError::InvalidDropout(dropout_rate));
        }
        Ok(Self { layers, dropout_rate, version: 0 })
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    /// Mutable weights. Invalidates outstanding forward caches.
    pub fn layers_mut(&mut self) -> &mut [DMatrix<f64>] {
        self.version += 1;
        &mut self.layers
    }

    pub fn dims(&self) -> Vec<usize> {
        let mut dims = vec![self.layers[0].nrows()];
        dims.extend(self.layers.iter().map(|w| w.ncols()));
        dims
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |w| w.ncols())
    }

    fn check_input(&self, agg: &NormalizedAdjacency, x: &DMatrix<f64>) -> Result<(), GcnError> {
        let expected = (agg.n(), self.layers[0].nrows());
        if x.shape() != expected {
            return Err(GcnError::Shape { expected, got: x.shape() });
        }
        Ok(())
    }

    /// Eval-mode forward: no dropout, no cache.
    pub fn forward(&self, agg: &NormalizedAdjacency, x: &DMatrix<f64>) -> Result<DMatrix<f64>, GcnError> {
        self.check_input(agg, x)?;
        let mut h = x.clone();
        for w in &self.layers {
            h = (agg.apply(&h) * w).map(elu);
        }
        Ok(h)
    }

    /// Train-mode forward. With `dropout` set, inverted dropout at
    /// `dropout_rate` is applied to every activation but the last; masks are
    /// drawn from `seed`.
    pub fn forward_train(
        &self,
        agg: &NormalizedAdjacency,
        x: &DMatrix<f64>,
        dropout: bool,
        seed: u64,
    ) -> Result<(DMatrix<f64>, ForwardCache), GcnError> {
        self.check_input(agg, x)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let keep = 1.0 - self.dropout_rate;
        let last = self.layers.len() - 1;
        let mut cache = ForwardCache {
            version: self.version,
            agg: agg.clone(),
            aggregated: Vec::with_capacity(self.layers.len()),
            pre_activation: Vec::with_capacity(self.layers.len()),
            masks: Vec::with_capacity(self.layers.len()),
        };
        let mut h = x.clone();
        for (l, w) in self.layers.iter().enumerate() {
            let m = agg.apply(&h);
            let p = &m * w;
            h = p.map(elu);
            let mask = (dropout && l < last && self.dropout_rate > 0.0).then(|| {
                DMatrix::from_fn(h.nrows(), h.ncols(), |_, _| if rng.random::<f64>() < keep { 1.0 / keep } else { 0.0 })
            });
            if let Some(mask) = &mask {
                h.component_mul_assign(mask);
            }
            cache.aggregated.push(m);
            cache.pre_activation.push(p);
            cache.masks.push(mask);
        }
        Ok((h, cache))
    }

    /// `∂L/∂Θ^l` for every layer given `∂L/∂Z`.
    pub fn backward(&self, cache: &ForwardCache, dz: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>, GcnError> {
        if cache.version != self.version || cache.pre_activation.len() != self.layers.len() {
            return Err(GcnError::StaleCache);
        }
        let expected = cache.pre_activation.last().map(|p| p.shape()).unwrap_or_default();
        if dz.shape() != expected {
            return Err(GcnError::Shape { expected, got: dz.shape() });
        }
        let mut grads = vec![DMatrix::zeros(0, 0); self.layers.len()];
        let mut grad = dz.clone();
        for l in (0..self.layers.len()).rev() {
            if let Some(mask) = &cache.masks[l] {
                grad.component_mul_assign(mask);
            }
            let dp = grad.zip_map(&cache.pre_activation[l], |g, p| g * elu_grad(p));
            grads[l] = cache.aggregated[l].transpose() * &dp;
            if l > 0 {
                grad = cache.agg.apply(&(dp * self.layers[l].transpose()));
            }
        }
        Ok(grads)
    }

    pub fn write_checkpoint<W: Write>(&self, mut w: W) -> io::Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&(self.layers.len() as u64).to_le_bytes())?;
        w.write_all(&self.dropout_rate.to_le_bytes())?;
        for layer in &self.layers {
            w.write_all(&(layer.nrows() as u64).to_le_bytes())?;
            w.write_all(&(layer.ncols() as u64).to_le_bytes())?;
            for v in layer.iter() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Self, GcnError> {
        let bad = |m: &str| GcnError::Io(io::Error::new(io::ErrorKind::InvalidData, m.to_string()));
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(bad("not a model checkpoint"));
        }
        let mut b8 = [0u8; 8];
        let mut next_u64 = |r: &mut R| -> io::Result<u64> {
            r.read_exact(&mut b8)?;
            Ok(u64::from_le_bytes(b8))
        };
        let n_layers = next_u64(&mut r)? as usize;
        let dropout = f64::from_bits(next_u64(&mut r)?);
        let mut layers = Vec::with_capacity(n_layers.min(64));
        for _ in 0..n_layers {
            let rows = next_u64(&mut r)? as usize;
            let cols = next_u64(&mut r)? as usize;
            let len = rows.checked_mul(cols).ok_or_else(|| bad("layer size overflow"))?;
            let data = (0..len).map(|_| next_u64(&mut r).map(f64::from_bits)).collect::<io::Result<Vec<_>>>()?;
            layers.push(DMatrix::from_vec(rows, cols, data));
        }
        if layers.is_empty() {
            return Err(bad("checkpoint has no layers"));
        }
        Self::from_layers(layers, dropout)
    }
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"RECCGCN1";

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `‖A − σ(ZZᵀ)‖_F` and its gradient with respect to `Z`.
pub fn reconstruction_loss_and_grad(z: &DMatrix<f64>, g: &Graph) -> (f64, DMatrix<f64>) {
    let n = z.nrows();
    let gram = z * z.transpose();
    let mut residual = gram.map(sigmoid);
    let probs = residual.clone();
    for &(u, v) in g.edges() {
        residual[(u, v)] -= 1.0;
        residual[(v, u)] -= 1.0;
    }
    let loss = residual.norm();
    if loss == 0.0 {
        return (0.0, DMatrix::zeros(n, z.ncols()));
    }
    // dL/dS for S = ZZᵀ; symmetric, so dL/dZ = 2 (dL/dS) Z.
    let ds = residual.zip_map(&probs, |r, p| r / loss * p * (1.0 - p));
    (loss, ds * z * 2.0)
}

pub fn reconstruction_loss(z: &DMatrix<f64>, g: &Graph) -> f64 {
    reconstruction_loss_and_grad(z, g).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn six_node() -> Graph {
        Graph::from_edges(6, &[(0, 1), (1, 2), (2, 0), (2, 3), (3, 4), (4, 5), (5, 3)]).unwrap()
    }

    #[test]
    fn elu_values() {
        assert_eq!(elu(0.0), 0.0);
        assert_eq!(elu(2.5), 2.5);
        assert!((elu(-1.0) - (-0.632_120_558_828_557_7)).abs() < 1e-15);
    }

    #[test]
    fn init_shapes_and_seeding() {
        let m = init_model(4, 7).unwrap();
        let shapes: Vec<_> = m.layers().iter().map(|w| w.shape()).collect();
        assert_eq!(shapes, [(4, 128), (128, 128), (128, 128)]);
        assert_eq!(m, init_model(4, 7).unwrap());
        assert_ne!(m.layers()[0], init_model(4, 8).unwrap().layers()[0]);
        let bound = (6.0f64 / 132.0).sqrt();
        assert!(m.layers()[0].iter().all(|v| v.abs() <= bound));
        assert!(matches!(init_model(0, 1), Err(GcnError::ZeroInputDim)));
    }

    #[test]
    fn isolated_node_forward() {
        let g = Graph::from_edges(1, &[]).unwrap();
        let agg = NormalizedAdjacency::new(&g);
        let m = GcnModel::new(&[3, 5, 4, 2], 0.0, 3).unwrap();
        let x = DMatrix::from_row_slice(1, 3, &[0.3, -1.2, 0.8]);
        let mut h = x.clone();
        for w in m.layers() {
            h = (&h * w).map(elu);
        }
        assert_eq!(m.forward(&agg, &x).unwrap(), h);
    }

    #[test]
    fn zero_features_give_zero_embeddings() {
        let g = six_node();
        let m = init_model(3, 1).unwrap();
        let z = m.forward(&NormalizedAdjacency::new(&g), &DMatrix::zeros(6, 3)).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn twin_leaves_embed_identically() {
        let g = Graph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let x = DMatrix::from_row_slice(4, 2, &[3.0, 1.0, 1.0, 0.5, 1.0, 0.5, 1.0, 0.5]);
        let z = init_model(2, 9).unwrap().forward(&NormalizedAdjacency::new(&g), &x).unwrap();
        assert_eq!(z.row(1), z.row(2));
        assert_eq!(z.row(2), z.row(3));
    }

    #[test]
    fn normalized_adjacency_coefficients() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let a = NormalizedAdjacency::new(&g).apply(&DMatrix::identity(2, 2));
        assert!((a - DMatrix::from_element(2, 2, 0.5)).amax() < 1e-15);
    }

    #[test]
    fn backward_is_linear_and_zero_at_zero() {
        let g = six_node();
        let agg = NormalizedAdjacency::new(&g);
        let m = GcnModel::new(&[3, 8, 8, 4], 0.3, 2).unwrap();
        let x = DMatrix::from_fn(6, 3, |i, j| ((i * 3 + j) as f64).sin());
        let (_, cache) = m.forward_train(&agg, &x, true, 11).unwrap();
        let zero = m.backward(&cache, &DMatrix::zeros(6, 4)).unwrap();
        assert!(zero.iter().all(|g| g.iter().all(|&v| v == 0.0)));
        let dz = DMatrix::from_fn(6, 4, |i, j| ((i + 2 * j) as f64).cos());
        let g1 = m.backward(&cache, &dz).unwrap();
        let g3 = m.backward(&cache, &(&dz * 3.0)).unwrap();
        for (a, b) in g1.iter().zip(&g3) {
            assert!((a * 3.0 - b).amax() < 1e-12);
        }
    }

    #[test]
    fn stale_cache_is_rejected() {
        let g = six_node();
        let agg = NormalizedAdjacency::new(&g);
        let mut m = GcnModel::new(&[2, 4, 4, 4], 0.0, 2).unwrap();
        let (_, cache) = m.forward_train(&agg, &DMatrix::from_element(6, 2, 1.0), false, 0).unwrap();
        m.layers_mut()[0][(0, 0)] += 1.0;
        assert!(matches!(m.backward(&cache, &DMatrix::zeros(6, 4)), Err(GcnError::StaleCache)));
    }

    #[test]
    fn shape_mismatch() {
        let g = six_node();
        let m = init_model(3, 1).unwrap();
        assert!(matches!(
            m.forward(&NormalizedAdjacency::new(&g), &DMatrix::zeros(6, 2)),
            Err(GcnError::Shape { expected: (6, 3), got: (6, 2) })
        ));
    }

    #[test]
    fn eval_forward_ignores_dropout_rate_and_train_is_seeded() {
        let g = six_node();
        let agg = NormalizedAdjacency::new(&g);
        let m = GcnModel::new(&[2, 16, 16, 8], 0.5, 4).unwrap();
        let x = DMatrix::from_fn(6, 2, |i, j| (i as f64 - j as f64) * 0.3);
        assert_eq!(m.forward(&agg, &x).unwrap(), m.forward(&agg, &x).unwrap());
        let a = m.forward_train(&agg, &x, true, 5).unwrap().0;
        assert_eq!(a, m.forward_train(&agg, &x, true, 5).unwrap().0);
        assert_ne!(a, m.forward_train(&agg, &x, true, 6).unwrap().0);
        assert_eq!(m.forward_train(&agg, &x, false, 5).unwrap().0, m.forward(&agg, &x).unwrap());
    }

    #[test]
    fn reconstruction_of_zero_embedding() {
        let g = Graph::from_edges(2, &[(0, 1)]).unwrap();
        let (loss, grad) = reconstruction_loss_and_grad(&DMatrix::zeros(2, 3), &g);
        assert!((loss - 1.0).abs() < 1e-15);
        assert!(grad.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn checkpoint_round_trip_is_bit_exact() {
        let m = init_model(5, 42).unwrap();
        let mut buf = Vec::new();
        m.write_checkpoint(&mut buf).unwrap();
        let back = GcnModel::read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, m);
        assert!(GcnModel::read_checkpoint(&buf[..20]).is_err());
    }
}
