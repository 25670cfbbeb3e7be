//! Student-t soft assignments, sharpened targets and the KL clustering loss.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TrainError;

pub const DEFAULT_TAU: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    /// `k × dim`.
    pub centroids: DMatrix<f64>,
    /// `n × k` soft assignments.
    pub q: DMatrix<f64>,
    /// `n × k` targets.
    pub p: DMatrix<f64>,
    /// Soft cluster frequencies `f_j = Σ_i q_ij`.
    pub f: Vec<f64>,
    pub tau: f64,
}

/// Summary suitable for reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub k: usize,
    pub tau: f64,
    pub soft_sizes: Vec<f64>,
}

impl ClusterState {
    /// Builds `Q` and `P` from embeddings and centroids.
    pub fn new(z: &DMatrix<f64>, centroids: DMatrix<f64>, tau: f64) -> Result<Self, TrainError> {
        let q = soft_assign(z, &centroids, tau)?;
        let p = target_distribution(&q)?;
        let f = column_sums(&q);
        Ok(Self { centroids, q, p, f, tau })
    }

    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary { k: self.centroids.nrows(), tau: self.tau, soft_sizes: self.f.clone() }
    }
}

fn column_sums(m: &DMatrix<f64>) -> Vec<f64> {
    m.column_iter().map(|c| c.sum()).collect()
}

fn squared_distance(z: &DMatrix<f64>, i: usize, c: &DMatrix<f64>, j: usize) -> f64 {
    (0..z.ncols()).map(|t| (z[(i, t)] - c[(j, t)]).powi(2)).sum()
}

/// `q_ij ∝ (1 + ‖Z_i − c_j‖²/τ)^{−(τ+1)/2}`, normalized over clusters.
pub fn soft_assign(z: &DMatrix<f64>, centroids: &DMatrix<f64>, tau: f64) -> Result<DMatrix<f64>, TrainError> {
    if tau <= 0.0 || !tau.is_finite() {
        return Err(TrainError::InvalidTau(tau));
    }
    let k = centroids.nrows();
    if k < 2 {
        return Err(TrainError::TooFewClusters(k));
    }
    if centroids.ncols() != z.ncols() {
        return Err(TrainError::Shape { expected: (k, z.ncols()), got: centroids.shape() });
    }
    let exponent = -(tau + 1.0) / 2.0;
    let mut q = DMatrix::from_fn(z.nrows(), k, |i, j| (1.0 + squared_distance(z, i, centroids, j) / tau).powf(exponent));
    for mut row in q.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    Ok(q)
}

/// `p_ij = (q_ij²/f_j) / Σ_j' (q_ij'²/f_j')`.
pub fn target_distribution(q: &DMatrix<f64>) -> Result<DMatrix<f64>, TrainError> {
    let f = column_sums(q);
    if let Some(j) = f.iter().position(|&fj| fj <= 0.0) {
        return Err(TrainError::EmptySoftCluster(j));
    }
    let mut p = DMatrix::from_fn(q.nrows(), q.ncols(), |i, j| q[(i, j)] * q[(i, j)] / f[j]);
    for mut row in p.row_iter_mut() {
        let s = row.sum();
        row /= s;
    }
    Ok(p)
}

/// `Σ_i Σ_j p_ij log(p_ij / q_ij)` with `0·log 0 = 0`.
pub fn kl_divergence(p: &DMatrix<f64>, q: &DMatrix<f64>) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for (idx, (&pij, &qij)) in p.iter().zip(q.iter()).enumerate() {
        if pij == 0.0 {
            continue;
        }
        if qij <= 0.0 {
            let (i, j) = (idx % p.nrows(), idx / p.nrows());
            return Err(TrainError::UndefinedKl { node: i, cluster: j });
        }
        total += pij * (pij / qij).ln();
    }
    Ok(total)
}

/// KL loss of `state.p` against the assignments of `z`, and its gradient.
///
/// `P` and the centroids are held fixed; `Q` is recomputed from `z`.
pub fn kl_loss_and_grad(z: &DMatrix<f64>, state: &ClusterState) -> Result<(f64, DMatrix<f64>), TrainError> {
    let tau = state.tau;
    let c = &state.centroids;
    let q = soft_assign(z, c, tau)?;
    if q.shape() != state.p.shape() {
        return Err(TrainError::Shape { expected: q.shape(), got: state.p.shape() });
    }
    let loss = kl_divergence(&state.p, &q)?;
    let scale = (tau + 1.0) / tau;
    let mut grad = DMatrix::zeros(z.nrows(), z.ncols());
    for i in 0..z.nrows() {
        for j in 0..c.nrows() {
            let kernel = 1.0 / (1.0 + squared_distance(z, i, c, j) / tau);
            let w = scale * kernel * (state.p[(i, j)] - q[(i, j)]);
            for t in 0..z.ncols() {
                grad[(i, t)] += w * (z[(i, t)] - c[(j, t)]);
            }
        }
    }
    Ok((loss, grad))
}

pub fn kl_loss(z: &DMatrix<f64>, state: &ClusterState) -> Result<f64, TrainError> {
    let q = soft_assign(z, &state.centroids, state.tau)?;
    kl_divergence(&state.p, &q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soft_assign_hand_values() {
        let z = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        let c = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]);
        let q = soft_assign(&z, &c, 1.0).unwrap();
        assert!((q[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        assert!((q[(0, 1)] - 1.0 / 3.0).abs() < 1e-15);
        let c = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, -1.0, 0.0]);
        let q = soft_assign(&z, &c, 1.0).unwrap();
        assert_eq!(q[(0, 0)], 0.5);
        assert!(matches!(soft_assign(&z, &c, 0.0), Err(TrainError::InvalidTau(_))));
        assert!(matches!(soft_assign(&z, &c.rows(0, 1).into_owned(), 1.0), Err(TrainError::TooFewClusters(1))));
    }

    #[test]
    fn target_distribution_cases() {
        let uniform = DMatrix::from_element(3, 2, 0.5);
        assert_eq!(target_distribution(&uniform).unwrap(), uniform);
        let q = DMatrix::from_row_slice(1, 2, &[2.0 / 3.0, 1.0 / 3.0]);
        let p = target_distribution(&q).unwrap();
        assert!((p[(0, 0)] - 2.0 / 3.0).abs() < 1e-15);
        let one_hot = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.3, 0.7]);
        let p = target_distribution(&one_hot).unwrap();
        assert_eq!((p[(0, 0)], p[(0, 1)]), (1.0, 0.0));
        let empty = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(matches!(target_distribution(&empty), Err(TrainError::EmptySoftCluster(1))));
    }

    #[test]
    fn kl_values() {
        let p = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        let q = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        assert!((kl_divergence(&p, &q).unwrap() - 2f64.ln()).abs() < 1e-15);
        assert_eq!(kl_divergence(&q, &q).unwrap(), 0.0);
        let q0 = DMatrix::from_row_slice(1, 2, &[0.0, 1.0]);
        assert!(matches!(kl_divergence(&p, &q0), Err(TrainError::UndefinedKl { node: 0, cluster: 0 })));
    }

    #[test]
    fn kl_gradient_vanishes_when_p_equals_q() {
        let z = DMatrix::from_fn(4, 3, |i, j| (i as f64 - j as f64) * 0.4);
        let c = DMatrix::from_row_slice(2, 3, &[0.0, 0.1, 0.2, 1.0, -1.0, 0.5]);
        let q = soft_assign(&z, &c, 1.0).unwrap();
        let state = ClusterState { centroids: c, p: q.clone(), f: column_sums(&q), q, tau: 1.0 };
        let (loss, grad) = kl_loss_and_grad(&z, &state).unwrap();
        assert!(loss.abs() < 1e-15);
        assert!(grad.amax() < 1e-15);
    }
}
