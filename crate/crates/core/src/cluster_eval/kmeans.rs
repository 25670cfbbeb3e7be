//! k-means++ seeded Lloyd iterations with restarts.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::graph::Graph;

pub const DEFAULT_RESTARTS: usize = 10;
const MAX_ITER: usize = 300;
const TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusteringResult {
    pub labels: Vec<usize>,
    /// `k × dim`, row-major.
    pub centroids: Vec<Vec<f64>>,
    pub inertia: f64,
    pub influential_cluster: Option<usize>,
    /// Set when several clusters share the highest mean degree.
    pub influential_tie: bool,
}

impl ClusteringResult {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn centroid_matrix(&self) -> DMatrix<f64> {
        let dim = self.centroids.first().map_or(0, Vec::len);
        DMatrix::from_fn(self.k(), dim, |i, j| self.centroids[i][j])
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        self.labels.iter().for_each(|&l| sizes[l] += 1);
        sizes
    }
}

/// Points stored row-major for contiguous distance evaluations.
struct Points {
    data: Vec<f64>,
    dim: usize,
}

impl Points {
    fn new(z: &DMatrix<f64>) -> Self {
        let t = z.transpose();
        Self { data: t.as_slice().to_vec(), dim: z.ncols() }
    }

    fn n(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn plus_plus_seeds(pts: &Points, k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let n = pts.n();
    let mut centers = vec![pts.row(rng.random_range(0..n)).to_vec()];
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist(pts.row(i), &centers[0])).collect();
    while centers.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        } else {
            rng.random_range(0..n)
        };
        let c = pts.row(pick).to_vec();
        for (i, d) in d2.iter_mut().enumerate() {
            *d = d.min(sq_dist(pts.row(i), &c));
        }
        centers.push(c);
    }
    centers
}

/// Nearest centroid per point, lowest index on ties.
fn assign(pts: &Points, centers: &[Vec<f64>], labels: &mut [usize], dists: &mut [f64]) {
    for i in 0..pts.n() {
        let (mut best, mut best_d) = (0, f64::INFINITY);
        for (c, center) in centers.iter().enumerate() {
            let d = sq_dist(pts.row(i), center);
            if d < best_d {
                best = c;
                best_d = d;
            }
        }
        labels[i] = best;
        dists[i] = best_d;
    }
}

/// Moves the farthest point of a multi-member cluster into each empty one.
fn reseed_empty(pts: &Points, centers: &mut [Vec<f64>], labels: &mut [usize], dists: &mut [f64]) {
    let k = centers.len();
    let mut sizes = vec![0usize; k];
    labels.iter().for_each(|&l| sizes[l] += 1);
    for c in 0..k {
        if sizes[c] > 0 {
            continue;
        }
        let far = (0..pts.n())
            .filter(|&i| sizes[labels[i]] > 1)
            .fold(None, |best: Option<usize>, i| match best {
                Some(b) if dists[b] >= dists[i] => Some(b),
                _ => Some(i),
            });
        let Some(p) = far else { continue };
        sizes[labels[p]] -= 1;
        sizes[c] = 1;
        labels[p] = c;
        dists[p] = 0.0;
        centers[c] = pts.row(p).to_vec();
    }
}

fn update_centers(pts: &Points, labels: &[usize], centers: &mut [Vec<f64>]) {
    let k = centers.len();
    let mut sums = vec![vec![0.0; pts.dim]; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in labels.iter().enumerate() {
        counts[l] += 1;
        sums[l].iter_mut().zip(pts.row(i)).for_each(|(s, x)| *s += x);
    }
    for c in 0..k {
        if counts[c] > 0 {
            centers[c] = sums[c].iter().map(|s| s / counts[c] as f64).collect();
        }
    }
}

struct Run {
    labels: Vec<usize>,
    centers: Vec<Vec<f64>>,
    inertia: f64,
    trace: Vec<f64>,
}

fn lloyd(pts: &Points, k: usize, rng: &mut ChaCha8Rng) -> Run {
    let n = pts.n();
    let mut centers = plus_plus_seeds(pts, k, rng);
    let mut labels = vec![0; n];
    let mut dists = vec![0.0; n];
    let mut trace = Vec::new();
    let mut prev = f64::INFINITY;
    for _ in 0..MAX_ITER {
        assign(pts, &centers, &mut labels, &mut dists);
        reseed_empty(pts, &mut centers, &mut labels, &mut dists);
        let inertia: f64 = dists.iter().sum();
        debug_assert!(inertia <= prev + 1e-9 * prev.abs().max(1.0), "inertia rose from {prev} to {inertia}");
        trace.push(inertia);
        update_centers(pts, &labels, &mut centers);
        if prev.is_finite() && prev - inertia <= TOL * prev {
            break;
        }
        prev = inertia;
    }
    let inertia = (0..n).map(|i| sq_dist(pts.row(i), &centers[labels[i]])).sum();
    Run { labels, centers, inertia, trace }
}

fn check(z: &DMatrix<f64>, k: usize) -> Result<(), EvalError> {
    if k < 2 {
        return Err(EvalError::TooFewClusters(k));
    }
    if z.nrows() < k {
        return Err(EvalError::TooFewPoints { n: z.nrows(), k });
    }
    Ok(())
}

/// Best of `restarts` k-means++ runs by inertia; restart `r` draws from
/// ChaCha stream `r` of `seed`.
pub fn kmeans(z: &DMatrix<f64>, k: usize, seed: u64, restarts: usize) -> Result<ClusteringResult, EvalError> {
    check(z, k)?;
    let pts = Points::new(z);
    let mut best: Option<Run> = None;
    for r in 0..restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(r as u64);
        let run = lloyd(&pts, k, &mut rng);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    let best = best.expect("at least one restart");
    Ok(ClusteringResult {
        labels: best.labels,
        centroids: best.centers,
        inertia: best.inertia,
        influential_cluster: None,
        influential_tie: false,
    })
}

/// Inertia after every assignment step of a single seeded run.
pub fn inertia_trace(z: &DMatrix<f64>, k: usize, seed: u64) -> Result<Vec<f64>, EvalError> {
    check(z, k)?;
    let pts = Points::new(z);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(lloyd(&pts, k, &mut rng).trace)
}

/// Marks the cluster with the highest mean degree as influential.
pub fn label_influential(mut r: ClusteringResult, g: &Graph) -> ClusteringResult {
    let k = r.k();
    let mut sums = vec![0.0; k];
    let mut counts = vec![0usize; k];
    for (i, &l) in r.labels.iter().enumerate() {
        sums[l] += g.degree(i) as f64;
        counts[l] += 1;
    }
    let means: Vec<Option<f64>> = (0..k).map(|c| (counts[c] > 0).then(|| sums[c] / counts[c] as f64)).collect();
    let top = means.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
    let winners: Vec<usize> = (0..k).filter(|&c| means[c] == Some(top)).collect();
    r.influential_cluster = winners.first().copied();
    r.influential_tie = winners.len() > 1;
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separable_pairs() {
        let z = DMatrix::from_row_slice(4, 2, &[0.0, 0.0, 0.0, 1.0, 10.0, 10.0, 10.0, 11.0]);
        let r = kmeans(&z, 2, 3, DEFAULT_RESTARTS).unwrap();
        assert_eq!(r.labels[0], r.labels[1]);
        assert_eq!(r.labels[2], r.labels[3]);
        assert_ne!(r.labels[0], r.labels[2]);
        assert!((r.inertia - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_points() {
        let z = DMatrix::from_element(6, 3, 2.5);
        let r = kmeans(&z, 2, 1, 3).unwrap();
        assert_eq!(r.inertia, 0.0);
        assert_eq!(r.cluster_sizes().iter().sum::<usize>(), 6);
        assert!(r.cluster_sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn errors() {
        let z = DMatrix::zeros(1, 2);
        assert!(matches!(kmeans(&z, 2, 0, 1), Err(EvalError::TooFewPoints { n: 1, k: 2 })));
        assert!(matches!(kmeans(&z, 1, 0, 1), Err(EvalError::TooFewClusters(1))));
    }

    #[test]
    fn more_restarts_never_worse() {
        let z = DMatrix::from_fn(60, 2, |i, j| (((i * 37 + j * 11) % 17) as f64).sin() * (i % 5) as f64);
        for seed in 0..10 {
            let one = kmeans(&z, 4, seed, 1).unwrap();
            let ten = kmeans(&z, 4, seed, 10).unwrap();
            assert!(ten.inertia <= one.inertia);
        }
    }

    #[test]
    fn lloyd_descends() {
        let z = DMatrix::from_fn(80, 3, |i, j| ((i * 13 + j * 7) as f64 * 0.37).sin() * (1 + i % 4) as f64);
        for seed in 0..5 {
            let trace = inertia_trace(&z, 3, seed).unwrap();
            assert!(trace.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{trace:?}");
        }
    }

    #[test]
    fn influential_by_mean_degree() {
        let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
        let r = ClusteringResult {
            labels: vec![1, 0, 0, 0, 0],
            centroids: vec![vec![0.0], vec![1.0]],
            inertia: 0.0,
            influential_cluster: None,
            influential_tie: false,
        };
        let r = label_influential(r, &g);
        assert_eq!(r.influential_cluster, Some(1));
        assert!(!r.influential_tie);

        let cycle = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let r = ClusteringResult { labels: vec![0, 0, 1, 1], ..r };
        let r = label_influential(r, &cycle);
        assert_eq!(r.influential_cluster, Some(0));
        assert!(r.influential_tie);

        let g = Graph::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 5)]).unwrap();
        let r = ClusteringResult {
            labels: vec![2, 1, 0, 0, 0, 0],
            centroids: vec![vec![0.0]; 3],
            ..r
        };
        assert_eq!(label_influential(r, &g).influential_cluster, Some(2));
    }
}
