//! RE-sampled contrastive loss over cosine similarities.
//!
//! `l_i = −log(Σ_{j∈pos_i} e^{cos(Z_i,Z_j)} / Σ_{k∈neg_i} e^{cos(Z_i,Z_k)})`,
//! averaged over nodes.

use nalgebra::DMatrix;

use super::samples::ContrastiveSamples;

/// Embedding rows laid out contiguously, with their norms.
struct Rows {
    data: DMatrix<f64>,
    norms: Vec<f64>,
}

impl Rows {
    fn new(z: &DMatrix<f64>) -> Self {
        let data = z.transpose();
        let norms = data.column_iter().map(|c| c.norm()).collect();
        Self { data, norms }
    }

    fn row(&self, i: usize) -> &[f64] {
        let d = self.data.nrows();
        &self.data.as_slice()[i * d..(i + 1) * d]
    }

    /// Cosine similarity; `None` when either row has zero norm.
    fn cosine(&self, i: usize, j: usize) -> Option<f64> {
        let (ni, nj) = (self.norms[i], self.norms[j]);
        if ni == 0.0 || nj == 0.0 {
            return None;
        }
        let dot: f64 = self.row(i).iter().zip(self.row(j)).map(|(a, b)| a * b).sum();
        Some(dot / (ni * nj))
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContrastiveEval {
    pub loss: f64,
    pub grad: DMatrix<f64>,
    /// Pairs whose cosine was taken as 0 because a row had zero norm.
    pub degenerate_pairs: usize,
}

fn cosines(rows: &Rows, i: usize, js: &[usize], out: &mut Vec<f64>, degenerate: &mut usize) {
    out.clear();
    out.extend(js.iter().map(|&j| {
        rows.cosine(i, j).unwrap_or_else(|| {
            *degenerate += 1;
            0.0
        })
    }));
}

fn eval(z: &DMatrix<f64>, s: &ContrastiveSamples, with_grad: bool) -> ContrastiveEval {
    let n = z.nrows();
    let d = z.ncols();
    let rows = Rows::new(z);
    let mut grad_t = vec![0.0; if with_grad { d * n } else { 0 }];
    let mut gi = vec![0.0; d];
    let mut total = 0.0;
    let mut degenerate = 0;
    let (mut cp, mut cn) = (Vec::new(), Vec::new());
    let inv_n = 1.0 / n as f64;
    for i in 0..n {
        cosines(&rows, i, &s.pos[i], &mut cp, &mut degenerate);
        cosines(&rows, i, &s.neg[i], &mut cn, &mut degenerate);
        let (lp, ln) = (log_sum_exp(&cp), log_sum_exp(&cn));
        total += ln - lp;
        if !with_grad {
            continue;
        }
        // dl_i/dcos: −softmax over positives, +softmax over negatives.
        let pairs = s.pos[i]
            .iter()
            .zip(&cp)
            .map(|(&j, &c)| (j, c, -(c - lp).exp()))
            .chain(s.neg[i].iter().zip(&cn).map(|(&k, &c)| (k, c, (c - ln).exp())));
        gi.fill(0.0);
        let (ni, zi) = (rows.norms[i], rows.row(i));
        for (j, c, weight) in pairs {
            let nj = rows.norms[j];
            if ni == 0.0 || nj == 0.0 {
                continue;
            }
            let a = weight * inv_n;
            let (cross, self_i, self_j) = (a / (ni * nj), a * c / (ni * ni), a * c / (nj * nj));
            let zj = rows.row(j);
            for ((g, &x), &y) in gi.iter_mut().zip(zi).zip(zj) {
                *g += cross * y - self_i * x;
            }
            for ((g, &x), &y) in grad_t[j * d..(j + 1) * d].iter_mut().zip(zi).zip(zj) {
                *g += cross * x - self_j * y;
            }
        }
        for (g, &v) in grad_t[i * d..(i + 1) * d].iter_mut().zip(&gi) {
            *g += v;
        }
    }
    let grad = if with_grad { DMatrix::from_vec(d, n, grad_t).transpose() } else { DMatrix::zeros(0, 0) };
    if degenerate > 0 {
        log::warn!("{degenerate} contrastive pairs involve zero-norm embeddings; cosine taken as 0");
    }
    ContrastiveEval { loss: total * inv_n, grad, degenerate_pairs: degenerate }
}

pub fn contrastive_loss(z: &DMatrix<f64>, s: &ContrastiveSamples) -> f64 {
    eval(z, s, false).loss
}

pub fn contrastive_grad(z: &DMatrix<f64>, s: &ContrastiveSamples) -> DMatrix<f64> {
    eval(z, s, true).grad
}

pub fn contrastive_loss_and_grad(z: &DMatrix<f64>, s: &ContrastiveSamples) -> ContrastiveEval {
    eval(z, s, true)
}

/// Softmax contrastive loss against every non-positive node, computed
/// blockwise from the full cosine matrix. Used only as a timing baseline.
pub fn full_pairwise_loss(z: &DMatrix<f64>, s: &ContrastiveSamples) -> f64 {
    const BLOCK: usize = 256;
    let n = z.nrows();
    let mut unit = z.transpose();
    for mut c in unit.column_iter_mut() {
        let norm = c.norm();
        if norm > 0.0 {
            c /= norm;
        }
    }
    let mut total = 0.0;
    let mut start = 0;
    while start < n {
        let b = BLOCK.min(n - start);
        let cos = unit.columns(start, b).transpose() * &unit;
        for r in 0..b {
            let i = start + r;
            let row = cos.row(r);
            let pos = &s.pos[i];
            let (mut num, mut den) = (0.0, 0.0);
            for (j, &c) in row.iter().enumerate() {
                if j == i {
                    continue;
                }
                if pos.contains(&j) {
                    num += c.exp();
                } else {
                    den += c.exp();
                }
            }
            total += den.ln() - num.ln();
        }
        start += b;
    }
    total / n as f64
}
