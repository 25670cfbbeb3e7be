use std::cmp::Ordering;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::resim::ReSimMatrix;

pub const DEFAULT_K_POS: usize = 2;
pub const DEFAULT_K_NEG: usize = 1;

/// Per-node positive and negative sample lists, fixed for a whole run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContrastiveSamples {
    pub pos: Vec<Vec<usize>>,
    pub neg: Vec<Vec<usize>>,
    pub k_p: usize,
    pub k_n: usize,
}

impl ContrastiveSamples {
    pub fn n(&self) -> usize {
        self.pos.len()
    }
}

/// Top `k_p` and bottom `k_n` of every row of the RE similarity matrix.
pub fn select_samples(sim: &ReSimMatrix, k_p: usize, k_n: usize) -> Result<ContrastiveSamples, TrainError> {
    select_from_similarity(&sim.s, k_p, k_n)
}

/// Candidates `j ≠ i` are ordered by `S(i, j)` descending with smaller
/// indices first among ties; positives are the head of that order and
/// negatives its tail.
pub fn select_from_similarity(s: &DMatrix<f64>, k_p: usize, k_n: usize) -> Result<ContrastiveSamples, TrainError> {
    let n = s.nrows();
    if k_p == 0 || k_n == 0 || n <= k_p + k_n {
        return Err(TrainError::TooFewNodes { n, k_p, k_n });
    }
    let mut pos = Vec::with_capacity(n);
    let mut neg = Vec::with_capacity(n);
    let mut cand: Vec<usize> = Vec::with_capacity(n - 1);
    for i in 0..n {
        // Column i equals row i by symmetry and is contiguous.
        let row = s.column(i);
        let order = |a: &usize, b: &usize| -> Ordering { row[*b].total_cmp(&row[*a]).then(a.cmp(b)) };
        cand.clear();
        cand.extend((0..n).filter(|&j| j != i));
        cand.select_nth_unstable_by(k_p - 1, order);
        let mut top = cand[..k_p].to_vec();
        top.sort_by(order);
        let m = cand.len();
        cand.select_nth_unstable_by(m - k_n, order);
        let mut bottom = cand[m - k_n..].to_vec();
        bottom.sort_by(order);
        pos.push(top);
        neg.push(bottom);
    }
    Ok(ContrastiveSamples { pos, neg, k_p, k_n })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_extremes_of_row() {
        let s = DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.9, 0.2, 0.5, 0.9, 1.0, 0.3, 0.1, 0.2, 0.3, 1.0, 0.4, 0.5, 0.1, 0.4, 1.0],
        );
        let samples = select_from_similarity(&s, 2, 1).unwrap();
        assert_eq!(samples.pos[0], vec![1, 3]);
        assert_eq!(samples.neg[0], vec![2]);
    }

    #[test]
    fn ties_prefer_smaller_indices() {
        let n = 6;
        let s = DMatrix::from_fn(n, n, |i, j| if i == j { 2.0 } else { 0.5 });
        let samples = select_from_similarity(&s, 2, 1).unwrap();
        assert_eq!(samples.pos[0], vec![1, 2]);
        assert_eq!(samples.neg[0], vec![n - 1]);
        assert_eq!(samples.pos[5], vec![0, 1]);
        assert_eq!(samples.neg[5], vec![4]);
    }

    #[test]
    fn too_few_nodes() {
        let s = DMatrix::identity(3, 3);
        assert!(matches!(select_from_similarity(&s, 2, 1), Err(TrainError::TooFewNodes { n: 3, .. })));
    }
}
