//! External clustering scores: matched accuracy, NMI and ARI.

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
}

fn relabel(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut map = std::collections::BTreeMap::new();
    for &l in labels {
        let next = map.len();
        map.entry(l).or_insert(next);
    }
    (labels.iter().map(|l| map[l]).collect(), map.len())
}

fn contingency(pred: &[usize], truth: &[usize]) -> Vec<Vec<u64>> {
    let (p, kp) = relabel(pred);
    let (t, kt) = relabel(truth);
    let mut table = vec![vec![0u64; kt]; kp];
    for (a, b) in p.iter().zip(&t) {
        table[*a][*b] += 1;
    }
    table
}

/// Fraction matched under the best one-to-one mapping of predicted to true
/// labels.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    check(pred, truth)?;
    let table = contingency(pred, truth);
    let size = table.len().max(table[0].len());
    let weights = Matrix::from_fn(size, size, |(i, j)| {
        table.get(i).and_then(|row| row.get(j)).copied().unwrap_or(0) as i64
    });
    let (matched, _) = kuhn_munkres(&weights);
    Ok(matched as f64 / pred.len() as f64)
}

fn entropy(counts: impl Iterator<Item = u64>, n: f64) -> f64 {
    counts
        .filter(|&c| c > 0)
        .map(|c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the arithmetic mean of the entropies.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    check(pred, truth)?;
    let table = contingency(pred, truth);
    let n = pred.len() as f64;
    let rows: Vec<u64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<u64> = (0..table[0].len()).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let (hp, ht) = (entropy(rows.iter().copied(), n), entropy(cols.iter().copied(), n));
    if hp == 0.0 && ht == 0.0 {
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / ((hp + ht) / 2.0)).clamp(0.0, 1.0))
}

fn comb2(x: u64) -> f64 {
    (x as f64) * (x as f64 - 1.0) / 2.0
}

/// Adjusted Rand index from pair counts.
pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64, EvalError> {
    check(pred, truth)?;
    let table = contingency(pred, truth);
    let index: f64 = table.iter().flatten().map(|&c| comb2(c)).sum();
    let a: f64 = table.iter().map(|r| comb2(r.iter().sum())).sum();
    let b: f64 = (0..table[0].len()).map(|j| comb2(table.iter().map(|r| r[j]).sum())).sum();
    let expected = a * b / comb2(pred.len() as u64);
    let max = (a + b) / 2.0;
    if max == expected {
        return Ok(1.0);
    }
    Ok((index - expected) / (max - expected))
}

fn check(pred: &[usize], truth: &[usize]) -> Result<(), EvalError> {
    if pred.len() != truth.len() {
        return Err(EvalError::LengthMismatch(pred.len(), truth.len()));
    }
    if pred.is_empty() {
        return Err(EvalError::Empty);
    }
    Ok(())
}

pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<EvalReport, EvalError> {
    Ok(EvalReport { acc: accuracy(pred, truth)?, nmi: nmi(pred, truth)?, ari: ari(pred, truth)? })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity() {
        let x = [0, 1, 1, 2, 0, 2];
        assert_eq!(evaluate(&x, &x).unwrap(), EvalReport { acc: 1.0, nmi: 1.0, ari: 1.0 });
    }

    #[test]
    fn swapped_labels() {
        let r = evaluate(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(r.acc, 1.0);
        assert_eq!(r.ari, 1.0);
        assert!((r.nmi - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constant_prediction() {
        let r = evaluate(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r, EvalReport { acc: 0.5, nmi: 0.0, ari: 0.0 });
    }

    #[test]
    fn uneven_label_counts() {
        // Three predicted clusters against two true ones.
        let acc = accuracy(&[0, 0, 1, 2, 2, 2], &[0, 0, 0, 1, 1, 1]).unwrap();
        assert!((acc - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn length_mismatch() {
        assert!(matches!(evaluate(&[0, 1], &[0]), Err(EvalError::LengthMismatch(2, 1))));
    }
}
