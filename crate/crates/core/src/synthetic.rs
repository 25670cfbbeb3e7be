//! Small generated graphs for tests, benchmarks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::graph::{Graph, LabelVector};

/// `hubs` fully connected hub nodes, each with `leaves` pendant leaves.
/// Hubs are indices `0..hubs` and carry label 1.
pub fn hub_and_leaves(hubs: usize, leaves: usize) -> (Graph, LabelVector) {
    let n = hubs * (leaves + 1);
    let mut edges = Vec::new();
    for a in 0..hubs {
        for b in a + 1..hubs {
            edges.push((a, b));
        }
        for l in 0..leaves {
            edges.push((a, hubs + a * leaves + l));
        }
    }
    let g = Graph::from_edges(n, &edges).expect("hub/leaf edges are in range");
    let labels = (0..n).map(|i| usize::from(i < hubs)).collect();
    (g, LabelVector(labels))
}

/// Erdős–Rényi `G(n, p)`. May contain isolated nodes; returns `None` when
/// no edge was drawn.
pub fn gnp(n: usize, p: f64, seed: u64) -> Option<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut edges = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            if rng.random::<f64>() < p {
                edges.push((a, b));
            }
        }
    }
    if edges.is_empty() {
        None
    } else {
        Graph::from_edges(n, &edges).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hub_leaf_shape() {
        let (g, y) = hub_and_leaves(8, 15);
        assert_eq!(g.n_nodes(), 128);
        assert_eq!(g.n_edges(), 28 + 120);
        assert_eq!(g.degree(0), 7 + 15);
        assert_eq!(g.degree(127), 1);
        assert_eq!(y.as_slice().iter().sum::<usize>(), 8);
    }

    #[test]
    fn gnp_is_seeded() {
        let a = gnp(20, 0.2, 3).unwrap();
        let b = gnp(20, 0.2, 3).unwrap();
        assert_eq!(a.edges(), b.edges());
    }
}
