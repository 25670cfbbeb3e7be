use proptest::prelude::*;
use recc_core::graph::{largest_eigenvalue, parse_edge_list, parse_labels, Graph, GraphError, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL};

fn arb_edges() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
    (2usize..40).prop_flat_map(|n| (Just(n), proptest::collection::vec((0..n, 0..n), 1..4 * n)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn structural_invariants((n, es) in arb_edges()) {
        let Ok(g) = Graph::from_edges(n, &es) else { return Ok(()) };
        let degree_sum: usize = (0..n).map(|i| g.degree(i)).sum();
        prop_assert_eq!(degree_sum, 2 * g.n_edges());
        for i in 0..n {
            prop_assert!(!g.has_edge(i, i));
            for &j in g.neighbors(i) {
                prop_assert!(g.has_edge(j, i));
            }
        }
        let a = g.adjacency_dense();
        prop_assert_eq!(&a, &a.transpose());
    }

    #[test]
    fn spectral_radius_bounds((n, es) in arb_edges()) {
        let Ok(g) = Graph::from_edges(n, &es) else { return Ok(()) };
        prop_assume!(g.n_edges() > 0);
        let lambda = largest_eigenvalue(&g, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER).unwrap();
        let dmax = (0..n).map(|i| g.degree(i)).max().unwrap() as f64;
        let davg = 2.0 * g.n_edges() as f64 / n as f64;
        prop_assert!(lambda <= dmax + 1e-8);
        prop_assert!(lambda >= davg.max(dmax.sqrt()) - 1e-8);
    }

    #[test]
    fn permutation_preserves_spectrum((n, es) in arb_edges(), rot in 1usize..40) {
        let Ok(g) = Graph::from_edges(n, &es) else { return Ok(()) };
        prop_assume!(g.n_edges() > 0);
        let perm: Vec<usize> = (0..n).map(|i| (i + rot) % n).collect();
        let p = g.permuted(&perm).unwrap();
        prop_assert_eq!(p.n_edges(), g.n_edges());
        let l1 = largest_eigenvalue(&g, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER).unwrap();
        let l2 = largest_eigenvalue(&p, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER).unwrap();
        prop_assert!((l1 - l2).abs() < 1e-8);
    }
}

#[test]
fn parse_plumbing() {
    let g = parse_edge_list("# comment\na b 0.5\nb c\n% other\nc c\nb a\n").unwrap();
    assert_eq!(g.n_nodes(), 3);
    assert_eq!(g.n_edges(), 2);
    assert_eq!(g.node_ids(), ["a", "b", "c"]);
    assert!(matches!(parse_edge_list("a b\nlonely\n"), Err(GraphError::MalformedLine { line: 2, .. })));
    assert!(matches!(parse_edge_list("# nothing\n"), Err(GraphError::NoEdges)));
    let y = parse_labels("a 0\nb 1\nc 0\n", &g).unwrap();
    assert_eq!(y.as_slice(), [0, 1, 0]);
}

#[test]
fn bipartite_star_eigenvalue() {
    let g = Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap();
    let l = largest_eigenvalue(&g, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER).unwrap();
    assert!((l - 2.0).abs() < 1e-9);
}
