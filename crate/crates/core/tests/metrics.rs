use proptest::prelude::*;
use recc_core::graph::{largest_eigenvalue, Graph, DEFAULT_EIG_MAX_ITER, DEFAULT_EIG_TOL};
use recc_core::structmetrics::{
    betweenness, closeness, compute_global_metrics, compute_local_metrics, correlation_analysis, eigenvector_centrality,
    local_metric, neighborhood_ranks, pagerank, spearman, MetricName, MetricVector, PAGERANK_DAMPING,
};
use recc_core::synthetic::gnp;

fn get(ms: &[MetricVector], name: MetricName) -> Vec<f64> {
    ms.iter().find(|m| m.metric == name).unwrap().values.clone()
}

fn k3() -> Graph {
    Graph::from_edges(3, &[(0, 1), (1, 2), (0, 2)]).unwrap()
}

fn path3() -> Graph {
    Graph::from_edges(3, &[(0, 1), (1, 2)]).unwrap()
}

fn star4() -> Graph {
    Graph::from_edges(5, &[(0, 1), (0, 2), (0, 3), (0, 4)]).unwrap()
}

/// Enumerates every shortest path between each unordered pair and counts
/// interior visits, weighted by 1 / (number of shortest paths).
fn brute_force_betweenness(g: &Graph) -> Vec<f64> {
    let n = g.n_nodes();
    let mut dist = vec![vec![usize::MAX; n]; n];
    for (s, row) in dist.iter_mut().enumerate() {
        row[s] = 0;
        let mut frontier = vec![s];
        while !frontier.is_empty() {
            let mut next = Vec::new();
            for &u in &frontier {
                for &v in g.neighbors(u) {
                    if row[v] == usize::MAX {
                        row[v] = row[u] + 1;
                        next.push(v);
                    }
                }
            }
            frontier = next;
        }
    }
    fn walk(g: &Graph, dist: &[Vec<usize>], t: usize, path: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == t {
            out.push(path.clone());
            return;
        }
        for &v in g.neighbors(u) {
            if dist[path[0]][v] == path.len() && dist[v][t] + path.len() == dist[path[0]][t] {
                path.push(v);
                walk(g, dist, t, path, out);
                path.pop();
            }
        }
    }
    let mut bc = vec![0.0; n];
    for s in 0..n {
        for t in s + 1..n {
            if dist[s][t] == usize::MAX {
                continue;
            }
            let mut paths = Vec::new();
            walk(g, &dist, t, &mut vec![s], &mut paths);
            let w = 1.0 / paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    bc[v] += w;
                }
            }
        }
    }
    bc
}

#[test]
fn triangle_values() {
    let g = k3();
    let glob = compute_global_metrics(&g).unwrap();
    for v in get(&glob, MetricName::EC) {
        assert!((v - 1.0 / 3.0).abs() < 1e-9);
    }
    assert_eq!(get(&glob, MetricName::CC), vec![1.0; 3]);
    assert_eq!(get(&glob, MetricName::BC), vec![0.0; 3]);
    let loc = compute_local_metrics(&g);
    assert_eq!(get(&loc, MetricName::LCC), vec![1.0; 3]);
    assert_eq!(get(&loc, MetricName::DE), vec![1.0; 3]);
    assert_eq!(get(&loc, MetricName::NM), vec![3.0; 3]);
}

#[test]
fn path_values() {
    let g = path3();
    assert_eq!(betweenness(&g), vec![0.0, 1.0, 0.0]);
    assert_eq!(local_metric(&g, MetricName::EXTD)[1], 4.0);
    assert_eq!(neighborhood_ranks(&g, &local_metric(&g, MetricName::Deg)), vec![1.0, 0.0, 1.0]);
}

#[test]
fn star_values() {
    let g = star4();
    let cc = closeness(&g);
    assert_eq!(cc[0], 1.0);
    for &leaf in &cc[1..] {
        assert!((leaf - 4.0 / 7.0).abs() < 1e-15);
    }
    assert_eq!(local_metric(&g, MetricName::LCC)[0], 0.0);
    assert_eq!(local_metric(&g, MetricName::SPA)[0], 16.0);
    let ranks = neighborhood_ranks(&g, &[0.0, 1.0, 2.0, 3.0, 4.0]);
    assert_eq!(ranks[0], 1.0);
    assert_eq!(ranks[4], 0.0);
}

#[test]
fn betweenness_matches_path_enumeration() {
    let mut checked = 0;
    for seed in 0u64.. {
        if checked == 20 {
            break;
        }
        let n = 4 + (seed as usize * 5) % 27;
        let Some(g) = gnp(n, 0.12 + (seed % 4) as f64 * 0.05, 1000 + seed) else { continue };
        let fast = betweenness(&g);
        let slow = brute_force_betweenness(&g);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9, "seed {seed}: {a} vs {b}");
        }
        checked += 1;
    }
}

#[test]
fn vertex_transitive_graphs_give_constant_metrics() {
    let cycle = Graph::from_edges(7, &(0..7).map(|i| (i, (i + 1) % 7)).collect::<Vec<_>>()).unwrap();
    let k5 = Graph::from_edges(5, &(0..5).flat_map(|a| (a + 1..5).map(move |b| (a, b))).collect::<Vec<_>>()).unwrap();
    for g in [cycle, k5] {
        let all = compute_global_metrics(&g).unwrap().into_iter().chain(compute_local_metrics(&g));
        for m in all {
            let first = m.values[0];
            assert!(m.values.iter().all(|v| (v - first).abs() < 1e-9), "{:?}", m.metric);
        }
    }
}

#[test]
fn correlation_self_negation_and_constant() {
    let g = star4();
    let deg = MetricVector { metric: MetricName::EC, values: vec![4.0, 1.0, 2.0, 3.0, 5.0] };
    let neg = MetricVector { metric: MetricName::PR, values: deg.values.iter().map(|v| -v).collect() };
    let reports = correlation_analysis(&[deg.clone(), neg], &g).unwrap();
    let c = reports[0].coefficient.unwrap();
    assert!((c + 1.0).abs() < 1e-12);
    assert!((spearman(&deg.values, &deg.values).unwrap() - 1.0).abs() < 1e-12);
    let lcc = MetricVector { metric: MetricName::LCC, values: local_metric(&g, MetricName::LCC) };
    let de = MetricVector { metric: MetricName::Deg, values: local_metric(&g, MetricName::Deg) };
    let reports = correlation_analysis(&[lcc, de], &g).unwrap();
    assert_eq!(reports[0].coefficient, None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn centrality_invariants(n in 3usize..30, p in 0.1f64..0.6, seed in 0u64..1000) {
        let Some(g) = gnp(n, p, seed) else { return Ok(()) };
        let pr = pagerank(&g, PAGERANK_DAMPING).unwrap();
        prop_assert!((pr.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        prop_assert!(pr.iter().all(|&v| v >= 0.0));
        let ec = eigenvector_centrality(&g).unwrap();
        prop_assert!(ec.iter().all(|&v| v >= 0.0));
        prop_assert!((ec.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let lambda = largest_eigenvalue(&g, DEFAULT_EIG_TOL, DEFAULT_EIG_MAX_ITER).unwrap();
        // Only meaningful on the component carrying the Perron vector.
        let mut aec = vec![0.0; n];
        g.adj_mul(&ec, &mut aec);
        for i in 0..n {
            prop_assert!((aec[i] - lambda * ec[i]).abs() < 1e-6);
        }
        for name in [MetricName::LCC, MetricName::DE, MetricName::CE] {
            prop_assert!(local_metric(&g, name).iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }
}
