use coop_bandits::graph::{
    assign_leaders, bfs_distances, consensus_spectrum, diameter, greedy_clique_cover, greedy_mwis,
    power_graph, Graph,
};
use proptest::prelude::*;

/// Connected graph on `n <= 8` vertices: a random tree plus random extra edges.
fn connected_graph() -> impl Strategy<Value = Graph> {
    (1usize..=8)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
            (
                Just(n),
                parents,
                proptest::collection::vec(any::<bool>(), n * n),
            )
        })
        .prop_map(|(n, parents, extra)| {
            let mut g = Graph::empty(n);
            for (i, p) in parents.into_iter().enumerate() {
                g.add_edge(i + 1, p).unwrap();
            }
            for a in 0..n {
                for b in a + 1..n {
                    if extra[a * n + b] {
                        g.add_edge(a, b).unwrap();
                    }
                }
            }
            g
        })
}

fn subsets(n: usize) -> impl Iterator<Item = Vec<usize>> {
    (0u32..1 << n).map(move |mask| (0..n).filter(|&v| mask >> v & 1 == 1).collect())
}

fn independence_number(g: &Graph) -> usize {
    subsets(g.num_vertices())
        .filter(|s| g.is_independent(s))
        .map(|s| s.len())
        .max()
        .unwrap_or(0)
}

fn floyd_warshall(g: &Graph) -> Vec<Vec<u64>> {
    let n = g.num_vertices();
    let inf = u64::MAX / 4;
    let mut d = vec![vec![inf; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (a, b) in g.edges() {
        d[a][b] = 1;
        d[b][a] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
            }
        }
    }
    d
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn cover_blocks_are_cliques_and_partition(g in connected_graph(), gamma in 0usize..4) {
        let gg = power_graph(&g, gamma);
        let cover = greedy_clique_cover(&gg);
        let mut seen = vec![0; g.num_vertices()];
        for (i, block) in cover.blocks.iter().enumerate() {
            prop_assert!(gg.is_clique(block));
            for &v in block {
                seen[v] += 1;
                prop_assert_eq!(cover.clique_of[v], i);
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
    }

    #[test]
    fn mwis_is_independent_and_maximal(
        g in connected_graph(),
        gamma in 0usize..4,
        weights in proptest::collection::vec(0.0f64..10.0, 8),
    ) {
        let gg = power_graph(&g, gamma);
        let n = gg.num_vertices();
        let set = greedy_mwis(&gg, &weights[..n]);
        prop_assert!(gg.is_independent(&set));
        for v in 0..n {
            if !set.contains(&v) {
                let mut bigger = set.clone();
                bigger.push(v);
                prop_assert!(!gg.is_independent(&bigger), "vertex {} could be added", v);
            }
        }
    }

    #[test]
    fn independence_number_at_most_cover_size(g in connected_graph(), gamma in 0usize..4) {
        let gg = power_graph(&g, gamma);
        let alpha = independence_number(&gg);
        prop_assert!(alpha <= greedy_clique_cover(&gg).num_blocks());
        let degrees: Vec<f64> = (0..gg.num_vertices()).map(|v| gg.degree(v) as f64).collect();
        prop_assert!(greedy_mwis(&gg, &degrees).len() <= alpha);
    }

    #[test]
    fn distances_match_floyd_warshall(g in connected_graph()) {
        let d = bfs_distances(&g);
        let oracle = floyd_warshall(&g);
        let n = g.num_vertices();
        for a in 0..n {
            for b in 0..n {
                prop_assert_eq!(d.hops(a, b) as u64, oracle[a][b]);
                prop_assert_eq!(d.hops(a, b) == 1, g.has_edge(a, b));
                for c in 0..n {
                    prop_assert!(d.hops(a, c) <= d.hops(a, b) + d.hops(b, c));
                }
            }
        }
    }

    #[test]
    fn power_graph_edges_follow_distances(g in connected_graph(), gamma in 0usize..5) {
        let d = bfs_distances(&g);
        let gg = power_graph(&g, gamma);
        for a in 0..g.num_vertices() {
            for b in 0..g.num_vertices() {
                let near = a != b && d.hops(a, b) <= gamma;
                prop_assert_eq!(gg.has_edge(a, b), near);
            }
        }
    }

    #[test]
    fn full_power_graph_collapses(g in connected_graph()) {
        let diam = diameter(&g).unwrap();
        let gg = power_graph(&g, diam);
        prop_assert_eq!(gg.num_edges(), g.num_vertices() * (g.num_vertices() - 1) / 2);
        prop_assert_eq!(greedy_clique_cover(&gg).num_blocks(), 1);
        let w = vec![1.0; g.num_vertices()];
        prop_assert_eq!(greedy_mwis(&gg, &w).len(), 1);
    }

    #[test]
    fn leaders_are_independent_and_dominate(g in connected_graph(), gamma in 1usize..4) {
        let gamma = gamma.min(diameter(&g).unwrap().max(1));
        let gg = power_graph(&g, gamma);
        let d = bfs_distances(&g);
        let la = assign_leaders(&gg, &d);
        prop_assert!(gg.is_independent(&la.leaders));
        for v in 0..g.num_vertices() {
            let l = la.leader_of[v];
            if la.is_leader(v) {
                prop_assert!(la.leaders.contains(&v));
            } else {
                prop_assert!(gg.has_edge(v, l));
                prop_assert!(la.followers_of[&l].contains(&v));
                // no adjacent leader has a higher degree
                for &w in gg.neighbors(v) {
                    if la.is_leader(w) {
                        prop_assert!(gg.degree(w) <= gg.degree(l));
                    }
                }
            }
            prop_assert_eq!(la.distance_to_leader[v], d.hops(v, l));
        }
        let total: usize = la.followers_of.values().map(Vec::len).sum();
        prop_assert_eq!(total + la.leaders.len(), g.num_vertices());
    }

    #[test]
    fn spectrum_invariants(g in connected_graph(), kappa in 0.05f64..0.95) {
        let s = consensus_spectrum(&g, kappa).unwrap();
        let n = g.num_vertices();
        for i in 0..n {
            let row: f64 = (0..n).map(|j| s.p[(i, j)]).sum();
            prop_assert!((row - 1.0).abs() < 1e-9);
        }
        prop_assert!((s.eigenvalues[0] - 1.0).abs() < 1e-9);
        prop_assert!(s.eigenvalues[n - 1] > -1.0);
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(s.reconstruction_error() < 1e-8);
        prop_assert!(s.epsilon >= 0.0);
        prop_assert!(s.epsilon_k.iter().all(|&e| e >= 0.0));
    }
}

#[test]
fn path_cover_is_optimal_partition() {
    let g = Graph::path(4);
    let cover = greedy_clique_cover(&g);
    assert_eq!(cover.blocks, vec![vec![0, 1], vec![2, 3]]);
}

#[test]
fn star_with_degree_weights_picks_center() {
    let g = Graph::star(4);
    let w: Vec<f64> = (0..5).map(|v| g.degree(v) as f64).collect();
    assert_eq!(greedy_mwis(&g, &w), vec![0]);
}
