//! Invariants checked with proptest.

use cyberlab_validation as checks;

use cyberlab::centrality::{betweenness_centrality, edge_betweenness};
use cyberlab::graph::{
    avg_shortest_path, barabasi_albert, connected_components, erdos_renyi, shortest_path_lengths, Graph,
};
use cyberlab::secgame::{best_response, cost, response_bracket, DEFAULT_K};
use proptest::prelude::*;

#[test]
fn centrality_matches_path_enumeration() {
    checks::centrality_matches_enumeration(256).unwrap();
}

#[test]
fn allocation_budget_is_conserved() {
    checks::budget_conservation(256).unwrap();
}

#[test]
fn contact_coefficients_are_normalized() {
    checks::contact_normalization(256).unwrap();
}

#[test]
fn surcharge_conserves_pool() {
    checks::surcharge_conservation(256).unwrap();
}

#[test]
fn splits_conserve_degree() {
    checks::split_conservation(256).unwrap();
}

#[test]
fn results_do_not_depend_on_thread_count() {
    checks::thread_count_determinism(24).unwrap();
}

fn random_tree(n: usize, parents: &[prop::sample::Index]) -> Graph {
    Graph::from_edges(n, (1..n).map(|v| (parents[v - 1].index(v), v))).unwrap()
}

proptest! {
    #[test]
    fn tree_betweenness_sums(n in 2usize..20, parents in proptest::collection::vec(any::<prop::sample::Index>(), 19)) {
        let g = random_tree(n, &parents);
        let hops = shortest_path_lengths(&g);
        let mut interior = 0u32;
        for i in 0..n {
            for j in i + 1..n {
                interior += hops.get(i, j).unwrap() - 1;
            }
        }
        let total: f64 = betweenness_centrality(&g).values().iter().sum();
        prop_assert!((total - f64::from(interior)).abs() < 1e-9);
        let eb = edge_betweenness(&g);
        for (e, v) in eb.edges().iter().zip(eb.values()) {
            let side = connected_components(&g.without_edges(&[*e]))
                .into_iter()
                .find(|p| p.contains(&e.lo()))
                .unwrap()
                .len();
            prop_assert!((v - (side * (n - side)) as f64).abs() < 1e-9);
        }
    }

    #[test]
    fn path_lengths_agree_with_components(g in checks::graph_strategy(9)) {
        let hops = shortest_path_lengths(&g);
        let parts = connected_components(&g);
        let mut label = vec![0; g.node_count()];
        for (k, p) in parts.iter().enumerate() {
            p.iter().for_each(|&v| label[v] = k);
        }
        prop_assert_eq!(parts.iter().map(Vec::len).sum::<usize>(), g.node_count());
        for i in 0..g.node_count() {
            prop_assert_eq!(hops.get(i, i), Some(0));
            for j in 0..g.node_count() {
                prop_assert_eq!(hops.get(i, j), hops.get(j, i));
                prop_assert_eq!(hops.get(i, j).is_some(), label[i] == label[j]);
                for k in 0..g.node_count() {
                    if let (Some(a), Some(b), Some(c)) = (hops.get(i, j), hops.get(i, k), hops.get(k, j)) {
                        prop_assert!(a <= b + c);
                    }
                }
            }
        }
    }

    #[test]
    fn complete_graph_path_length_is_one(n in 2usize..30) {
        prop_assert_eq!(avg_shortest_path(&Graph::complete(n)).unwrap(), 1.0);
    }

    #[test]
    fn generators_are_deterministic(n in 5usize..80, m in 1usize..5, p in 0.0f64..0.5, seed: u64) {
        prop_assert_eq!(erdos_renyi(n, p, seed).unwrap(), erdos_renyi(n, p, seed).unwrap());
        let ba = barabasi_albert(n, m, seed).unwrap();
        prop_assert_eq!(&ba, &barabasi_albert(n, m, seed).unwrap());
        let edges = m * (n - m) + m * (m - 1) / 2;
        prop_assert_eq!(ba.degrees().iter().sum::<usize>(), 2 * edges);
    }

    #[test]
    fn best_response_is_monotone_and_bracketed(n in 1usize..2000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let lo_p = 1.0 / n as f64;
        let (p, q) = (lo_p + (1.0 - lo_p) * a.min(b), lo_p + (1.0 - lo_p) * a.max(b));
        let (lo, hi) = response_bracket(DEFAULT_K, n).unwrap();
        let gp = best_response(p, DEFAULT_K, n).unwrap();
        let gq = best_response(q, DEFAULT_K, n).unwrap();
        prop_assert!(gp >= lo && gq <= hi);
        if q > p * (1.0 + 1e-9) {
            prop_assert!(gq > gp);
        }
        let residual = DEFAULT_K * (DEFAULT_K * gp).exp() * gp * gp - p;
        prop_assert!((residual / p).abs() < 1e-8);
    }

    #[test]
    fn expenses_are_strictly_convex(p in 0.01f64..1.0, x in 0.05f64..4.0, y in 0.05f64..4.0) {
        prop_assume!((x - y).abs() > 1e-3);
        let e = |g: f64| cost(g, DEFAULT_K) + p / g;
        prop_assert!(e(0.5 * (x + y)) < 0.5 * (e(x) + e(y)));
    }
}
