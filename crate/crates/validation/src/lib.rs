//! Property checks shared by the `properties` and `acceptance` targets.
//! Each check runs a proptest and reports the first minimal failure.

use std::collections::VecDeque;

use cyberlab::allocate::{centralized_upper, lower, untargeted, upper};
use cyberlab::centrality::{allocation_weights, betweenness_both, degree_centrality};
use cyberlab::epidemic::{monte_carlo, pandemic_check, CheckOptions, InitialCondition, PandemicCriterion, SirParams};
use cyberlab::graph::{Edge, Graph};
use cyberlab::topoctl::{
    contact_coefficients_edges, contact_coefficients_splits, split_node, split_node_modified, surcharge,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, TestError, TestRunner};

pub fn graph_strategy(max_n: usize) -> impl Strategy<Value = Graph> {
    (1..=max_n).prop_flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        proptest::collection::vec(any::<bool>(), pairs).prop_map(move |mask| {
            let mut edges = Vec::new();
            let mut k = 0;
            for i in 0..n {
                for j in i + 1..n {
                    if mask[k] {
                        edges.push((i, j));
                    }
                    k += 1;
                }
            }
            Graph::from_edges(n, edges).unwrap()
        })
    })
}

fn runner(cases: u32) -> TestRunner {
    TestRunner::new(Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    })
}

fn describe<T: std::fmt::Debug>(r: Result<(), TestError<T>>) -> Result<(), String> {
    r.map_err(|e| e.to_string())
}

/// Shortest-path counts by explicit enumeration of every path.
pub fn brute_force_betweenness(g: &Graph) -> (Vec<f64>, Vec<f64>) {
    let n = g.node_count();
    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; g.edge_count()];
    for s in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            for &w in g.neighbors(v) {
                if dist[w] == usize::MAX {
                    dist[w] = dist[v] + 1;
                    q.push_back(w);
                }
            }
        }
        for t in s + 1..n {
            if dist[t] == usize::MAX {
                continue;
            }
            let mut paths = Vec::new();
            let mut stack = vec![vec![s]];
            while let Some(path) = stack.pop() {
                let last = *path.last().unwrap();
                if last == t {
                    paths.push(path);
                    continue;
                }
                for &w in g.neighbors(last) {
                    if dist[w] == dist[last] + 1 && dist[w] <= dist[t] {
                        let mut p = path.clone();
                        p.push(w);
                        stack.push(p);
                    }
                }
            }
            let sigma = paths.len() as f64;
            for p in &paths {
                for &v in &p[1..p.len() - 1] {
                    node[v] += 1.0 / sigma;
                }
                for w in p.windows(2) {
                    edge[g.edge_id(w[0], w[1]).unwrap()] += 1.0 / sigma;
                }
            }
        }
    }
    (node, edge)
}

pub fn centrality_matches_enumeration(cases: u32) -> Result<(), String> {
    describe(runner(cases).run(&graph_strategy(7), |g| {
        let (want_n, want_e) = brute_force_betweenness(&g);
        let (got_n, got_e) = betweenness_both(&g);
        for (a, b) in got_n.values().iter().zip(&want_n) {
            prop_assert!((a - b).abs() < 1e-9, "node {a} vs {b}");
        }
        for (a, b) in got_e.values().iter().zip(&want_e) {
            prop_assert!((a - b).abs() < 1e-9, "edge {a} vs {b}");
        }
        let deg_sum: f64 = degree_centrality(&g).values().iter().sum();
        prop_assert_eq!(deg_sum, 2.0 * g.edge_count() as f64);
        Ok(())
    }))
}

fn positive_vector() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(prop_oneof![Just(0.0), 0.001f64..100.0], 1..40)
        .prop_filter("some positive entry", |c| c.iter().any(|&x| x > 0.0))
}

fn close_rel(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * b.abs().max(1.0)
}

pub fn budget_conservation(cases: u32) -> Result<(), String> {
    let strategy = (positive_vector(), 0.01f64..50.0, 0.001f64..=1.0, 0.1f64..10.0);
    describe(runner(cases).run(&strategy, |(c, beta, p, scale)| {
        let plans = [
            untargeted(beta, c.len()).unwrap(),
            upper(beta, &c).unwrap(),
            lower(beta, &c).unwrap(),
            centralized_upper(beta, &c, p).unwrap(),
        ];
        for plan in &plans {
            prop_assert!(plan.iter().all(|&x| x >= 0.0));
            prop_assert!(close_rel(plan.iter().sum::<f64>(), beta));
        }
        let full = centralized_upper(beta, &c, 1.0).unwrap();
        prop_assert!(full.iter().zip(&plans[1]).all(|(a, b)| close_rel(*a, *b)));
        let scaled: Vec<f64> = c.iter().map(|x| x * scale).collect();
        let up = upper(beta, &scaled).unwrap();
        prop_assert!(up.iter().zip(&plans[1]).all(|(a, b)| close_rel(*a, *b)));
        let w = allocation_weights(&scaled).unwrap();
        prop_assert!(w.iter().zip(allocation_weights(&c).unwrap()).all(|(a, b)| close_rel(*a, b)));
        for i in 0..c.len() {
            for j in 0..c.len() {
                if c[i] >= c[j] {
                    prop_assert!(plans[1][i] >= plans[1][j]);
                    if c[j] > 0.0 {
                        prop_assert!(plans[2][i] <= plans[2][j]);
                    }
                }
            }
        }
        Ok(())
    }))
}

pub fn contact_normalization(cases: u32) -> Result<(), String> {
    let strategy = (graph_strategy(12), any::<u64>(), positive_vector());
    describe(runner(cases).run(&strategy, |(g, pick, cen)| {
        let removed: Vec<Edge> = g
            .edges()
            .iter()
            .enumerate()
            .filter(|(i, _)| pick >> (i % 64) & 1 == 1)
            .map(|(_, e)| *e)
            .collect();
        match contact_coefficients_edges(g.node_count(), &removed) {
            Ok(c) => {
                prop_assert!(close_rel(c.values().iter().sum::<f64>(), 1.0));
                for (v, ci) in c.values().iter().enumerate() {
                    let eps = removed.iter().filter(|e| e.touches(v)).count();
                    prop_assert_eq!(*ci == 0.0, eps == 0);
                }
            }
            Err(_) => prop_assert!(removed.is_empty()),
        }
        let set: Vec<usize> = (0..cen.len()).filter(|i| pick >> (i % 64) & 1 == 1).collect();
        if let Ok(c) = contact_coefficients_splits(&set, &cen) {
            prop_assert!(close_rel(c.values().iter().sum::<f64>(), 1.0));
            for (i, ci) in c.values().iter().enumerate() {
                if !set.contains(&i) {
                    prop_assert_eq!(*ci, 0.0);
                }
            }
        } else {
            prop_assert!(set.iter().map(|&i| cen[i]).sum::<f64>() == 0.0);
        }
        Ok(())
    }))
}

pub fn surcharge_conservation(cases: u32) -> Result<(), String> {
    let strategy = (graph_strategy(10), proptest::collection::vec(0.0f64..1000.0, 10), 0.0f64..1e4);
    describe(runner(cases).run(&strategy, |(g, base, pool)| {
        let Some(_) = g.edges().first() else { return Ok(()) };
        let c = contact_coefficients_edges(g.node_count(), &g.edges()[..g.edge_count().div_ceil(2)]).unwrap();
        let base = &base[..g.node_count()];
        let adjusted = surcharge(base, &c, pool).unwrap();
        let added: f64 = adjusted.iter().sum::<f64>() - base.iter().sum::<f64>();
        prop_assert!((added - pool).abs() <= 1e-9 * (pool + base.iter().sum::<f64>()).max(1.0));
        for ((a, b), ci) in adjusted.iter().zip(base).zip(c.values()) {
            prop_assert!(*a >= *b);
            if *ci == 0.0 {
                prop_assert_eq!(a, b);
            }
        }
        Ok(())
    }))
}

pub fn split_conservation(cases: u32) -> Result<(), String> {
    let strategy = (graph_strategy(9), any::<prop::sample::Index>(), any::<bool>(), any::<bool>());
    describe(runner(cases).run(&strategy, |(g, idx, modified, by_degree)| {
        let candidates: Vec<usize> = (0..g.node_count()).filter(|&v| g.degree(v) > 0).collect();
        if candidates.is_empty() {
            return Ok(());
        }
        let i = candidates[idx.index(candidates.len())];
        let kind = if by_degree {
            cyberlab::centrality::CentralityKind::Degree
        } else {
            cyberlab::centrality::CentralityKind::Betweenness
        };
        let (h, rec) = if modified {
            split_node_modified(&g, i).unwrap()
        } else {
            split_node(&g, i, kind).unwrap()
        };
        let j = rec.new_node;
        prop_assert_eq!(j, g.node_count());
        prop_assert_eq!(h.node_count(), g.node_count() + 1);
        prop_assert_eq!(h.edge_count(), g.edge_count());
        prop_assert_eq!(h.degree(i) + h.degree(j), g.degree(i));
        prop_assert_eq!(h.degree(j), g.degree(i) / 2);
        prop_assert!(!h.has_edge(i, j));
        for v in 0..g.node_count() {
            if v != i {
                prop_assert_eq!(h.degree(v), g.degree(v));
            }
        }
        Ok(())
    }))
}

/// Ensembles, centralities and pandemic checks give identical results on
/// one worker thread and on four.
pub fn thread_count_determinism(cases: u32) -> Result<(), String> {
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let strategy = (graph_strategy(40), 0.0f64..2.0, 0.2f64..2.0, any::<u64>(), 1u64..3000);
    describe(runner(cases).run(&strategy, |(g, tau, gamma, seed, runs)| {
        let params = SirParams::homogeneous(g.node_count(), tau, gamma).unwrap();
        let init = InitialCondition::UniformRandomSingle;
        let crit = PandemicCriterion::new(0.2, 0.01).unwrap();
        let opts = CheckOptions {
            early_stop: true,
            random_removed_edges: Some(g.edge_count() / 3),
        };
        let work = || {
            (
                monte_carlo(&g, &params, &init, runs, seed).unwrap(),
                betweenness_both(&g),
                pandemic_check(&g, &params, &init, &crit, runs, seed, opts).unwrap(),
            )
        };
        let a = one.install(work);
        let b = four.install(work);
        prop_assert_eq!(&a.0, &b.0);
        prop_assert_eq!(&a.1, &b.1);
        prop_assert_eq!(&a.2, &b.2);
        Ok(())
    }))
}
