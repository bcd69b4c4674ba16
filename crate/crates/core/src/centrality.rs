//! Node and edge centralities and the allocation weights derived from them.
//!
//! Betweenness sums run over unordered node pairs. Pairs without a
//! connecting path contribute nothing.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::{Edge, Graph};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CentralityKind {
    Degree,
    Betweenness,
    Investment,
}

impl fmt::Display for CentralityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CentralityKind::Degree => "degree",
            CentralityKind::Betweenness => "betweenness",
            CentralityKind::Investment => "investment",
        })
    }
}

impl FromStr for CentralityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "degree" | "deg" => Ok(CentralityKind::Degree),
            "betweenness" | "bet" => Ok(CentralityKind::Betweenness),
            "investment" | "inv" => Ok(CentralityKind::Investment),
            other => Err(invalid("centrality", format!("unknown kind `{other}`"))),
        }
    }
}

/// Non-negative score per node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentralityVector {
    kind: CentralityKind,
    values: Vec<f64>,
}

impl CentralityVector {
    pub fn new(kind: CentralityKind, values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(invalid("centrality", format!("entry {v} is negative or not finite")));
        }
        Ok(CentralityVector { kind, values })
    }

    pub fn kind(&self) -> CentralityKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Node ids by descending score, ties by ascending id.
    pub fn ranking(&self) -> Vec<usize> {
        ranking(&self.values)
    }

    pub fn argmax(&self) -> Option<usize> {
        self.ranking().first().copied()
    }
}

/// Indices sorted by descending value, ties broken by ascending index.
pub fn ranking(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Edge betweenness aligned with [`Graph::edges`].
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeCentralityMap {
    edges: Vec<Edge>,
    values: Vec<f64>,
}

impl EdgeCentralityMap {
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, e: Edge) -> Option<f64> {
        self.edges.binary_search(&e).ok().map(|i| self.values[i])
    }

    /// Edges by descending centrality; ties keep lexicographic edge order.
    pub fn ranked_edges(&self) -> Vec<Edge> {
        ranking(&self.values).into_iter().map(|i| self.edges[i]).collect()
    }
}

pub fn degree_centrality(g: &Graph) -> CentralityVector {
    CentralityVector {
        kind: CentralityKind::Degree,
        values: g.degrees().into_iter().map(|d| d as f64).collect(),
    }
}

pub fn betweenness_centrality(g: &Graph) -> CentralityVector {
    CentralityVector {
        kind: CentralityKind::Betweenness,
        values: accumulate(g).0,
    }
}

pub fn edge_betweenness(g: &Graph) -> EdgeCentralityMap {
    EdgeCentralityMap {
        edges: g.edges().to_vec(),
        values: accumulate(g).1,
    }
}

/// Both betweenness measures in one sweep.
pub fn betweenness_both(g: &Graph) -> (CentralityVector, EdgeCentralityMap) {
    let (nodes, edges) = accumulate(g);
    (
        CentralityVector {
            kind: CentralityKind::Betweenness,
            values: nodes,
        },
        EdgeCentralityMap {
            edges: g.edges().to_vec(),
            values: edges,
        },
    )
}

const SOURCE_CHUNK: usize = 32;

/// Dependency accumulation from every source. Chunks of sources are summed
/// in a fixed order so results do not depend on the worker count.
fn accumulate(g: &Graph) -> (Vec<f64>, Vec<f64>) {
    let n = g.node_count();
    let m = g.edge_count();
    let sources: Vec<usize> = (0..n).collect();
    let partials: Vec<(Vec<f64>, Vec<f64>)> = sources
        .par_chunks(SOURCE_CHUNK)
        .map(|chunk| {
            let mut scratch = Scratch::new(n);
            let mut node = vec![0.0; n];
            let mut edge = vec![0.0; m];
            for &s in chunk {
                scratch.single_source(g, s, &mut node, &mut edge);
            }
            (node, edge)
        })
        .collect();
    let mut node = vec![0.0; n];
    let mut edge = vec![0.0; m];
    for (pn, pe) in partials {
        node.iter_mut().zip(pn).for_each(|(a, b)| *a += b);
        edge.iter_mut().zip(pe).for_each(|(a, b)| *a += b);
    }
    // Every unordered pair was reached from both of its endpoints.
    node.iter_mut().for_each(|v| *v /= 2.0);
    edge.iter_mut().for_each(|v| *v /= 2.0);
    (node, edge)
}

struct Scratch {
    dist: Vec<i64>,
    sigma: Vec<f64>,
    delta: Vec<f64>,
    order: Vec<usize>,
    queue: VecDeque<usize>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Scratch {
            dist: vec![-1; n],
            sigma: vec![0.0; n],
            delta: vec![0.0; n],
            order: Vec::with_capacity(n),
            queue: VecDeque::with_capacity(n),
        }
    }

    fn single_source(&mut self, g: &Graph, s: usize, node: &mut [f64], edge: &mut [f64]) {
        for &v in &self.order {
            self.dist[v] = -1;
            self.sigma[v] = 0.0;
            self.delta[v] = 0.0;
        }
        self.order.clear();
        self.dist[s] = 0;
        self.sigma[s] = 1.0;
        self.queue.push_back(s);
        while let Some(v) = self.queue.pop_front() {
            self.order.push(v);
            for &w in g.neighbors(v) {
                if self.dist[w] < 0 {
                    self.dist[w] = self.dist[v] + 1;
                    self.queue.push_back(w);
                }
                if self.dist[w] == self.dist[v] + 1 {
                    self.sigma[w] += self.sigma[v];
                }
            }
        }
        // Predecessors of w are the neighbors one hop closer to s.
        for &w in self.order.iter().rev() {
            let coeff = (1.0 + self.delta[w]) / self.sigma[w];
            for (&v, &id) in g.neighbors(w).iter().zip(g.incident_edges(w)) {
                if self.dist[v] == self.dist[w] - 1 {
                    let share = self.sigma[v] * coeff;
                    edge[id] += share;
                    self.delta[v] += share;
                }
            }
            if w != s {
                node[w] += self.delta[w];
            }
        }
    }
}

/// Normalizes centralities into weights summing to one.
pub fn allocation_weights(c: &[f64]) -> Result<Vec<f64>> {
    if c.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(invalid("centrality", "entries must be finite and non-negative"));
    }
    let total: f64 = c.iter().sum();
    if total <= 0.0 {
        return Err(Error::ZeroCentrality);
    }
    Ok(c.iter().map(|v| v / total).collect())
}

/// Reciprocal weights; zero weights stay zero.
pub fn inverse_weights(w: &[f64]) -> Vec<f64> {
    w.iter()
        .map(|&x| if x != 0.0 { 1.0 / x } else { 0.0 })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixture, Fixture};

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn degree_values() {
        let tree = degree_centrality(&fixture(Fixture::Tree8));
        assert_eq!(tree.values()[1], 3.0);
        let star = degree_centrality(&fixture(Fixture::Star8));
        assert_eq!(star.values()[0], 7.0);
        assert!(star.values()[1..].iter().all(|&v| v == 1.0));
        assert!(degree_centrality(&Graph::empty(4)).values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn node_betweenness_fixtures() {
        let tree = betweenness_centrality(&fixture(Fixture::Tree8));
        assert!(close(tree.values()[1], 15.0));
        let star = betweenness_centrality(&fixture(Fixture::Star8));
        assert!(close(star.values()[0], 21.0));
        let complete = betweenness_centrality(&fixture(Fixture::Complete8));
        assert!(complete.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn edge_betweenness_fixtures() {
        let eb = edge_betweenness(&fixture(Fixture::Tree8));
        assert!(close(eb.get(Edge::new(1, 2)).unwrap(), 15.0));
        assert!(close(eb.get(Edge::new(0, 1)).unwrap(), 7.0));
        let k3 = edge_betweenness(&Graph::complete(3));
        assert!(k3.values().iter().all(|&v| close(v, 1.0)));
    }

    #[test]
    fn disconnected_pairs_contribute_nothing() {
        let g = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        let b = betweenness_centrality(&g);
        assert_eq!(b.values(), &[0.0, 1.0, 0.0, 0.0, 1.0, 0.0]);
    }

    #[test]
    fn ranking_breaks_ties_by_id() {
        assert_eq!(ranking(&[1.0, 3.0, 3.0, 0.0]), vec![1, 2, 0, 3]);
        let eb = edge_betweenness(&Graph::complete(4));
        assert_eq!(eb.ranked_edges()[0], Edge::new(0, 1));
    }

    #[test]
    fn weights() {
        assert_eq!(allocation_weights(&[1.0, 1.0, 2.0]).unwrap(), vec![0.25, 0.25, 0.5]);
        assert_eq!(allocation_weights(&[0.0, 3.0, 1.0]).unwrap(), vec![0.0, 0.75, 0.25]);
        assert_eq!(allocation_weights(&[2.0; 4]).unwrap(), vec![0.25; 4]);
        assert_eq!(allocation_weights(&[0.0, 0.0]), Err(Error::ZeroCentrality));
        assert_eq!(inverse_weights(&[0.5, 0.5, 0.0]), vec![2.0, 2.0, 0.0]);
        let inv = inverse_weights(&[0.25, 0.75]);
        assert!(close(inv[0], 4.0) && close(inv[1], 4.0 / 3.0));
        assert_eq!(inverse_weights(&[0.2; 5]), vec![5.0; 5]);
    }

    #[test]
    fn kind_parsing() {
        assert_eq!("bet".parse::<CentralityKind>().unwrap(), CentralityKind::Betweenness);
        assert!("eigen".parse::<CentralityKind>().is_err());
    }
}
