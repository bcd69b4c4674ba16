//! Undirected simple graphs, random generators, fixtures and path metrics.
//!
//! Nodes are labeled `0..n`. Edges are stored once in canonical `(lo, hi)`
//! order and sorted lexicographically; an edge's id is its position in that
//! list. Adjacency is kept in compressed form with sorted neighbor lists and
//! the id of the edge that reaches each neighbor.

use std::collections::VecDeque;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::{stream, Seed};

/// Undirected edge with `lo < hi`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Edge {
    lo: usize,
    hi: usize,
}

impl Edge {
    /// Canonical edge between `a` and `b`. Panics on a self-loop.
    pub fn new(a: usize, b: usize) -> Self {
        assert_ne!(a, b, "self-loop {a}-{a}");
        Edge {
            lo: a.min(b),
            hi: a.max(b),
        }
    }

    pub fn lo(&self) -> usize {
        self.lo
    }

    pub fn hi(&self) -> usize {
        self.hi
    }

    pub fn touches(&self, node: usize) -> bool {
        self.lo == node || self.hi == node
    }

    /// The endpoint opposite to `node`.
    pub fn other(&self, node: usize) -> usize {
        if self.lo == node {
            self.hi
        } else {
            self.lo
        }
    }
}

impl fmt::Display for Edge {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.lo, self.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<Edge>,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    incident: Vec<usize>,
}

impl Graph {
    /// Builds a graph, rejecting self-loops, duplicates and out-of-range endpoints.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= n || b >= n {
                return Err(Error::NodeOutOfRange { node: a.max(b), n });
            }
            if a == b {
                return Err(Error::InvalidGraph(format!("self-loop at node {a}")));
            }
            list.push(Edge::new(a, b));
        }
        list.sort_unstable();
        if let Some(w) = list.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidGraph(format!("duplicate edge {}", w[0])));
        }
        Ok(Self::from_sorted_unique(n, list))
    }

    pub fn empty(n: usize) -> Self {
        Self::from_sorted_unique(n, Vec::new())
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| Edge::new(i, j)))
            .collect();
        Self::from_sorted_unique(n, edges)
    }

    fn from_sorted_unique(n: usize, edges: Vec<Edge>) -> Self {
        let mut degree = vec![0usize; n];
        for e in &edges {
            degree[e.lo] += 1;
            degree[e.hi] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets[..n].to_vec();
        let mut neighbors = vec![0; 2 * edges.len()];
        let mut incident = vec![0; 2 * edges.len()];
        // Smaller neighbors first, then larger ones: with edges sorted this
        // leaves every neighbor list ascending.
        for (id, e) in edges.iter().enumerate() {
            neighbors[fill[e.hi]] = e.lo;
            incident[fill[e.hi]] = id;
            fill[e.hi] += 1;
        }
        for (id, e) in edges.iter().enumerate() {
            neighbors[fill[e.lo]] = e.hi;
            incident[fill[e.lo]] = id;
            fill[e.lo] += 1;
        }
        Graph {
            n,
            edges,
            offsets,
            neighbors,
            incident,
        }
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in lexicographic order; the index is the edge id.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.neighbors[self.offsets[v]..self.offsets[v + 1]]
    }

    /// Edge ids parallel to [`Graph::neighbors`].
    pub fn incident_edges(&self, v: usize) -> &[usize] {
        &self.incident[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n).map(|v| self.degree(v)).collect()
    }

    pub fn edge_id(&self, a: usize, b: usize) -> Option<usize> {
        if a == b || a >= self.n || b >= self.n {
            return None;
        }
        self.edges.binary_search(&Edge::new(a, b)).ok()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.edge_id(a, b).is_some()
    }

    /// Copy of the graph without the given edges. Edges not present are ignored.
    pub fn without_edges(&self, removed: &[Edge]) -> Graph {
        let mut drop = vec![false; self.edges.len()];
        for e in removed {
            if let Ok(id) = self.edges.binary_search(e) {
                drop[id] = true;
            }
        }
        let kept = self
            .edges
            .iter()
            .zip(&drop)
            .filter(|(_, &d)| !d)
            .map(|(e, _)| *e)
            .collect();
        Self::from_sorted_unique(self.n, kept)
    }

    /// Dense 0/1 adjacency matrix, only for small graphs (n ≤ 64).
    pub fn adjacency_matrix(&self) -> Result<Vec<Vec<u8>>> {
        if self.n > 64 {
            return Err(Error::TooManyNodes { n: self.n, max: 64 });
        }
        let mut a = vec![vec![0u8; self.n]; self.n];
        for e in &self.edges {
            a[e.lo][e.hi] = 1;
            a[e.hi][e.lo] = 1;
        }
        Ok(a)
    }

    /// Writes the edge-list text format: `n=<N>` followed by one `i j` line per edge.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "n={}", self.n)?;
        for e in &self.edges {
            writeln!(out, "{} {}", e.lo, e.hi)?;
        }
        Ok(())
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph> {
        let mut n = None;
        let mut pairs = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line_no = idx + 1;
            let line = line.map_err(|e| Error::EdgeListFormat {
                line: line_no,
                reason: e.to_string(),
            })?;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let bad = |reason: &str| Error::EdgeListFormat {
                line: line_no,
                reason: reason.to_string(),
            };
            match n {
                None => {
                    let value = line
                        .strip_prefix("n=")
                        .ok_or_else(|| bad("expected header `n=<N>`"))?;
                    n = Some(value.trim().parse::<usize>().map_err(|_| bad("bad node count"))?);
                }
                Some(_) => {
                    let mut it = line.split_whitespace();
                    let mut field = || -> Result<usize> {
                        it.next()
                            .ok_or_else(|| bad("expected two node ids"))?
                            .parse()
                            .map_err(|_| bad("node id is not an integer"))
                    };
                    let (a, b) = (field()?, field()?);
                    if it.next().is_some() {
                        return Err(bad("trailing fields"));
                    }
                    if a >= b {
                        return Err(bad("pairs must satisfy i < j"));
                    }
                    pairs.push((a, b));
                }
            }
        }
        let n = n.ok_or(Error::EdgeListFormat {
            line: 1,
            reason: "missing header".into(),
        })?;
        Graph::from_edges(n, pairs)
    }
}

/// Erdős–Rényi graph: every pair `i < j` is included independently with probability `p`.
///
/// Pairs are visited in lexicographic order and each consumes one uniform draw.
pub fn erdos_renyi(n: usize, p: f64, seed: Seed) -> Result<Graph> {
    if n == 0 {
        return Err(invalid("n", "need at least one node"));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(invalid("p", format!("{p} is not a probability")));
    }
    let mut rng = stream(seed, 0);
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < p {
                edges.push(Edge::new(i, j));
            }
        }
    }
    Ok(Graph::from_sorted_unique(n, edges))
}

/// Barabási–Albert growth with preferential attachment.
///
/// The initial core is a clique on `m` nodes. Each new node attaches to `m`
/// distinct existing nodes drawn with probability proportional to their
/// degree before the node arrived; duplicate draws are redrawn. While the
/// total degree is zero (only for `m = 1`) targets are drawn uniformly.
pub fn barabasi_albert(n: usize, m: usize, seed: Seed) -> Result<Graph> {
    if m == 0 {
        return Err(invalid("m", "need at least one edge per new node"));
    }
    if n < m {
        return Err(invalid("n", format!("n = {n} is smaller than m = {m}")));
    }
    let mut rng = stream(seed, 0);
    let mut edges: Vec<Edge> = Vec::with_capacity(m * (n - m) + m * (m - 1) / 2);
    // One entry per edge endpoint: uniform picks are degree-proportional.
    let mut stubs: Vec<usize> = Vec::with_capacity(2 * edges.capacity());
    for i in 0..m {
        for j in i + 1..m {
            edges.push(Edge::new(i, j));
            stubs.push(i);
            stubs.push(j);
        }
    }
    let mut chosen = Vec::with_capacity(m);
    for v in m..n {
        chosen.clear();
        let frozen = stubs.len();
        while chosen.len() < m {
            let target = if frozen == 0 {
                rng.random_range(0..v)
            } else {
                stubs[rng.random_range(0..frozen)]
            };
            if !chosen.contains(&target) {
                chosen.push(target);
            }
        }
        for &t in &chosen {
            edges.push(Edge::new(t, v));
            stubs.push(t);
            stubs.push(v);
        }
    }
    edges.sort_unstable();
    Ok(Graph::from_sorted_unique(n, edges))
}

/// The eight-node example networks.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    Complete8,
    Star8,
    Tree8,
}

impl FromStr for Fixture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "complete8" => Ok(Fixture::Complete8),
            "star8" => Ok(Fixture::Star8),
            "tree8" => Ok(Fixture::Tree8),
            other => Err(Error::UnknownFixture(other.to_string())),
        }
    }
}

/// Builds a fixture graph. The star hub is node 0. The tree is the
/// branching tree with root 0, children 1; 1 has children 2 and 3; 2 has
/// leaves 4, 5; 3 has leaves 6, 7.
pub fn fixture(name: Fixture) -> Graph {
    match name {
        Fixture::Complete8 => Graph::complete(8),
        Fixture::Star8 => Graph::from_edges(8, (1..8).map(|j| (0, j))).unwrap(),
        Fixture::Tree8 => Graph::from_edges(
            8,
            [(0, 1), (1, 2), (1, 3), (2, 4), (2, 5), (3, 6), (3, 7)],
        )
        .unwrap(),
    }
}

/// BFS hop counts from `source`; `None` marks unreachable nodes.
pub fn hops_from(g: &Graph, source: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; g.node_count()];
    let mut queue = VecDeque::new();
    dist[source] = Some(0);
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap();
        for &w in g.neighbors(v) {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs hop counts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HopMatrix {
    n: usize,
    hops: Vec<Option<u32>>,
}

impl HopMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        self.hops[i * self.n + j]
    }

    pub fn size(&self) -> usize {
        self.n
    }
}

pub fn shortest_path_lengths(g: &Graph) -> HopMatrix {
    let n = g.node_count();
    let mut hops = Vec::with_capacity(n * n);
    for s in 0..n {
        hops.extend(hops_from(g, s));
    }
    HopMatrix { n, hops }
}

/// Mean hop count over connected pairs `i ≠ j`.
///
/// Disconnected pairs are left out of the average rather than counted as infinite.
pub fn avg_shortest_path(g: &Graph) -> Result<f64> {
    let mut total = 0u64;
    let mut pairs = 0u64;
    for s in 0..g.node_count() {
        for d in hops_from(g, s).into_iter().flatten() {
            if d > 0 {
                total += u64::from(d);
                pairs += 1;
            }
        }
    }
    if pairs == 0 {
        return Err(Error::NoConnectedPair);
    }
    Ok(total as f64 / pairs as f64)
}

/// Connected components, each sorted, ordered by smallest member.
pub fn connected_components(g: &Graph) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut label = vec![usize::MAX; n];
    let mut parts = Vec::new();
    for s in 0..n {
        if label[s] != usize::MAX {
            continue;
        }
        let id = parts.len();
        let mut part = vec![s];
        label[s] = id;
        let mut head = 0;
        while head < part.len() {
            let v = part[head];
            head += 1;
            for &w in g.neighbors(v) {
                if label[w] == usize::MAX {
                    label[w] = id;
                    part.push(w);
                }
            }
        }
        part.sort_unstable();
        parts.push(part);
    }
    parts
}

/// Empirical moments `(E[K], E[K²])` of the degree sequence.
pub fn degree_moments(g: &Graph) -> (f64, f64) {
    let n = g.node_count() as f64;
    let (s1, s2) = g.degrees().iter().fold((0.0, 0.0), |(a, b), &d| {
        let d = d as f64;
        (a + d, b + d * d)
    });
    (s1 / n, s2 / n)
}
