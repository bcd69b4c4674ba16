//! Topology interventions against cyber pandemics.
//!
//! Two loops are offered: deleting the edges with the highest betweenness
//! in batches, and splitting the most central node into two. Both recompute
//! centralities after every step and stop once a pandemic check on the
//! current graph passes and a larger confirmation ensemble on a fresh seed
//! agrees.

mod risk;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::centrality::{betweenness_centrality, degree_centrality, edge_betweenness, CentralityKind, CentralityVector};
use crate::epidemic::{pandemic_check, CheckOptions, InitialCondition, PandemicCriterion, PandemicVerdict, SirParams};
use crate::error::{invalid, Error, Result};
use crate::graph::{avg_shortest_path, Edge, Graph};
use crate::rng::{derive_seed, stream, Seed};

pub use risk::{
    contact_coefficients_edges, contact_coefficients_splits, expected_shortfall, paired_losses,
    pandemic_loss_premiums, risk_measure, surcharge, value_at_risk, ContactCoefficients, PremiumReport,
    RiskMeasure, RiskSpec,
};

const CONFIRM_TAG: u64 = 0x636f_6e66_6972_6d;

/// Contagion parameters and the two-tier pandemic test shared by all loops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterventionConfig {
    pub tau: f64,
    /// Recovery rate of every node, including nodes created by splits.
    pub gamma: f64,
    pub criterion: PandemicCriterion,
    /// Runs per routine check.
    pub check_runs: u64,
    /// Runs of the confirmation ensemble, drawn on a seed derived from `seed`.
    pub confirm_runs: u64,
    pub seed: Seed,
}

impl InterventionConfig {
    pub fn new(tau: f64, gamma: f64, seed: Seed) -> Self {
        InterventionConfig {
            tau,
            gamma,
            criterion: PandemicCriterion::default(),
            check_runs: 10_000,
            confirm_runs: 100_000,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        SirParams::new(self.tau, vec![self.gamma])?;
        self.criterion.check()?;
        if self.check_runs == 0 || self.confirm_runs == 0 {
            return Err(invalid("runs", "check and confirmation runs must be positive"));
        }
        Ok(())
    }

    fn check(&self, g: &Graph, runs: u64, seed: Seed, removed: Option<usize>) -> Result<PandemicVerdict> {
        let params = SirParams::homogeneous(g.node_count(), self.tau, self.gamma)?;
        pandemic_check(
            g,
            &params,
            &InitialCondition::UniformRandomSingle,
            &self.criterion,
            runs,
            seed,
            CheckOptions {
                early_stop: true,
                random_removed_edges: removed,
            },
        )
    }

    /// Routine check followed, if it passes, by the confirmation ensemble.
    fn two_tier(&self, g: &Graph, removed: Option<usize>) -> Result<Outcome> {
        let quick = self.check(g, self.check_runs, self.seed, removed)?;
        if quick.prone {
            return Ok(Outcome { quick, confirm: None });
        }
        let confirm = self.check(g, self.confirm_runs, derive_seed(self.seed, CONFIRM_TAG), removed)?;
        Ok(Outcome {
            quick,
            confirm: Some(confirm),
        })
    }
}

struct Outcome {
    quick: PandemicVerdict,
    confirm: Option<PandemicVerdict>,
}

impl Outcome {
    fn controlled(&self) -> bool {
        self.confirm.is_some_and(|c| !c.prone)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    /// Start of the loop, nothing changed yet.
    Initial,
    RemoveEdges(Vec<Edge>),
    Split(SplitRecord),
}

/// One step of an intervention loop and the check that followed it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub action: Action,
    pub check: PandemicVerdict,
    pub confirmation: Option<PandemicVerdict>,
    /// Mean hop count over connected pairs, if any pair is connected.
    pub avg_path_length: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitRecord {
    /// Node that was split, in the numbering of the graph at that step.
    pub node: usize,
    pub new_node: usize,
    /// Neighbors rewired from `node` to `new_node`.
    pub moved: Vec<usize>,
    /// Nothing was rewired (the node had a single neighbor).
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterventionResult {
    pub graph: Graph,
    /// Deleted edges in deletion order, in original node labels.
    pub removed: Vec<Edge>,
    pub splits: Vec<SplitRecord>,
    /// Original node behind every node of `graph`; new nodes inherit the
    /// origin of the node they were split from.
    pub origin: Vec<usize>,
    pub steps: Vec<StepRecord>,
    pub original_nodes: usize,
    pub original_edges: usize,
    pub avg_path_before: Option<f64>,
    pub avg_path_after: Option<f64>,
}

impl InterventionResult {
    pub fn frequency_before(&self) -> f64 {
        self.steps[0].check.frequency
    }

    pub fn frequency_after(&self) -> f64 {
        let last = self.steps.last().unwrap();
        last.confirmation.unwrap_or(last.check).frequency
    }

    pub fn removed_fraction(&self) -> f64 {
        self.removed.len() as f64 / self.original_edges as f64
    }

    pub fn split_fraction(&self) -> f64 {
        self.splits.len() as f64 / self.original_nodes as f64
    }

    /// Distinct original nodes that were split at least once, ascending.
    pub fn split_origins(&self) -> Vec<usize> {
        let mut v: Vec<usize> = self.splits.iter().map(|s| self.origin[s.node]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

fn record(step: usize, action: Action, g: &Graph, outcome: &Outcome) -> StepRecord {
    StepRecord {
        step,
        action,
        check: outcome.quick,
        confirmation: outcome.confirm,
        avg_path_length: avg_shortest_path(g).ok(),
    }
}

fn result(g: &Graph, current: Graph, removed: Vec<Edge>, splits: Vec<SplitRecord>, origin: Vec<usize>, steps: Vec<StepRecord>) -> InterventionResult {
    InterventionResult {
        avg_path_before: steps[0].avg_path_length,
        avg_path_after: steps.last().unwrap().avg_path_length,
        graph: current,
        removed,
        splits,
        origin,
        steps,
        original_nodes: g.node_count(),
        original_edges: g.edge_count(),
    }
}

/// Default batch: one percent of the edges, at least one.
pub fn default_batch(edge_count: usize) -> usize {
    ((edge_count as f64 * 0.01).round() as usize).max(1)
}

/// The `count` edges that centrality-guided removal deletes first, without
/// pandemic checks. Betweenness is recomputed after every batch.
pub fn guided_edge_removal(g: &Graph, count: usize, batch: usize) -> Result<Vec<Edge>> {
    if batch == 0 {
        return Err(invalid("batch", "must be positive"));
    }
    let count = count.min(g.edge_count());
    let mut current = g.clone();
    let mut removed = Vec::with_capacity(count);
    while removed.len() < count {
        let take = batch.min(count - removed.len());
        let picked: Vec<Edge> = edge_betweenness(&current).ranked_edges().into_iter().take(take).collect();
        current = current.without_edges(&picked);
        removed.extend(picked);
    }
    Ok(removed)
}

/// Deletes the most central edges batch by batch until pandemics are controlled.
pub fn edge_removal_intervention(g: &Graph, cfg: &InterventionConfig, batch: Option<usize>) -> Result<InterventionResult> {
    cfg.validate()?;
    let batch = batch.unwrap_or_else(|| default_batch(g.edge_count()));
    if batch == 0 {
        return Err(invalid("batch", "must be positive"));
    }
    let mut current = g.clone();
    let mut removed = Vec::new();
    let outcome = cfg.two_tier(&current, None)?;
    let mut steps = vec![record(0, Action::Initial, &current, &outcome)];
    let mut controlled = outcome.controlled();
    while !controlled {
        if current.edge_count() == 0 {
            return Err(Error::GraphExhausted { removed: removed.len() });
        }
        let picked: Vec<Edge> = edge_betweenness(&current).ranked_edges().into_iter().take(batch).collect();
        current = current.without_edges(&picked);
        removed.extend_from_slice(&picked);
        let outcome = cfg.two_tier(&current, None)?;
        controlled = outcome.controlled();
        steps.push(record(steps.len(), Action::RemoveEdges(picked), &current, &outcome));
    }
    let origin = (0..g.node_count()).collect();
    Ok(result(g, current, removed, Vec::new(), origin, steps))
}

/// Copy of `g` with a uniformly random `round(fraction · |E|)` edges removed.
pub fn random_edge_removal(g: &Graph, fraction: f64, seed: Seed) -> Result<Graph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(invalid("fraction", format!("{fraction} must lie in [0, 1]")));
    }
    let m = g.edge_count();
    let k = (fraction * m as f64).round() as usize;
    let picked: Vec<Edge> = index::sample(&mut stream(seed, 0), m, k.min(m))
        .iter()
        .map(|id| g.edges()[id])
        .collect();
    Ok(g.without_edges(&picked))
}

/// Pandemic frequency under random removal at one fraction.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub fraction: f64,
    pub removed_edges: usize,
    pub check: PandemicVerdict,
    pub confirmation: Option<PandemicVerdict>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomRemovalScan {
    pub points: Vec<ScanPoint>,
    /// Smallest scanned fraction at which pandemics were controlled.
    pub control_fraction: Option<f64>,
    /// Mean over sample graphs of the average path length at that fraction.
    pub avg_path_at_control: Option<f64>,
}

/// Scans removal fractions `0, step, 2·step, …` up to `max_fraction`.
/// Every simulated run deletes a fresh uniformly random edge set, and the
/// scan stops at the first fraction where pandemics are controlled.
pub fn random_removal_scan(
    g: &Graph,
    cfg: &InterventionConfig,
    step: f64,
    max_fraction: f64,
    path_samples: usize,
) -> Result<RandomRemovalScan> {
    cfg.validate()?;
    if !(step > 0.0 && step <= 1.0) || !(0.0..=1.0).contains(&max_fraction) {
        return Err(invalid("step", "step must lie in (0, 1] and max_fraction in [0, 1]"));
    }
    let m = g.edge_count();
    let mut points = Vec::new();
    let count = (max_fraction / step + 1e-9).floor() as usize;
    for s in 0..=count {
        let fraction = s as f64 * step;
        let k = (fraction * m as f64).round() as usize;
        let outcome = cfg.two_tier(g, Some(k))?;
        points.push(ScanPoint {
            fraction,
            removed_edges: k,
            check: outcome.quick,
            confirmation: outcome.confirm,
        });
        if outcome.controlled() {
            let lengths: Vec<f64> = (0..path_samples as u64)
                .filter_map(|i| {
                    random_edge_removal(g, fraction, derive_seed(cfg.seed, i))
                        .ok()
                        .and_then(|h| avg_shortest_path(&h).ok())
                })
                .collect();
            let avg = (!lengths.is_empty()).then(|| lengths.iter().sum::<f64>() / lengths.len() as f64);
            return Ok(RandomRemovalScan {
                points,
                control_fraction: Some(fraction),
                avg_path_at_control: avg,
            });
        }
    }
    Ok(RandomRemovalScan {
        points,
        control_fraction: None,
        avg_path_at_control: None,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitVariant {
    /// Neighbors at even centrality ranks move to the new node.
    #[default]
    Standard,
    /// The lower-degree half of the neighbors moves to the new node.
    Modified,
}

fn node_centrality(g: &Graph, kind: CentralityKind) -> Result<CentralityVector> {
    match kind {
        CentralityKind::Degree => Ok(degree_centrality(g)),
        CentralityKind::Betweenness => Ok(betweenness_centrality(g)),
        CentralityKind::Investment => Err(invalid(
            "centrality",
            "investment centrality needs a steady state and cannot drive splitting",
        )),
    }
}

fn rewire(g: &Graph, i: usize, moved: Vec<usize>) -> (Graph, SplitRecord) {
    let j = g.node_count();
    let mut edges: Vec<(usize, usize)> = g
        .edges()
        .iter()
        .filter(|e| !(e.touches(i) && moved.contains(&e.other(i))))
        .map(|e| (e.lo(), e.hi()))
        .collect();
    edges.extend(moved.iter().map(|&w| (w, j)));
    let graph = Graph::from_edges(j + 1, edges).expect("rewiring keeps the graph simple");
    let record = SplitRecord {
        node: i,
        new_node: j,
        degenerate: moved.is_empty(),
        moved,
    };
    (graph, record)
}

fn ranked_neighbors(g: &Graph, i: usize, scores: &[f64]) -> Result<Vec<usize>> {
    if i >= g.node_count() {
        return Err(Error::NodeOutOfRange { node: i, n: g.node_count() });
    }
    if g.degree(i) == 0 {
        return Err(Error::IsolatedNode(i));
    }
    let mut nb = g.neighbors(i).to_vec();
    nb.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    Ok(nb)
}

/// Splits `i`: neighbors ranked by descending centrality, those at ranks
/// 2, 4, 6, … move to a new node with id `N`. No edge joins the two halves.
pub fn split_node(g: &Graph, i: usize, kind: CentralityKind) -> Result<(Graph, SplitRecord)> {
    let scores = node_centrality(g, kind)?;
    let nb = ranked_neighbors(g, i, scores.values())?;
    let moved = nb.into_iter().skip(1).step_by(2).collect();
    Ok(rewire(g, i, moved))
}

/// Splits `i` keeping its `⌈k/2⌉` highest-degree neighbors and moving the rest.
pub fn split_node_modified(g: &Graph, i: usize) -> Result<(Graph, SplitRecord)> {
    let scores = degree_centrality(g);
    let nb = ranked_neighbors(g, i, scores.values())?;
    let keep = nb.len().div_ceil(2);
    Ok(rewire(g, i, nb[keep..].to_vec()))
}

/// Repeatedly splits the most central node until pandemics are controlled.
pub fn splitting_intervention(
    g: &Graph,
    cfg: &InterventionConfig,
    kind: CentralityKind,
    variant: SplitVariant,
    max_splits: usize,
) -> Result<InterventionResult> {
    cfg.validate()?;
    if kind == CentralityKind::Investment {
        return Err(invalid("centrality", "splitting is driven by degree or betweenness"));
    }
    let mut current = g.clone();
    let mut origin: Vec<usize> = (0..g.node_count()).collect();
    let mut splits = Vec::new();
    let outcome = cfg.two_tier(&current, None)?;
    let mut steps = vec![record(0, Action::Initial, &current, &outcome)];
    let mut controlled = outcome.controlled();
    while !controlled {
        if splits.len() == max_splits {
            return Err(Error::SplitsExhausted { splits: splits.len() });
        }
        let target = node_centrality(&current, kind)?
            .argmax()
            .ok_or_else(|| invalid("graph", "no node left to split"))?;
        let (next, rec) = match variant {
            SplitVariant::Standard => split_node(&current, target, kind)?,
            SplitVariant::Modified => split_node_modified(&current, target)?,
        };
        current = next;
        origin.push(origin[target]);
        let outcome = cfg.two_tier(&current, None)?;
        controlled = outcome.controlled();
        steps.push(record(steps.len(), Action::Split(rec.clone()), &current, &outcome));
        splits.push(rec);
    }
    Ok(result(g, current, Vec::new(), splits, origin, steps))
}

/// Final pandemic verdict of a finished intervention on a further fresh seed.
pub fn recheck(result: &InterventionResult, cfg: &InterventionConfig, seed: Seed) -> Result<PandemicVerdict> {
    cfg.check(&result.graph, cfg.confirm_runs, seed, None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixture, Fixture};

    #[test]
    fn star_split_by_degree() {
        let g = fixture(Fixture::Star8);
        let (h, rec) = split_node(&g, 0, CentralityKind::Degree).unwrap();
        assert_eq!(h.node_count(), 9);
        assert_eq!(h.edge_count(), 7);
        assert_eq!(rec.moved, vec![2, 4, 6]);
        assert_eq!(h.degree(0), 4);
        assert_eq!(h.degree(8), 3);
        assert!(!h.has_edge(0, 8));
        assert!(!rec.degenerate);
    }

    #[test]
    fn tree_split_follows_centrality_ranks() {
        // one-based labels 2 and 4 are ids 1 and 3
        let g = fixture(Fixture::Tree8);
        let (h, rec) = split_node(&g, 1, CentralityKind::Degree).unwrap();
        assert_eq!(rec.moved, vec![3]);
        assert!(h.has_edge(3, 8) && !h.has_edge(1, 3));
        assert_eq!(h.degree(8), 1);
        assert_eq!(h.degree(1), 2);
    }

    #[test]
    fn leaf_split_is_degenerate() {
        let g = fixture(Fixture::Star8);
        let (h, rec) = split_node(&g, 5, CentralityKind::Betweenness).unwrap();
        assert!(rec.degenerate);
        assert_eq!(h.degree(8), 0);
        assert_eq!(h.degree(5), 1);
        assert!(matches!(split_node(&Graph::empty(2), 0, CentralityKind::Degree), Err(Error::IsolatedNode(0))));
        assert!(split_node(&g, 0, CentralityKind::Investment).is_err());
    }

    #[test]
    fn modified_split() {
        let g = fixture(Fixture::Star8);
        let (_, rec) = split_node_modified(&g, 0).unwrap();
        assert_eq!(rec.moved, vec![5, 6, 7]);
        // neighbors of node 0 with degrees 5 (node 1) and 1 (node 2)
        let g = Graph::from_edges(7, [(0, 1), (0, 2), (1, 3), (1, 4), (1, 5), (1, 6)]).unwrap();
        let (h, rec) = split_node_modified(&g, 0).unwrap();
        assert_eq!(rec.moved, vec![2]);
        assert!(h.has_edge(0, 1) && h.has_edge(2, 7));
    }

    #[test]
    fn guided_removal_takes_bridges_first() {
        let g = fixture(Fixture::Tree8);
        let e = guided_edge_removal(&g, 2, 1).unwrap();
        assert_eq!(e[0], Edge::new(1, 2));
        assert_eq!(guided_edge_removal(&g, 100, 3).unwrap().len(), 7);
    }

    #[test]
    fn random_removal_extremes() {
        let g = fixture(Fixture::Complete8);
        assert_eq!(random_edge_removal(&g, 0.0, 1).unwrap(), g);
        assert_eq!(random_edge_removal(&g, 1.0, 1).unwrap().edge_count(), 0);
        assert_eq!(random_edge_removal(&g, 0.5, 1).unwrap().edge_count(), 14);
        assert!(random_edge_removal(&g, 1.5, 1).is_err());
    }

    #[test]
    fn loops_exit_at_once_without_transmission() {
        let g = fixture(Fixture::Tree8);
        let mut cfg = InterventionConfig::new(0.0, 1.0, 5);
        cfg.criterion = PandemicCriterion::new(0.3, 0.001).unwrap();
        cfg.check_runs = 500;
        cfg.confirm_runs = 1000;
        let r = edge_removal_intervention(&g, &cfg, None).unwrap();
        assert!(r.removed.is_empty());
        assert_eq!(r.graph, g);
        assert_eq!(r.frequency_after(), 0.0);
        let s = splitting_intervention(&g, &cfg, CentralityKind::Degree, SplitVariant::Standard, 10).unwrap();
        assert!(s.splits.is_empty());
    }

    #[test]
    fn removal_loop_controls_small_graph() {
        let g = Graph::complete(12);
        let mut cfg = InterventionConfig::new(1.0, 1.0, 9);
        cfg.criterion = PandemicCriterion::new(0.5, 0.01).unwrap();
        cfg.check_runs = 2000;
        cfg.confirm_runs = 4000;
        let r = edge_removal_intervention(&g, &cfg, Some(6)).unwrap();
        assert!(!r.removed.is_empty());
        assert!(r.frequency_after() < 0.01);
        assert_eq!(r.graph.edge_count() + r.removed.len(), g.edge_count());
        assert!(r.removed.iter().all(|e| g.has_edge(e.lo(), e.hi())));
    }

    #[test]
    fn splitting_loop_on_star() {
        let g = fixture(Fixture::Star8);
        let mut cfg = InterventionConfig::new(5.0, 1.0, 2);
        cfg.criterion = PandemicCriterion::new(0.4, 0.05).unwrap();
        cfg.check_runs = 2000;
        cfg.confirm_runs = 4000;
        let r = splitting_intervention(&g, &cfg, CentralityKind::Degree, SplitVariant::Standard, 20).unwrap();
        assert!(!r.splits.is_empty());
        assert_eq!(r.graph.node_count(), 8 + r.splits.len());
        assert_eq!(r.graph.edge_count(), 7);
        assert_eq!(r.origin.len(), r.graph.node_count());
        assert_eq!(r.split_origins()[0], 0);
        let err = splitting_intervention(&g, &cfg, CentralityKind::Degree, SplitVariant::Standard, 0);
        assert_eq!(err.unwrap_err(), Error::SplitsExhausted { splits: 0 });
    }
}
