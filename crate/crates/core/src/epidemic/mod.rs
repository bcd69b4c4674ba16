//! Markovian SIR contagion on networks.
//!
//! A susceptible node is infected at rate `tau` times its number of infected
//! neighbors; an infected node `i` recovers at rate `gamma[i]` and stays
//! immune. Large systems are sampled with the Gillespie algorithm
//! ([`gillespie_run`], [`monte_carlo`]); small ones (at most
//! [`MAX_EXACT_NODES`] nodes) can be solved exactly on the embedded jump
//! chain ([`exact_infection_probabilities`]).

mod engine;
mod ensemble;
mod exact;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::graph::Graph;

pub use ensemble::{
    final_sizes, monte_carlo, pandemic_check, CheckOptions, EnsembleStats,
};
pub use engine::{gillespie_run, gillespie_trace, Event, OutbreakSample, Transition};
pub use exact::{
    exact_generator, exact_infection_probabilities, exact_infection_probability, Compartment,
    Generator, MAX_EXACT_NODES,
};

/// Infection rate shared by all edges and per-node recovery rates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    tau: f64,
    gamma: Vec<f64>,
}

impl SirParams {
    pub fn new(tau: f64, gamma: Vec<f64>) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(invalid("tau", format!("{tau} must be finite and non-negative")));
        }
        if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(invalid("gamma", format!("{g} must be finite and positive")));
        }
        Ok(SirParams { tau, gamma })
    }

    pub fn homogeneous(n: usize, tau: f64, gamma: f64) -> Result<Self> {
        Self::new(tau, vec![gamma; n])
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn with_gamma(&self, gamma: Vec<f64>) -> Result<Self> {
        Self::new(self.tau, gamma)
    }

    pub(crate) fn check_for(&self, g: &Graph) -> Result<()> {
        if self.gamma.len() != g.node_count() {
            return Err(invalid(
                "gamma",
                format!(
                    "{} recovery rates for a graph with {} nodes",
                    self.gamma.len(),
                    g.node_count()
                ),
            ));
        }
        Ok(())
    }
}

/// Which nodes are infected at time zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialCondition {
    /// One node drawn uniformly at random per run.
    UniformRandomSingle,
    FixedNode(usize),
    FixedSet(Vec<usize>),
}

impl InitialCondition {
    pub(crate) fn check(&self, n: usize) -> Result<()> {
        match self {
            InitialCondition::UniformRandomSingle if n == 0 => {
                Err(invalid("initial", "graph has no nodes"))
            }
            InitialCondition::UniformRandomSingle => Ok(()),
            InitialCondition::FixedNode(i) if *i >= n => Err(Error::NodeOutOfRange { node: *i, n }),
            InitialCondition::FixedNode(_) => Ok(()),
            InitialCondition::FixedSet(set) => {
                if set.is_empty() {
                    return Err(invalid("initial", "empty initial set"));
                }
                if let Some(&i) = set.iter().find(|&&i| i >= n) {
                    return Err(Error::NodeOutOfRange { node: i, n });
                }
                let mut sorted = set.clone();
                sorted.sort_unstable();
                sorted.dedup();
                if sorted.len() != set.len() {
                    return Err(invalid("initial", "duplicate node in initial set"));
                }
                Ok(())
            }
        }
    }
}

/// Operational definition of a cyber pandemic: a run is a pandemic when its
/// final size reaches `size_fraction · N`; a network is pandemic-prone when
/// such runs occur with frequency at least `frequency_threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PandemicCriterion {
    pub size_fraction: f64,
    pub frequency_threshold: f64,
}

impl Default for PandemicCriterion {
    fn default() -> Self {
        PandemicCriterion {
            size_fraction: 0.10,
            frequency_threshold: 0.001,
        }
    }
}

impl PandemicCriterion {
    pub fn new(size_fraction: f64, frequency_threshold: f64) -> Result<Self> {
        let c = PandemicCriterion {
            size_fraction,
            frequency_threshold,
        };
        c.check()?;
        Ok(c)
    }

    pub(crate) fn check(&self) -> Result<()> {
        if !(self.size_fraction > 0.0 && self.size_fraction < 1.0) {
            return Err(invalid("size_fraction", "must lie in (0, 1)"));
        }
        if !(self.frequency_threshold > 0.0 && self.frequency_threshold < 1.0) {
            return Err(invalid("frequency_threshold", "must lie in (0, 1)"));
        }
        Ok(())
    }

    /// Whether a run with `final_size` infected nodes out of `n` counts as a pandemic.
    pub fn is_pandemic(&self, final_size: usize, n: usize) -> bool {
        final_size as f64 >= self.size_fraction * n as f64
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PandemicVerdict {
    pub prone: bool,
    pub frequency: f64,
    pub pandemic_runs: u64,
    /// Runs actually simulated (fewer than requested after an early stop).
    pub runs: u64,
}

pub fn classify_pandemic(stats: &EnsembleStats, criterion: &PandemicCriterion) -> PandemicVerdict {
    let n = stats.node_count();
    let pandemic_runs: u64 = stats
        .size_histogram()
        .iter()
        .enumerate()
        .filter(|(size, _)| criterion.is_pandemic(*size, n))
        .map(|(_, c)| c)
        .sum();
    let frequency = pandemic_runs as f64 / stats.runs() as f64;
    PandemicVerdict {
        prone: frequency >= criterion.frequency_threshold,
        frequency,
        pandemic_runs,
        runs: stats.runs(),
    }
}

/// Relative frequency of each observed final size, ascending by size.
pub fn outbreak_histogram(stats: &EnsembleStats) -> Vec<(usize, f64)> {
    let runs = stats.runs() as f64;
    stats
        .size_histogram()
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(size, &c)| (size, c as f64 / runs))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdIndex {
    pub index: f64,
    pub supercritical: bool,
}

/// Degree-based epidemic threshold `τ/(τ+γ) · (E[K²] − E[K]) / E[K]`.
pub fn epidemic_threshold(mean_k: f64, mean_k2: f64, tau: f64, gamma: f64) -> Result<ThresholdIndex> {
    if !(mean_k > 0.0) {
        return Err(invalid("mean_k", "mean degree must be positive"));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", "must be positive"));
    }
    if !(tau >= 0.0) {
        return Err(invalid("tau", "must be non-negative"));
    }
    let index = tau / (tau + gamma) * (mean_k2 - mean_k) / mean_k;
    Ok(ThresholdIndex {
        index,
        supercritical: index > 1.0,
    })
}

/// How infection probabilities are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbabilityMode {
    /// Jump-chain dynamic program, small graphs only.
    Exact,
    MonteCarlo { runs: u64, seed: u64 },
}

/// Infection probability of every node under `init`.
pub fn infection_probabilities(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    mode: ProbabilityMode,
) -> Result<Vec<f64>> {
    match mode {
        ProbabilityMode::Exact => exact_infection_probabilities(g, params, init),
        ProbabilityMode::MonteCarlo { runs, seed } => {
            Ok(monte_carlo(g, params, init, runs, seed)?.infection_probability())
        }
    }
}

/// Expected time node `i` spends infected, `P(A_i) / γ_i`.
pub fn expected_infected_time(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    i: usize,
    mode: ProbabilityMode,
) -> Result<f64> {
    params.check_for(g)?;
    if i >= g.node_count() {
        return Err(Error::NodeOutOfRange { node: i, n: g.node_count() });
    }
    let p = match mode {
        ProbabilityMode::Exact => exact_infection_probability(g, params, init, i)?,
        mode => infection_probabilities(g, params, init, mode)?[i],
    };
    Ok(p / params.gamma()[i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixture, Fixture};

    fn line2() -> Graph {
        Graph::from_edges(2, [(0, 1)]).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(SirParams::new(-0.1, vec![1.0]).is_err());
        assert!(SirParams::new(0.1, vec![0.0]).is_err());
        assert!(SirParams::new(0.1, vec![f64::NAN]).is_err());
        let p = SirParams::homogeneous(3, 0.1, 1.0).unwrap();
        assert!(p.check_for(&line2()).is_err());
    }

    #[test]
    fn initial_condition_validation() {
        assert!(InitialCondition::FixedNode(2).check(2).is_err());
        assert!(InitialCondition::FixedSet(vec![]).check(2).is_err());
        assert!(InitialCondition::FixedSet(vec![1, 1]).check(2).is_err());
        assert!(InitialCondition::FixedSet(vec![0, 1]).check(2).is_ok());
    }

    #[test]
    fn threshold_examples() {
        // Poisson degrees: E[K²] − E[K] = λ², critical at λ = 11 for τ = 0.1, γ = 1.
        let lambda: f64 = 11.0;
        let t = epidemic_threshold(lambda, lambda * lambda + lambda, 0.1, 1.0).unwrap();
        assert!((t.index - 1.0).abs() < 1e-12);
        assert!(!t.supercritical);
        let t = epidemic_threshold(2.0, 2.0, 5.0, 0.1).unwrap();
        assert_eq!(t.index, 0.0);
        assert!(!t.supercritical);
        assert!(epidemic_threshold(0.0, 1.0, 0.1, 1.0).is_err());
        // γ < τ(λ − 1) ⇔ supercritical
        for &(lambda, gamma) in &[(5.0, 0.39), (5.0, 0.41), (20.0, 1.8), (20.0, 1.95)] {
            let t = epidemic_threshold(lambda, lambda * lambda + lambda, 0.1, gamma).unwrap();
            assert_eq!(t.supercritical, gamma < 0.1 * (lambda - 1.0), "λ={lambda} γ={gamma}");
        }
    }

    #[test]
    fn expected_time_exact_modes() {
        let p = SirParams::homogeneous(2, 0.1, 0.1).unwrap();
        let l = expected_infected_time(&line2(), &p, &InitialCondition::UniformRandomSingle, 0, ProbabilityMode::Exact)
            .unwrap();
        assert!((l - 7.5).abs() < 1e-12);
        let tree = fixture(Fixture::Tree8);
        let p = SirParams::new(0.3, (1..=8).map(|i| i as f64 / 4.0).collect()).unwrap();
        let l = expected_infected_time(&tree, &p, &InitialCondition::FixedNode(5), 5, ProbabilityMode::Exact).unwrap();
        assert!((l - 1.0 / p.gamma()[5]).abs() < 1e-12);
        let p0 = SirParams::new(0.0, vec![0.5; 8]).unwrap();
        let l = expected_infected_time(&tree, &p0, &InitialCondition::UniformRandomSingle, 3, ProbabilityMode::Exact)
            .unwrap();
        assert!((l - 1.0 / (8.0 * 0.5)).abs() < 1e-12);
    }

    #[test]
    fn criterion_validation() {
        assert!(PandemicCriterion::new(0.0, 0.1).is_err());
        assert!(PandemicCriterion::new(0.1, 1.0).is_err());
        let c = PandemicCriterion::default();
        assert!(c.is_pandemic(100, 1000));
        assert!(!c.is_pandemic(99, 1000));
    }
}
