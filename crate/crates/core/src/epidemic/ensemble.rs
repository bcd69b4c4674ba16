//! Monte Carlo ensembles of Gillespie runs.
//!
//! Run `r` always draws from stream `r` of the master seed, and runs are
//! grouped into fixed chunks whose partial results are merged in chunk
//! order. Results are therefore identical for any number of worker threads.

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::engine::Workspace;
use super::{classify_pandemic, InitialCondition, PandemicCriterion, PandemicVerdict, SirParams};
use crate::error::{invalid, Result};
use crate::graph::Graph;
use crate::rng::{derive_seed, stream, Seed};

const CHUNK: u64 = 256;
/// Chunks simulated between two early-stop checks.
const CHECK_GROUP: u64 = 8;
const REMOVAL_TAG: u64 = 0x7265_6d6f_7665;

/// Aggregated outcomes of independent runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleStats {
    seed: Seed,
    runs: u64,
    infection_count: Vec<u64>,
    duration_sum: Vec<f64>,
    size_histogram: Vec<u64>,
}

impl EnsembleStats {
    fn empty(n: usize, seed: Seed) -> Self {
        EnsembleStats {
            seed,
            runs: 0,
            infection_count: vec![0; n],
            duration_sum: vec![0.0; n],
            size_histogram: vec![0; n + 1],
        }
    }

    fn merge(&mut self, other: &EnsembleStats) {
        self.runs += other.runs;
        add(&mut self.infection_count, &other.infection_count);
        add(&mut self.size_histogram, &other.size_histogram);
        for (a, b) in self.duration_sum.iter_mut().zip(&other.duration_sum) {
            *a += b;
        }
    }

    pub fn seed(&self) -> Seed {
        self.seed
    }

    pub fn runs(&self) -> u64 {
        self.runs
    }

    pub fn node_count(&self) -> usize {
        self.infection_count.len()
    }

    /// Number of runs in which each node was ever infected.
    pub fn infection_count(&self) -> &[u64] {
        &self.infection_count
    }

    /// Run counts indexed by final size `0..=N`.
    pub fn size_histogram(&self) -> &[u64] {
        &self.size_histogram
    }

    pub fn infection_probability(&self) -> Vec<f64> {
        let runs = self.runs as f64;
        self.infection_count.iter().map(|&c| c as f64 / runs).collect()
    }

    /// Average time spent infected per run, counting runs where the node
    /// escaped infection as zero. Estimates the loss `L_i`.
    pub fn mean_infected_time(&self) -> Vec<f64> {
        let runs = self.runs as f64;
        self.duration_sum.iter().map(|&d| d / runs).collect()
    }

    /// Average infectious period over the runs in which the node was infected
    /// (`NaN` for nodes never infected).
    pub fn mean_duration_given_infection(&self) -> Vec<f64> {
        self.duration_sum
            .iter()
            .zip(&self.infection_count)
            .map(|(&d, &c)| if c == 0 { f64::NAN } else { d / c as f64 })
            .collect()
    }
}

fn add(a: &mut [u64], b: &[u64]) {
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
}

/// Options for [`pandemic_check`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckOptions {
    /// Stop as soon as the verdict "prone" can no longer change.
    pub early_stop: bool,
    /// Delete this many uniformly chosen edges afresh before every run.
    pub random_removed_edges: Option<usize>,
}

pub fn monte_carlo(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    runs: u64,
    seed: Seed,
) -> Result<EnsembleStats> {
    validate(g, params, init, runs)?;
    let mut stats = EnsembleStats::empty(g.node_count(), seed);
    for part in simulate_chunks(g, params, init, seed, 0..runs.div_ceil(CHUNK), runs, None) {
        stats.merge(&part);
    }
    Ok(stats)
}

/// Final outbreak size of every run, in run order.
pub fn final_sizes(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    runs: u64,
    seed: Seed,
) -> Result<Vec<usize>> {
    validate(g, params, init, runs)?;
    let chunks: Vec<Vec<usize>> = (0..runs.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut ws = Workspace::new(g.node_count());
            chunk_range(c, runs)
                .map(|r| ws.run(g, params, init, None, &mut stream(seed, r), None))
                .collect()
        })
        .collect();
    Ok(chunks.concat())
}

/// Estimates the pandemic frequency and classifies the network.
pub fn pandemic_check(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    criterion: &PandemicCriterion,
    runs: u64,
    seed: Seed,
    options: CheckOptions,
) -> Result<PandemicVerdict> {
    validate(g, params, init, runs)?;
    criterion.check()?;
    if let Some(k) = options.random_removed_edges {
        if k > g.edge_count() {
            return Err(invalid(
                "random_removed_edges",
                format!("{k} exceeds the {} edges of the graph", g.edge_count()),
            ));
        }
    }
    let n = g.node_count();
    let chunks = runs.div_ceil(CHUNK);
    let group = if options.early_stop { CHECK_GROUP } else { chunks.max(1) };
    let needed = criterion.frequency_threshold * runs as f64;
    let mut stats = EnsembleStats::empty(n, seed);
    let mut start = 0;
    while start < chunks {
        let end = (start + group).min(chunks);
        for part in simulate_chunks(g, params, init, seed, start..end, runs, options.random_removed_edges) {
            stats.merge(&part);
        }
        start = end;
        if options.early_stop && classify_pandemic(&stats, criterion).pandemic_runs as f64 >= needed {
            break;
        }
    }
    Ok(classify_pandemic(&stats, criterion))
}

fn validate(g: &Graph, params: &SirParams, init: &InitialCondition, runs: u64) -> Result<()> {
    params.check_for(g)?;
    init.check(g.node_count())?;
    if runs == 0 {
        return Err(invalid("runs", "at least one run is required"));
    }
    Ok(())
}

fn chunk_range(chunk: u64, runs: u64) -> std::ops::Range<u64> {
    chunk * CHUNK..((chunk + 1) * CHUNK).min(runs)
}

fn simulate_chunks(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    seed: Seed,
    chunks: std::ops::Range<u64>,
    runs: u64,
    removed: Option<usize>,
) -> Vec<EnsembleStats> {
    let n = g.node_count();
    let m = g.edge_count();
    chunks
        .into_par_iter()
        .map(|c| {
            let mut ws = Workspace::new(n);
            let mut part = EnsembleStats::empty(n, seed);
            let mut mask = removed.map(|_| vec![true; m]);
            let removal_seed = derive_seed(seed, REMOVAL_TAG);
            for r in chunk_range(c, runs) {
                let picked = removed.map(|k| {
                    let ids = index::sample(&mut stream(removal_seed, r), m, k);
                    let mask = mask.as_mut().unwrap();
                    ids.iter().for_each(|id| mask[id] = false);
                    ids
                });
                let size = ws.run(g, params, init, mask.as_deref(), &mut stream(seed, r), None);
                if let (Some(ids), Some(mask)) = (picked, mask.as_mut()) {
                    ids.iter().for_each(|id| mask[id] = true);
                }
                part.runs += 1;
                part.size_histogram[size] += 1;
                for &v in ws.touched() {
                    part.infection_count[v] += 1;
                    part.duration_sum[v] += ws.duration[v];
                }
            }
            part
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixture, Fixture};

    #[test]
    fn histogram_accounts_for_every_run() {
        let g = fixture(Fixture::Tree8);
        let p = SirParams::homogeneous(8, 0.4, 0.5).unwrap();
        let s = monte_carlo(&g, &p, &InitialCondition::UniformRandomSingle, 1000, 9).unwrap();
        assert_eq!(s.runs(), 1000);
        assert_eq!(s.size_histogram().iter().sum::<u64>(), 1000);
        assert_eq!(s.size_histogram()[0], 0);
        assert!(s.infection_count().iter().all(|&c| c <= 1000));
        let total: u64 = s.size_histogram().iter().enumerate().map(|(k, c)| k as u64 * c).sum();
        assert_eq!(total, s.infection_count().iter().sum::<u64>());
    }

    #[test]
    fn final_sizes_match_histogram() {
        let g = fixture(Fixture::Star8);
        let p = SirParams::homogeneous(8, 0.3, 0.5).unwrap();
        let init = InitialCondition::UniformRandomSingle;
        let sizes = final_sizes(&g, &p, &init, 700, 5).unwrap();
        let s = monte_carlo(&g, &p, &init, 700, 5).unwrap();
        let mut hist = vec![0u64; 9];
        sizes.iter().for_each(|&k| hist[k] += 1);
        assert_eq!(hist, s.size_histogram());
    }

    #[test]
    fn isolated_node_mean_duration() {
        let g = Graph::empty(1);
        let p = SirParams::homogeneous(1, 0.1, 1.0).unwrap();
        let s = monte_carlo(&g, &p, &InitialCondition::FixedNode(0), 100_000, 1).unwrap();
        // Exp(1) mean, standard error 1/sqrt(1e5)
        assert!((s.mean_infected_time()[0] - 1.0).abs() < 0.02);
        assert_eq!(s.infection_probability(), vec![1.0]);
    }

    #[test]
    fn zero_tau_gives_uniform_probabilities() {
        let g = fixture(Fixture::Complete8);
        let p = SirParams::homogeneous(8, 0.0, 1.0).unwrap();
        let s = monte_carlo(&g, &p, &InitialCondition::UniformRandomSingle, 80_000, 2).unwrap();
        assert_eq!(s.size_histogram()[1], 80_000);
        let sd = (0.125f64 * 0.875 / 80_000.0).sqrt();
        for q in s.infection_probability() {
            assert!((q - 0.125).abs() < 4.0 * sd);
        }
        let v = classify_pandemic(&s, &PandemicCriterion::default());
        assert!(v.prone, "size 1 of 8 already exceeds 10%");
    }

    #[test]
    fn saturating_complete_graph() {
        let g = Graph::complete(10);
        let p = SirParams::homogeneous(10, 100.0, 1.0).unwrap();
        let s = monte_carlo(&g, &p, &InitialCondition::UniformRandomSingle, 2000, 3).unwrap();
        assert!(s.size_histogram()[10] as f64 >= 0.99 * 2000.0);
    }

    #[test]
    fn early_stop_agrees_on_prone_networks() {
        let g = Graph::complete(30);
        let p = SirParams::homogeneous(30, 1.0, 1.0).unwrap();
        let c = PandemicCriterion::default();
        let init = InitialCondition::UniformRandomSingle;
        let full = pandemic_check(&g, &p, &init, &c, 20_000, 4, CheckOptions::default()).unwrap();
        let quick = pandemic_check(
            &g,
            &p,
            &init,
            &c,
            20_000,
            4,
            CheckOptions {
                early_stop: true,
                random_removed_edges: None,
            },
        )
        .unwrap();
        assert!(full.prone && quick.prone);
        assert_eq!(full.runs, 20_000);
        assert!(quick.runs < full.runs);
    }

    #[test]
    fn removing_every_edge_prevents_spread() {
        let g = Graph::complete(20);
        let p = SirParams::homogeneous(20, 5.0, 1.0).unwrap();
        let opts = CheckOptions {
            early_stop: false,
            random_removed_edges: Some(g.edge_count()),
        };
        let c = PandemicCriterion::new(0.1, 0.001).unwrap();
        let v = pandemic_check(&g, &p, &InitialCondition::UniformRandomSingle, &c, 500, 8, opts).unwrap();
        assert_eq!(v.pandemic_runs, 0);
        let too_many = CheckOptions {
            early_stop: false,
            random_removed_edges: Some(g.edge_count() + 1),
        };
        assert!(pandemic_check(&g, &p, &InitialCondition::UniformRandomSingle, &c, 5, 8, too_many).is_err());
    }

    #[test]
    fn zero_runs_rejected() {
        let g = Graph::empty(2);
        let p = SirParams::homogeneous(2, 0.1, 1.0).unwrap();
        assert!(monte_carlo(&g, &p, &InitialCondition::UniformRandomSingle, 0, 1).is_err());
    }
}
