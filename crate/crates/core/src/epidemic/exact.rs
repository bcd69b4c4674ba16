//! Exact results for small systems.
//!
//! Every transition raises `|I| + 2|R|` by one, so the embedded jump chain
//! is acyclic and probability mass can be pushed forward level by level.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{InitialCondition, SirParams};
use crate::error::{Error, Result};
use crate::graph::Graph;

/// Largest node count accepted by the exact routines.
pub const MAX_EXACT_NODES: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Compartment {
    Susceptible,
    Infected,
    Recovered,
}

impl Compartment {
    fn digit(self) -> usize {
        match self {
            Compartment::Susceptible => 0,
            Compartment::Infected => 1,
            Compartment::Recovered => 2,
        }
    }

    fn from_digit(d: usize) -> Self {
        match d {
            0 => Compartment::Susceptible,
            1 => Compartment::Infected,
            _ => Compartment::Recovered,
        }
    }
}

/// Infinitesimal generator over `{S, I, R}^N`.
///
/// States are encoded in base 3 with node 0 as the least significant digit.
#[derive(Clone, Debug, PartialEq)]
pub struct Generator {
    n: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl Generator {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn state_count(&self) -> usize {
        self.rows.len()
    }

    /// Off-diagonal transitions out of `state`.
    pub fn row(&self, state: usize) -> &[(usize, f64)] {
        &self.rows[state]
    }

    pub fn rate(&self, from: usize, to: usize) -> f64 {
        if from == to {
            return self.diagonal(from);
        }
        self.rows[from]
            .iter()
            .find(|(t, _)| *t == to)
            .map_or(0.0, |(_, q)| *q)
    }

    pub fn diagonal(&self, state: usize) -> f64 {
        -self.rows[state].iter().map(|(_, q)| q).sum::<f64>()
    }

    pub fn encode(&self, states: &[Compartment]) -> usize {
        states.iter().rev().fold(0, |acc, c| acc * 3 + c.digit())
    }

    pub fn decode(&self, mut state: usize) -> Vec<Compartment> {
        (0..self.n)
            .map(|_| {
                let c = Compartment::from_digit(state % 3);
                state /= 3;
                c
            })
            .collect()
    }
}

fn check_size(g: &Graph) -> Result<()> {
    if g.node_count() > MAX_EXACT_NODES {
        return Err(Error::TooManyNodes {
            n: g.node_count(),
            max: MAX_EXACT_NODES,
        });
    }
    Ok(())
}

pub fn exact_generator(g: &Graph, params: &SirParams) -> Result<Generator> {
    check_size(g)?;
    params.check_for(g)?;
    let n = g.node_count();
    let pow: Vec<usize> = (0..n).map(|i| 3usize.pow(i as u32)).collect();
    let total = 3usize.pow(n as u32);
    let mut rows = Vec::with_capacity(total);
    for s in 0..total {
        let digit = |v: usize| (s / pow[v]) % 3;
        let mut row = Vec::new();
        for v in 0..n {
            match digit(v) {
                0 => {
                    let k = g.neighbors(v).iter().filter(|&&w| digit(w) == 1).count();
                    if k > 0 && params.tau() > 0.0 {
                        row.push((s + pow[v], params.tau() * k as f64));
                    }
                }
                1 => row.push((s + pow[v], params.gamma()[v])),
                _ => {}
            }
        }
        rows.push(row);
    }
    Ok(Generator { n, rows })
}

/// Exact `P(A_i)` for every node.
pub fn exact_infection_probabilities(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
) -> Result<Vec<f64>> {
    (0..g.node_count())
        .map(|i| exact_infection_probability(g, params, init, i))
        .collect()
}

/// Exact probability that node `i` is ever infected.
///
/// Trajectories are absorbed as soon as `i` becomes infected, so the result
/// never reads `gamma[i]`.
pub fn exact_infection_probability(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    i: usize,
) -> Result<f64> {
    check_size(g)?;
    params.check_for(g)?;
    init.check(g.node_count())?;
    let n = g.node_count();
    if i >= n {
        return Err(Error::NodeOutOfRange { node: i, n });
    }
    let starts: Vec<(u32, f64)> = match init {
        InitialCondition::UniformRandomSingle => {
            (0..n).map(|v| (1u32 << v, 1.0 / n as f64)).collect()
        }
        InitialCondition::FixedNode(v) => vec![(1 << v, 1.0)],
        InitialCondition::FixedSet(set) => vec![(set.iter().fold(0, |m, &v| m | 1 << v), 1.0)],
    };
    let target = 1u32 << i;
    let mut hit = 0.0;
    // Levels keyed by |I| + 2|R|; all starting states sit on level |I0|.
    let mut levels: BTreeMap<u32, BTreeMap<(u32, u32), f64>> = BTreeMap::new();
    for (infected, mass) in starts {
        if infected & target != 0 {
            hit += mass;
        } else {
            *levels
                .entry(infected.count_ones())
                .or_default()
                .entry((infected, 0))
                .or_default() += mass;
        }
    }
    let tau = params.tau();
    let gamma = params.gamma();
    let mut moves: Vec<(bool, usize, f64)> = Vec::with_capacity(n);
    while let Some((level, states)) = levels.pop_first() {
        for ((infected, recovered), mass) in states {
            moves.clear();
            let mut total = 0.0;
            for v in 0..n {
                let bit = 1u32 << v;
                if infected & bit != 0 {
                    moves.push((false, v, gamma[v]));
                    total += gamma[v];
                } else if recovered & bit == 0 && tau > 0.0 {
                    let k = g.neighbors(v).iter().filter(|&&w| infected & (1 << w) != 0).count();
                    if k > 0 {
                        let rate = tau * k as f64;
                        moves.push((true, v, rate));
                        total += rate;
                    }
                }
            }
            if infected == 0 {
                continue;
            }
            let next = levels.entry(level + 1).or_default();
            for &(infection, v, rate) in &moves {
                let share = mass * (rate / total);
                let bit = 1u32 << v;
                if infection && bit == target {
                    hit += share;
                } else if infection {
                    *next.entry((infected | bit, recovered)).or_default() += share;
                } else {
                    *next.entry((infected & !bit, recovered | bit)).or_default() += share;
                }
            }
        }
    }
    Ok(hit)
}
