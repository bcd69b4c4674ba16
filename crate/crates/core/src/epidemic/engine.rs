//! Gillespie simulation of one SIR trajectory.
//!
//! Each node carries its own transition rate: `γ_i` while infected,
//! `τ · (#infected neighbors)` while susceptible, zero once recovered. The
//! next event time is exponential in the total rate and the node that
//! changes state is drawn proportionally to its rate. Infection pressures
//! are integer counts kept in a Fenwick tree, so infection targets are drawn
//! exactly; recoveries scan the (short) list of infected nodes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{InitialCondition, SirParams};
use crate::error::Result;
use crate::graph::Graph;
use crate::rng::{stream, Seed, StreamRng};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Transition {
    Infection,
    Recovery,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub time: f64,
    pub node: usize,
    pub transition: Transition,
}

/// Outcome of a single trajectory run to extinction.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OutbreakSample {
    pub ever_infected: Vec<bool>,
    pub final_size: usize,
    /// Time each node spent in the infected state (zero if never infected).
    pub infected_duration: Vec<f64>,
    /// Initial infections (at time zero) followed by every transition, when traced.
    pub events: Option<Vec<Event>>,
}

/// Simulates one trajectory using random stream 0 of `seed`.
pub fn gillespie_run(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    seed: Seed,
) -> Result<OutbreakSample> {
    single(g, params, init, seed, false)
}

/// Like [`gillespie_run`] but also records the event log.
pub fn gillespie_trace(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    seed: Seed,
) -> Result<OutbreakSample> {
    single(g, params, init, seed, true)
}

fn single(
    g: &Graph,
    params: &SirParams,
    init: &InitialCondition,
    seed: Seed,
    trace: bool,
) -> Result<OutbreakSample> {
    params.check_for(g)?;
    init.check(g.node_count())?;
    let mut ws = Workspace::new(g.node_count());
    let mut rng = stream(seed, 0);
    let mut events = trace.then(Vec::new);
    ws.run(g, params, init, None, &mut rng, events.as_mut());
    let n = g.node_count();
    let ever_infected: Vec<bool> = (0..n).map(|v| ws.ever_infected(v)).collect();
    Ok(OutbreakSample {
        final_size: ever_infected.iter().filter(|&&b| b).count(),
        infected_duration: ws.duration.clone(),
        ever_infected,
        events,
    })
}

const SUSCEPTIBLE: u8 = 0;
const INFECTED: u8 = 1;
const RECOVERED: u8 = 2;

/// Reusable per-worker buffers for trajectories on graphs with `n` nodes.
pub(crate) struct Workspace {
    status: Vec<u8>,
    pressure: Vec<u32>,
    tree: Fenwick,
    infected: Vec<usize>,
    slot: Vec<usize>,
    infected_at: Vec<f64>,
    pub(crate) duration: Vec<f64>,
    touched: Vec<usize>,
    si_edges: u64,
    gamma_total: f64,
}

impl Workspace {
    pub(crate) fn new(n: usize) -> Self {
        Workspace {
            status: vec![SUSCEPTIBLE; n],
            pressure: vec![0; n],
            tree: Fenwick::new(n),
            infected: Vec::new(),
            slot: vec![0; n],
            infected_at: vec![0.0; n],
            duration: vec![0.0; n],
            touched: Vec::new(),
            si_edges: 0,
            gamma_total: 0.0,
        }
    }

    pub(crate) fn ever_infected(&self, v: usize) -> bool {
        self.status[v] != SUSCEPTIBLE
    }

    /// Nodes that left the susceptible state in the last run, in infection order.
    pub(crate) fn touched(&self) -> &[usize] {
        &self.touched
    }

    fn reset(&mut self) {
        for &v in &self.touched {
            self.status[v] = SUSCEPTIBLE;
            self.duration[v] = 0.0;
        }
        // Pressure only lives on susceptible nodes; clear whatever is left.
        self.tree.clear();
        self.pressure.iter_mut().for_each(|p| *p = 0);
        self.touched.clear();
        self.infected.clear();
        self.si_edges = 0;
        self.gamma_total = 0.0;
    }

    /// Runs one trajectory to extinction and returns the final size.
    ///
    /// `active` masks out removed edges by id.
    pub(crate) fn run(
        &mut self,
        g: &Graph,
        params: &SirParams,
        init: &InitialCondition,
        active: Option<&[bool]>,
        rng: &mut StreamRng,
        mut events: Option<&mut Vec<Event>>,
    ) -> usize {
        self.reset();
        let gamma = params.gamma();
        let tau = params.tau();
        match init {
            InitialCondition::UniformRandomSingle => {
                let v = rng.random_range(0..g.node_count());
                self.infect(g, gamma, active, v, 0.0);
            }
            InitialCondition::FixedNode(v) => self.infect(g, gamma, active, *v, 0.0),
            InitialCondition::FixedSet(set) => {
                for &v in set {
                    self.infect(g, gamma, active, v, 0.0);
                }
            }
        }
        if let Some(log) = events.as_deref_mut() {
            log.extend(self.touched.iter().map(|&node| Event {
                time: 0.0,
                node,
                transition: Transition::Infection,
            }));
        }

        let mut t = 0.0;
        while !self.infected.is_empty() {
            let infection_rate = tau * self.si_edges as f64;
            let total = infection_rate + self.gamma_total;
            let wait: f64 = rng.random();
            t += -(1.0 - wait).ln() / total;
            let u = rng.random::<f64>() * total;
            let (node, transition) = if u < infection_rate {
                let k = ((u / tau) as u64).min(self.si_edges - 1);
                let v = self.tree.find(k as u32);
                self.infect(g, gamma, active, v, t);
                (v, Transition::Infection)
            } else {
                let v = self.pick_recovery(gamma, u - infection_rate);
                self.recover(g, gamma, active, v, t);
                (v, Transition::Recovery)
            };
            if let Some(log) = events.as_deref_mut() {
                log.push(Event {
                    time: t,
                    node,
                    transition,
                });
            }
        }
        self.touched.len()
    }

    fn pick_recovery(&self, gamma: &[f64], mut u: f64) -> usize {
        for &v in &self.infected {
            u -= gamma[v];
            if u < 0.0 {
                return v;
            }
        }
        *self.infected.last().unwrap()
    }

    fn infect(&mut self, g: &Graph, gamma: &[f64], active: Option<&[bool]>, v: usize, t: f64) {
        debug_assert_eq!(self.status[v], SUSCEPTIBLE);
        let p = self.pressure[v];
        if p > 0 {
            self.tree.add(v, -(p as i64));
            self.si_edges -= u64::from(p);
            self.pressure[v] = 0;
        }
        self.status[v] = INFECTED;
        self.touched.push(v);
        self.infected_at[v] = t;
        self.slot[v] = self.infected.len();
        self.infected.push(v);
        self.gamma_total += gamma[v];
        for (&w, &id) in g.neighbors(v).iter().zip(g.incident_edges(v)) {
            if self.status[w] == SUSCEPTIBLE && active.is_none_or(|a| a[id]) {
                self.pressure[w] += 1;
                self.tree.add(w, 1);
                self.si_edges += 1;
            }
        }
    }

    fn recover(&mut self, g: &Graph, gamma: &[f64], active: Option<&[bool]>, v: usize, t: f64) {
        self.status[v] = RECOVERED;
        self.duration[v] = t - self.infected_at[v];
        let s = self.slot[v];
        self.infected.swap_remove(s);
        if s < self.infected.len() {
            self.slot[self.infected[s]] = s;
        }
        self.gamma_total = if self.infected.is_empty() {
            0.0
        } else {
            self.gamma_total - gamma[v]
        };
        for (&w, &id) in g.neighbors(v).iter().zip(g.incident_edges(v)) {
            if self.status[w] == SUSCEPTIBLE && active.is_none_or(|a| a[id]) {
                self.pressure[w] -= 1;
                self.tree.add(w, -1);
                self.si_edges -= 1;
            }
        }
    }
}

/// Fenwick tree over non-negative integer weights.
struct Fenwick {
    tree: Vec<i64>,
    top: usize,
}

impl Fenwick {
    fn new(n: usize) -> Self {
        let top = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        Fenwick {
            tree: vec![0; n + 1],
            top,
        }
    }

    fn clear(&mut self) {
        self.tree.iter_mut().for_each(|x| *x = 0);
    }

    fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        while i < self.tree.len() {
            self.tree[i] += delta;
            i += i & i.wrapping_neg();
        }
    }

    /// Smallest index whose inclusive prefix sum exceeds `k`.
    fn find(&self, k: u32) -> usize {
        let mut pos = 0;
        let mut rem = i64::from(k);
        let mut step = self.top;
        while step > 0 {
            let next = pos + step;
            if next < self.tree.len() && self.tree[next] <= rem {
                pos = next;
                rem -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}
