//! The security investment game.
//!
//! Node `i` picks a recovery rate `γ_i` and pays the cost `e^{kγ_i} − 1` plus
//! its expected time spent infected, `P(A_i)/γ_i`. Since `P(A_i)` does not
//! depend on `γ_i`, the best response solves `k e^{kγ} γ² = P(A_i)`.
//! Games iterate best responses from a starting profile, with every round
//! using one joint estimate of all infection probabilities under a single
//! uniformly random initial infection.

use serde::{Deserialize, Serialize};

use crate::centrality::{CentralityKind, CentralityVector};
use crate::epidemic::{
    exact_infection_probability, infection_probabilities, InitialCondition, ProbabilityMode, SirParams,
};
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;

pub const DEFAULT_K: f64 = 1.0 / 3.0;
pub const DEFAULT_ROUNDS: usize = 50;
pub const EXACT_TOLERANCE: f64 = 1e-4;
pub const MONTE_CARLO_TOLERANCE: f64 = 1e-3;

/// Security cost `e^{kγ} − 1`.
pub fn cost(gamma: f64, k: f64) -> f64 {
    (k * gamma).exp_m1()
}

/// Expected infected time `p/γ`.
pub fn loss(p_infect: f64, gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p_infect) {
        return Err(invalid("p_infect", format!("{p_infect} is not a probability")));
    }
    if !(gamma > 0.0) {
        return Err(invalid("gamma", "must be positive"));
    }
    Ok(p_infect / gamma)
}

/// Left-hand side of the first-order condition, `k e^{kγ} γ²`.
fn marginal(gamma: f64, k: f64) -> f64 {
    k * (k * gamma).exp() * gamma * gamma
}

fn bisect(lo: f64, hi: f64, k: f64, target: f64) -> f64 {
    let (mut lo, mut hi) = (lo, hi);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if marginal(mid, k) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Interval `[ε(N), 1/√k]` that holds every best response once
/// `P(A_i) ≥ 1/N`; `ε(N)` solves `k e^{kε} ε² = 1/(2N)`.
pub fn response_bracket(k: f64, n: usize) -> Result<(f64, f64)> {
    check_k(k)?;
    if n == 0 {
        return Err(invalid("n", "network has no nodes"));
    }
    let hi = 1.0 / k.sqrt();
    Ok((bisect(0.0, hi, k, 0.5 / n as f64), hi))
}

/// Individually optimal security level for infection probability `p_infect`.
///
/// Probabilities below `1/(2N)` (possible for Monte Carlo estimates) fall
/// back to the interval `[0, ε(N)]`.
pub fn best_response(p_infect: f64, k: f64, n: usize) -> Result<f64> {
    if !(p_infect > 0.0 && p_infect <= 1.0) {
        return Err(invalid(
            "p_infect",
            format!("{p_infect} must lie in (0, 1] for an interior optimum"),
        ));
    }
    let (eps, hi) = response_bracket(k, n)?;
    if marginal(eps, k) > p_infect {
        return Ok(bisect(0.0, eps, k, p_infect));
    }
    Ok(bisect(eps, hi, k, p_infect))
}

fn check_k(k: f64) -> Result<()> {
    if !(k.is_finite() && k > 0.0) {
        return Err(invalid("k", "growth constant must be positive"));
    }
    Ok(())
}

/// Recovery rate chosen by each node.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SecurityProfile(Vec<f64>);

impl SecurityProfile {
    pub fn new(gamma: Vec<f64>) -> Result<Self> {
        if let Some(g) = gamma.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return Err(invalid("gamma", format!("{g} must be finite and positive")));
        }
        Ok(SecurityProfile(gamma))
    }

    pub fn uniform(n: usize, gamma: f64) -> Result<Self> {
        Self::new(vec![gamma; n])
    }

    pub fn gamma(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Largest coordinate-wise change.
    pub fn distance(&self, other: &SecurityProfile) -> f64 {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Adds a non-negative amount to every node.
    pub fn boosted(&self, extra: &[f64]) -> Result<Self> {
        if extra.len() != self.0.len() {
            return Err(invalid("allocation", "length differs from the profile"));
        }
        Self::new(self.0.iter().zip(extra).map(|(g, e)| g + e).collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UpdateRule {
    /// Every node responds to the previous round's profile.
    #[default]
    Simultaneous,
    /// Nodes respond one after another to the latest levels.
    Sequential,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub k: f64,
    pub tau: f64,
    /// Maximum number of best-response rounds.
    pub rounds: usize,
    pub mode: ProbabilityMode,
    /// Stop once no level moves by more than this; defaults depend on `mode`.
    pub tolerance: Option<f64>,
    pub update: UpdateRule,
}

impl GameConfig {
    pub fn new(tau: f64, mode: ProbabilityMode) -> Self {
        GameConfig {
            k: DEFAULT_K,
            tau,
            rounds: DEFAULT_ROUNDS,
            mode,
            tolerance: None,
            update: UpdateRule::Simultaneous,
        }
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance.unwrap_or(match self.mode {
            ProbabilityMode::Exact => EXACT_TOLERANCE,
            ProbabilityMode::MonteCarlo { .. } => MONTE_CARLO_TOLERANCE,
        })
    }

    pub fn validate(&self) -> Result<()> {
        check_k(self.k)?;
        if !(self.tau.is_finite() && self.tau >= 0.0) {
            return Err(invalid("tau", "must be finite and non-negative"));
        }
        if self.rounds == 0 {
            return Err(invalid("rounds", "at least one round is required"));
        }
        if let ProbabilityMode::MonteCarlo { runs: 0, .. } = self.mode {
            return Err(invalid("runs", "at least one run is required"));
        }
        if let Some(t) = self.tolerance {
            if !(t > 0.0) {
                return Err(invalid("tolerance", "must be positive"));
            }
        }
        Ok(())
    }

    fn params(&self, g: &Graph, profile: &SecurityProfile) -> Result<SirParams> {
        let params = SirParams::new(self.tau, profile.gamma().to_vec())?;
        if profile.len() != g.node_count() {
            return Err(invalid(
                "gamma",
                format!("profile has {} entries for {} nodes", profile.len(), g.node_count()),
            ));
        }
        Ok(params)
    }
}

/// Costs, losses and expenses of every node at one profile.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExpenseReport {
    pub gamma: Vec<f64>,
    pub infection_probability: Vec<f64>,
    pub cost: Vec<f64>,
    pub loss: Vec<f64>,
    pub expense: Vec<f64>,
    /// Accumulated total expenses.
    pub total: f64,
}

impl ExpenseReport {
    pub fn from_probabilities(profile: &SecurityProfile, probs: Vec<f64>, k: f64) -> Self {
        let gamma = profile.gamma().to_vec();
        let cost: Vec<f64> = gamma.iter().map(|&g| cost(g, k)).collect();
        let loss: Vec<f64> = probs.iter().zip(&gamma).map(|(p, g)| p / g).collect();
        let expense: Vec<f64> = cost.iter().zip(&loss).map(|(c, l)| c + l).collect();
        ExpenseReport {
            total: expense.iter().sum(),
            gamma,
            infection_probability: probs,
            cost,
            loss,
            expense,
        }
    }
}

fn estimate(g: &Graph, profile: &SecurityProfile, config: &GameConfig) -> Result<Vec<f64>> {
    let params = config.params(g, profile)?;
    infection_probabilities(g, &params, &InitialCondition::UniformRandomSingle, config.mode)
}

pub fn accumulated_expenses(g: &Graph, profile: &SecurityProfile, config: &GameConfig) -> Result<ExpenseReport> {
    config.validate()?;
    let probs = estimate(g, profile, config)?;
    Ok(ExpenseReport::from_probabilities(profile, probs, config.k))
}

fn responses(probs: &[f64], k: f64) -> Result<SecurityProfile> {
    let n = probs.len();
    SecurityProfile::new(
        probs
            .iter()
            .map(|&p| best_response(p, k, n))
            .collect::<Result<_>>()?,
    )
}

fn advance(g: &Graph, profile: &SecurityProfile, probs: &[f64], config: &GameConfig) -> Result<SecurityProfile> {
    match config.update {
        UpdateRule::Simultaneous => responses(probs, config.k),
        UpdateRule::Sequential => {
            let n = g.node_count();
            let mut gamma = profile.gamma().to_vec();
            for i in 0..n {
                let current = SecurityProfile::new(gamma.clone())?;
                let p = match config.mode {
                    ProbabilityMode::Exact => exact_infection_probability(
                        g,
                        &config.params(g, &current)?,
                        &InitialCondition::UniformRandomSingle,
                        i,
                    )?,
                    _ => estimate(g, &current, config)?[i],
                };
                gamma[i] = best_response(p, config.k, n)?;
            }
            SecurityProfile::new(gamma)
        }
    }
}

/// One round of best responses to `profile`.
pub fn play_round(g: &Graph, profile: &SecurityProfile, config: &GameConfig) -> Result<SecurityProfile> {
    config.validate()?;
    let probs = estimate(g, profile, config)?;
    advance(g, profile, &probs, config)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    /// Round index; 0 is the starting profile.
    pub round: usize,
    pub report: ExpenseReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GameOutcome {
    pub profile: SecurityProfile,
    /// Profiles and expenses for round 0 up to the last round played.
    pub history: Vec<RoundRecord>,
    pub converged: bool,
}

impl GameOutcome {
    pub fn rounds_played(&self) -> usize {
        self.history.len() - 1
    }
}

/// Iterates best responses until the profile settles or the round budget runs out.
pub fn run_game(g: &Graph, initial: &SecurityProfile, config: &GameConfig) -> Result<GameOutcome> {
    config.validate()?;
    let tol = config.tolerance();
    let mut profile = initial.clone();
    let mut history = Vec::new();
    let mut converged = false;
    for round in 0.. {
        let probs = estimate(g, &profile, config)?;
        history.push(RoundRecord {
            round,
            report: ExpenseReport::from_probabilities(&profile, probs.clone(), config.k),
        });
        if converged || round == config.rounds {
            break;
        }
        let next = advance(g, &profile, &probs, config)?;
        converged = next.distance(&profile) < tol;
        profile = next;
    }
    Ok(GameOutcome {
        profile,
        history,
        converged,
    })
}

pub fn investment_centrality(profile: &SecurityProfile) -> CentralityVector {
    CentralityVector::new(CentralityKind::Investment, profile.gamma().to_vec())
        .expect("security levels are positive")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoNodeValues {
    pub loss: [f64; 2],
    pub infection_probability: [f64; 2],
}

/// Closed-form losses on a single edge with one uniformly chosen initial infection.
pub fn two_node_oracle(tau: f64, gamma_1: f64, gamma_2: f64) -> Result<TwoNodeValues> {
    if !(tau >= 0.0 && gamma_1 > 0.0 && gamma_2 > 0.0) {
        return Err(invalid("rates", "tau must be non-negative and recovery rates positive"));
    }
    let p1 = 0.5 * (1.0 + tau / (gamma_2 + tau));
    let p2 = 0.5 * (1.0 + tau / (gamma_1 + tau));
    Ok(TwoNodeValues {
        loss: [p1 / gamma_1, p2 / gamma_2],
        infection_probability: [p1, p2],
    })
}

/// Profile minimizing the accumulated expenses of the two-node network,
/// found by a grid scan followed by a shrinking pattern search.
pub fn two_node_social_optimum(tau: f64, k: f64) -> Result<(f64, f64)> {
    check_k(k)?;
    let total = |a: f64, b: f64| -> f64 {
        let v = two_node_oracle(tau, a, b).expect("positive rates");
        cost(a, k) + cost(b, k) + v.loss[0] + v.loss[1]
    };
    let hi = 1.0 / k.sqrt() * 2.0;
    let steps = 200;
    let h = hi / steps as f64;
    let mut best = (h, h, f64::INFINITY);
    for i in 1..=steps {
        for j in 1..=steps {
            let (a, b) = (i as f64 * h, j as f64 * h);
            let e = total(a, b);
            if e < best.2 {
                best = (a, b, e);
            }
        }
    }
    let mut step = h;
    while step > 1e-12 {
        let mut moved = false;
        for (da, db) in [(1.0, 0.0), (-1.0, 0.0), (0.0, 1.0), (0.0, -1.0), (1.0, 1.0), (-1.0, -1.0)] {
            let (a, b) = (best.0 + da * step, best.1 + db * step);
            if a > 0.0 && b > 0.0 {
                let e = total(a, b);
                if e < best.2 {
                    best = (a, b, e);
                    moved = true;
                }
            }
        }
        if !moved {
            step *= 0.5;
        }
    }
    Ok((best.0, best.1))
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::SampleMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    let (ra, rb) = (average_ranks(a), average_ranks(b));
    let n = a.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    if va == 0.0 || vb == 0.0 {
        return Err(invalid("ranks", "a constant sample has no rank correlation"));
    }
    Ok(cov / (va * vb).sqrt())
}

fn average_ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&i, &j| x[i].total_cmp(&x[j]));
    let mut ranks = vec![0.0; x.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start;
        while end + 1 < idx.len() && x[idx[end + 1]] == x[idx[start]] {
            end += 1;
        }
        let r = (start + end) as f64 / 2.0 + 1.0;
        idx[start..=end].iter().for_each(|&i| ranks[i] = r);
        start = end + 1;
    }
    ranks
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{fixture, Fixture};

    fn line2() -> Graph {
        Graph::from_edges(2, [(0, 1)]).unwrap()
    }

    fn exact(tau: f64) -> GameConfig {
        GameConfig::new(tau, ProbabilityMode::Exact)
    }

    #[test]
    fn cost_values() {
        assert_eq!(cost(0.0, DEFAULT_K), 0.0);
        assert!((cost(3.0, DEFAULT_K) - 1.718_281_828_459_045).abs() < 1e-12);
        assert!((cost(1.068, DEFAULT_K) - 0.427_607_548).abs() < 1e-9);
    }

    #[test]
    fn loss_values() {
        assert!((loss(0.75, 0.1).unwrap() - 7.5).abs() < 1e-12);
        assert_eq!(loss(0.0, 0.3).unwrap(), 0.0);
        assert_eq!(loss(1.0, 2.0).unwrap(), 0.5);
        assert!(loss(0.5, 0.0).is_err());
    }

    #[test]
    fn best_response_table_values() {
        let r = |p: f64| best_response(p, DEFAULT_K, 2).unwrap();
        assert!((r(0.75) - 1.223_330_128).abs() < 1e-9);
        assert!((r(0.53779) - 1.0638).abs() < 5e-5);
        assert!((best_response(0.406, DEFAULT_K, 8).unwrap() - 0.943).abs() < 1e-3);
        assert!((best_response(1.0, DEFAULT_K, 1).unwrap() - 1.376_886_803).abs() < 1e-9);
        assert!(best_response(0.0, DEFAULT_K, 2).is_err());
    }

    #[test]
    fn best_response_residual_and_bracket() {
        for n in [1usize, 2, 8, 50, 1000] {
            let (lo, hi) = response_bracket(DEFAULT_K, n).unwrap();
            assert!((marginal(lo, DEFAULT_K) * 2.0 * n as f64 - 1.0).abs() < 1e-9);
            for p in [1.0 / n as f64, 0.3_f64.max(1.0 / n as f64), 1.0] {
                let g = best_response(p, DEFAULT_K, n).unwrap();
                assert!(g >= lo && g <= hi);
                assert!(((marginal(g, DEFAULT_K) - p) / p).abs() < 1e-8);
            }
        }
        // below 1/(2N): fallback interval
        let g = best_response(1e-4, DEFAULT_K, 10).unwrap();
        assert!(((marginal(g, DEFAULT_K) - 1e-4) / 1e-4).abs() < 1e-8);
    }

    #[test]
    fn two_node_oracle_values() {
        let v = two_node_oracle(0.1, 0.1, 0.1).unwrap();
        assert_eq!(v.infection_probability, [0.75, 0.75]);
        assert!((v.loss[0] - 7.5).abs() < 1e-12);
        let v = two_node_oracle(0.0, 0.5, 4.0).unwrap();
        assert_eq!(v.infection_probability, [0.5, 0.5]);
        assert_eq!(v.loss, [1.0, 0.125]);
        assert!((two_node_oracle(0.1, 1.0, 1e9).unwrap().infection_probability[0] - 0.5).abs() < 1e-9);
    }

    #[test]
    fn two_node_game_table() {
        let start = SecurityProfile::uniform(2, 0.1).unwrap();
        let out = run_game(&line2(), &start, &exact(0.1)).unwrap();
        let expected = [1.223_330_128, 1.063_808_225, 1.068_145_798, 1.068_012_582];
        for (r, want) in expected.iter().enumerate() {
            let got = &out.history[r + 1].report.gamma;
            assert!((got[0] - want).abs() < 1e-9 && (got[1] - want).abs() < 1e-9, "round {}", r + 1);
        }
        assert!(out.converged);
        assert!(out.rounds_played() <= 5);
        assert!((out.profile.gamma()[0] - 1.068).abs() < 5e-4);
    }

    #[test]
    fn two_node_expenses() {
        let p = SecurityProfile::uniform(2, 1.068).unwrap();
        let before = accumulated_expenses(&line2(), &p, &exact(0.1)).unwrap();
        assert!((before.total - 1.8718).abs() < 1e-3);
        let after = accumulated_expenses(&line2(), &p.boosted(&[0.5, 0.5]).unwrap(), &exact(0.1)).unwrap();
        assert!((after.total - 2.0490).abs() < 1e-3);
        for (i, e) in before.expense.iter().enumerate() {
            assert_eq!(*e, before.cost[i] + before.loss[i]);
        }
    }

    #[test]
    fn social_optimum() {
        let (a, b) = two_node_social_optimum(0.1, DEFAULT_K).unwrap();
        assert!((a - 1.0984).abs() < 5e-5 && (b - 1.0984).abs() < 5e-5);
    }

    #[test]
    fn isolated_node_converges_immediately() {
        let g = Graph::empty(1);
        let out = run_game(&g, &SecurityProfile::uniform(1, 0.37).unwrap(), &exact(0.1)).unwrap();
        assert!((out.history[1].report.gamma[0] - 1.376_886_803).abs() < 1e-9);
        assert!(out.converged);
        assert_eq!(out.rounds_played(), 2);
    }

    #[test]
    fn zero_tau_symmetric_responses() {
        let g = fixture(Fixture::Tree8);
        let start = SecurityProfile::new((1..=8).map(|i| i as f64 * 0.2).collect()).unwrap();
        let next = play_round(&g, &start, &exact(0.0)).unwrap();
        let want = best_response(1.0 / 8.0, DEFAULT_K, 8).unwrap();
        assert!(next.gamma().iter().all(|&x| (x - want).abs() < 1e-12));
        let report = accumulated_expenses(&g, &start, &exact(0.0)).unwrap();
        let closed: f64 = start.gamma().iter().map(|&x| cost(x, DEFAULT_K) + 1.0 / (8.0 * x)).sum();
        assert!((report.total - closed).abs() < 1e-12);
    }

    #[test]
    fn sequential_rule_reaches_same_two_node_state() {
        let mut cfg = exact(0.1);
        cfg.update = UpdateRule::Sequential;
        let out = run_game(&line2(), &SecurityProfile::uniform(2, 0.1).unwrap(), &cfg).unwrap();
        assert!(out.converged);
        assert!((out.profile.gamma()[0] - 1.068).abs() < 5e-4);
    }

    #[test]
    fn rank_correlation() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]).unwrap() - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap() + 1.0).abs() < 1e-12);
        assert_eq!(average_ranks(&[5.0, 1.0, 5.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert!(spearman(&[1.0, 1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn investment_centrality_is_identity() {
        let c = investment_centrality(&SecurityProfile::uniform(2, 1.068).unwrap());
        assert_eq!(c.values(), &[1.068, 1.068]);
        assert_eq!(c.kind(), CentralityKind::Investment);
    }
}
