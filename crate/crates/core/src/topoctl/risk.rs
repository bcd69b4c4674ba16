//! Contact coefficients, surcharges and pandemic risk premiums.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::epidemic::{final_sizes, InitialCondition, SirParams};
use crate::error::{invalid, Error, Result};
use crate::graph::{Edge, Graph};
use crate::rng::Seed;

/// Each node's share of a systemic risk charge; shares sum to one.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ContactCoefficients(Vec<f64>);

impl ContactCoefficients {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// `c_i = ε_i / (2|ℰ_c|)` where `ε_i` counts removed edges at node `i`.
pub fn contact_coefficients_edges(n: usize, removed: &[Edge]) -> Result<ContactCoefficients> {
    if removed.is_empty() {
        return Err(Error::UndefinedCoefficients("no edge was removed"));
    }
    let mut eps = vec![0usize; n];
    for e in removed {
        if e.hi() >= n {
            return Err(Error::NodeOutOfRange { node: e.hi(), n });
        }
        eps[e.lo()] += 1;
        eps[e.hi()] += 1;
    }
    let denom = 2.0 * removed.len() as f64;
    Ok(ContactCoefficients(eps.into_iter().map(|x| x as f64 / denom).collect()))
}

/// Centrality shares over the set of split nodes; zero elsewhere.
pub fn contact_coefficients_splits(split: &[usize], centrality: &[f64]) -> Result<ContactCoefficients> {
    let n = centrality.len();
    let mut set = split.to_vec();
    set.sort_unstable();
    set.dedup();
    if let Some(&i) = set.iter().find(|&&i| i >= n) {
        return Err(Error::NodeOutOfRange { node: i, n });
    }
    let total: f64 = set.iter().map(|&i| centrality[i]).sum();
    if !(total > 0.0) {
        return Err(Error::UndefinedCoefficients("split nodes have zero total centrality"));
    }
    let mut c = vec![0.0; n];
    for &i in &set {
        c[i] = centrality[i] / total;
    }
    Ok(ContactCoefficients(c))
}

/// Adds the share `c_i · f` of the pool `f` to every base premium.
pub fn surcharge(premiums: &[f64], c: &ContactCoefficients, pool: f64) -> Result<Vec<f64>> {
    if !(pool.is_finite() && pool >= 0.0) {
        return Err(invalid("pool", "surcharge pool must be non-negative"));
    }
    if premiums.len() != c.len() {
        return Err(Error::SampleMismatch {
            left: premiums.len(),
            right: c.len(),
        });
    }
    Ok(premiums.iter().zip(c.values()).map(|(p, ci)| p + ci * pool).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskMeasure {
    VaR,
    ES,
}

impl fmt::Display for RiskMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RiskMeasure::VaR => "var",
            RiskMeasure::ES => "es",
        })
    }
}

impl FromStr for RiskMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "var" => Ok(RiskMeasure::VaR),
            "es" => Ok(RiskMeasure::ES),
            other => Err(invalid("measure", format!("unknown risk measure `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RiskSpec {
    pub measure: RiskMeasure,
    pub alpha: f64,
}

impl RiskSpec {
    pub fn new(measure: RiskMeasure, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(invalid("alpha", format!("level {alpha} must lie in (0, 1)")));
        }
        Ok(RiskSpec { measure, alpha })
    }
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.is_empty() {
        return Err(invalid("samples", "no loss samples"));
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    Ok(s)
}

fn quantile_index(n: usize, alpha: f64) -> usize {
    (((n - 1) as f64) * alpha).ceil() as usize
}

/// Empirical `α`-quantile, taking the higher order statistic between two.
pub fn value_at_risk(samples: &[f64], alpha: f64) -> Result<f64> {
    RiskSpec::new(RiskMeasure::VaR, alpha)?;
    let s = sorted(samples)?;
    Ok(s[quantile_index(s.len(), alpha)])
}

/// Mean of the samples at or above the empirical `α`-quantile.
pub fn expected_shortfall(samples: &[f64], alpha: f64) -> Result<f64> {
    RiskSpec::new(RiskMeasure::ES, alpha)?;
    let s = sorted(samples)?;
    let tail = &s[quantile_index(s.len(), alpha)..];
    Ok(tail.iter().sum::<f64>() / tail.len() as f64)
}

pub fn risk_measure(samples: &[f64], spec: &RiskSpec) -> Result<f64> {
    match spec.measure {
        RiskMeasure::VaR => value_at_risk(samples, spec.alpha),
        RiskMeasure::ES => expected_shortfall(samples, spec.alpha),
    }
}

/// Final outbreak sizes on `before` and `after` under common random numbers:
/// run `r` uses the same random stream on both graphs.
pub fn paired_losses(
    before: &Graph,
    after: &Graph,
    tau: f64,
    gamma: f64,
    runs: u64,
    seed: Seed,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let sizes = |g: &Graph| -> Result<Vec<f64>> {
        let p = SirParams::homogeneous(g.node_count(), tau, gamma)?;
        Ok(final_sizes(g, &p, &InitialCondition::UniformRandomSingle, runs, seed)?
            .into_iter()
            .map(|k| k as f64)
            .collect())
    };
    Ok((sizes(before)?, sizes(after)?))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PremiumReport {
    /// Risk measure of the pandemic loss `L_e`.
    pub rho: f64,
    pub premiums: Vec<f64>,
}

/// Allocates `ρ(L_e)` with `L_e = max(L − L_c, 0)` per paired run in
/// proportion to the contact coefficients.
pub fn pandemic_loss_premiums(
    loss: &[f64],
    loss_controlled: &[f64],
    spec: &RiskSpec,
    c: &ContactCoefficients,
) -> Result<PremiumReport> {
    if loss.len() != loss_controlled.len() {
        return Err(Error::SampleMismatch {
            left: loss.len(),
            right: loss_controlled.len(),
        });
    }
    let excess: Vec<f64> = loss
        .iter()
        .zip(loss_controlled)
        .map(|(l, lc)| (l - lc).max(0.0))
        .collect();
    let rho = risk_measure(&excess, spec)?;
    let premiums = if rho > 0.0 {
        c.values().iter().map(|ci| ci * rho).collect()
    } else {
        vec![0.0; c.len()]
    };
    Ok(PremiumReport { rho, premiums })
}
