//! Distribution of an extra security budget over a steady state.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::centrality::{allocation_weights, inverse_weights, ranking, CentralityKind, CentralityVector};
use crate::error::{invalid, Error, Result};
use crate::graph::Graph;
use crate::secgame::{accumulated_expenses, ExpenseReport, GameConfig, SecurityProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Untargeted,
    Upper,
    Lower,
    CentralizedUpper,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Untargeted => "untargeted",
            Strategy::Upper => "upper",
            Strategy::Lower => "lower",
            Strategy::CentralizedUpper => "centralized_upper",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "untargeted" => Ok(Strategy::Untargeted),
            "upper" => Ok(Strategy::Upper),
            "lower" => Ok(Strategy::Lower),
            "centralized_upper" => Ok(Strategy::CentralizedUpper),
            other => Err(invalid("strategy", format!("unknown strategy `{other}`"))),
        }
    }
}

fn check_budget(beta: f64) -> Result<()> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(invalid("beta", format!("budget {beta} must be positive")));
    }
    Ok(())
}

/// Equal share `β/n` for every node.
pub fn untargeted(beta: f64, n: usize) -> Result<Vec<f64>> {
    check_budget(beta)?;
    if n == 0 {
        return Err(invalid("n", "network has no nodes"));
    }
    Ok(vec![beta / n as f64; n])
}

/// Budget proportional to centrality.
pub fn upper(beta: f64, c: &[f64]) -> Result<Vec<f64>> {
    check_budget(beta)?;
    Ok(allocation_weights(c)?.into_iter().map(|w| beta * w).collect())
}

/// Budget proportional to inverse centrality; zero-centrality nodes get nothing.
pub fn lower(beta: f64, c: &[f64]) -> Result<Vec<f64>> {
    check_budget(beta)?;
    let inv = inverse_weights(&allocation_weights(c)?);
    let total: f64 = inv.iter().sum();
    Ok(inv.into_iter().map(|x| beta * x / total).collect())
}

/// Size of the targeted set, `⌈p·N⌉`. Products that miss an integer only by
/// rounding (such as `0.4 · 5`) are not pushed up to the next one.
pub fn targeted_count(fraction: f64, n: usize) -> usize {
    let x = fraction * n as f64;
    let k = if (x - x.round()).abs() < 1e-9 { x.round() } else { x.ceil() };
    (k as usize).clamp(1, n.max(1))
}

/// Upper allocation restricted to the `⌈p·N⌉` most central nodes.
pub fn centralized_upper(beta: f64, c: &[f64], fraction: f64) -> Result<Vec<f64>> {
    check_budget(beta)?;
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(invalid("fraction", format!("{fraction} must lie in (0, 1]")));
    }
    if c.is_empty() {
        return Err(invalid("centrality", "empty centrality vector"));
    }
    let chosen = &ranking(c)[..targeted_count(fraction, c.len())];
    let mut restricted = vec![0.0; c.len()];
    for &i in chosen {
        restricted[i] = c[i];
    }
    upper(beta, &restricted)
}

/// An allocation together with how it was derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationPlan {
    pub strategy: Strategy,
    pub budget: f64,
    pub centrality: Option<CentralityKind>,
    pub fraction: Option<f64>,
    /// Extra recovery rate per node.
    pub additions: Vec<f64>,
}

impl AllocationPlan {
    pub fn untargeted(beta: f64, n: usize) -> Result<Self> {
        Ok(AllocationPlan {
            strategy: Strategy::Untargeted,
            budget: beta,
            centrality: None,
            fraction: None,
            additions: untargeted(beta, n)?,
        })
    }

    /// Targeted plan; `fraction` is used by the centralized strategy only.
    pub fn targeted(strategy: Strategy, beta: f64, c: &CentralityVector, fraction: Option<f64>) -> Result<Self> {
        let additions = match strategy {
            Strategy::Untargeted => untargeted(beta, c.len())?,
            Strategy::Upper => upper(beta, c.values())?,
            Strategy::Lower => lower(beta, c.values())?,
            Strategy::CentralizedUpper => centralized_upper(beta, c.values(), fraction.unwrap_or(1.0))?,
        };
        Ok(AllocationPlan {
            strategy,
            budget: beta,
            centrality: (strategy != Strategy::Untargeted).then(|| c.kind()),
            fraction: (strategy == Strategy::CentralizedUpper).then(|| fraction.unwrap_or(1.0)),
            additions,
        })
    }

    /// The empty plan, which leaves every level unchanged.
    pub fn zero(n: usize) -> Self {
        AllocationPlan {
            strategy: Strategy::Untargeted,
            budget: 0.0,
            centrality: None,
            fraction: None,
            additions: vec![0.0; n],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AllocationEvaluation {
    pub before: ExpenseReport,
    pub after: ExpenseReport,
    /// `1 − ℰ_after/ℰ_before`; negative when the injection raises expenses.
    pub reduction: f64,
}

/// Expenses before and after adding the plan to a steady profile. Both
/// ensembles use the same seed schedule; nodes do not re-optimize.
pub fn evaluate_allocation(
    g: &Graph,
    steady: &SecurityProfile,
    plan: &AllocationPlan,
    config: &GameConfig,
) -> Result<AllocationEvaluation> {
    let before = accumulated_expenses(g, steady, config)?;
    evaluate_against(g, steady, &before, plan, config)
}

/// Like [`evaluate_allocation`] with the expenses at the steady state already known.
pub fn evaluate_against(
    g: &Graph,
    steady: &SecurityProfile,
    before: &ExpenseReport,
    plan: &AllocationPlan,
    config: &GameConfig,
) -> Result<AllocationEvaluation> {
    let boosted = steady.boosted(&plan.additions)?;
    let after = accumulated_expenses(g, &boosted, config)?;
    Ok(AllocationEvaluation {
        reduction: 1.0 - after.total / before.total,
        before: before.clone(),
        after,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::epidemic::ProbabilityMode;

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() < 1e-12)
    }

    #[test]
    fn untargeted_shares() {
        assert!(close(&untargeted(5.0, 50).unwrap(), &[0.1; 50]));
        assert_eq!(untargeted(2.5, 1).unwrap(), vec![2.5]);
        assert!(untargeted(0.0, 3).is_err());
    }

    #[test]
    fn upper_and_lower() {
        assert!(close(&upper(5.0, &[1.0, 1.0, 2.0]).unwrap(), &[1.25, 1.25, 2.5]));
        assert!(close(&upper(3.0, &[0.0, 1.0]).unwrap(), &[0.0, 3.0]));
        assert!(close(&lower(6.0, &[1.0, 2.0]).unwrap(), &[4.0, 2.0]));
        assert!(close(&lower(4.0, &[1.0, 1.0, 0.0]).unwrap(), &[2.0, 2.0, 0.0]));
        assert!(close(&upper(4.0, &[3.0; 4]).unwrap(), &untargeted(4.0, 4).unwrap()));
        assert!(close(&lower(4.0, &[3.0; 4]).unwrap(), &untargeted(4.0, 4).unwrap()));
        assert!(lower(1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn centralized() {
        let c = [5.0, 4.0, 3.0, 2.0, 1.0];
        assert!(close(&centralized_upper(9.0, &c, 0.4).unwrap(), &[5.0, 4.0, 0.0, 0.0, 0.0]));
        assert!(close(&centralized_upper(9.0, &c, 1.0).unwrap(), &upper(9.0, &c).unwrap()));
        assert!(close(&centralized_upper(2.0, &[1.0, 3.0, 3.0], 0.01).unwrap(), &[0.0, 2.0, 0.0]));
        assert!(centralized_upper(1.0, &[0.0, 0.0, 0.0], 0.5).is_err());
        assert!(centralized_upper(1.0, &c, 0.0).is_err());
        assert_eq!(targeted_count(0.4, 5), 2);
        assert_eq!(targeted_count(0.41, 5), 3);
        assert_eq!(targeted_count(0.1, 50), 5);
    }

    #[test]
    fn over_investment_raises_two_node_expenses() {
        let g = Graph::from_edges(2, [(0, 1)]).unwrap();
        let steady = SecurityProfile::uniform(2, 1.068).unwrap();
        let cfg = GameConfig::new(0.1, ProbabilityMode::Exact);
        let e = evaluate_allocation(&g, &steady, &AllocationPlan::untargeted(1.0, 2).unwrap(), &cfg).unwrap();
        assert!((e.before.total - 1.8718).abs() < 1e-3);
        assert!((e.after.total - 2.0490).abs() < 1e-3);
        assert!(e.reduction < 0.0);
        let z = evaluate_allocation(&g, &steady, &AllocationPlan::zero(2), &cfg).unwrap();
        assert_eq!(z.reduction, 0.0);
    }

    #[test]
    fn zero_plan_with_shared_seed_is_exactly_neutral() {
        let g = crate::graph::fixture(crate::graph::Fixture::Tree8);
        let steady = SecurityProfile::uniform(8, 0.9).unwrap();
        let cfg = GameConfig::new(0.1, ProbabilityMode::MonteCarlo { runs: 2000, seed: 17 });
        let z = evaluate_allocation(&g, &steady, &AllocationPlan::zero(8), &cfg).unwrap();
        assert_eq!(z.before.total, z.after.total);
    }
}
