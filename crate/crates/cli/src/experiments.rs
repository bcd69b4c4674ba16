//! One runner per experiment kind. Each writes its CSV/JSON outputs and
//! returns whether every built-in check held (only the oracle suite has any).

use anyhow::Context;
use cyberlab::allocate::{evaluate_against, AllocationPlan, Strategy};
use cyberlab::centrality::{betweenness_centrality, degree_centrality, CentralityKind, CentralityVector};
use cyberlab::epidemic::{
    classify_pandemic, epidemic_threshold, exact_infection_probability, monte_carlo, outbreak_histogram,
    InitialCondition, PandemicVerdict,
};
use cyberlab::graph::{avg_shortest_path, barabasi_albert, degree_moments, erdos_renyi, Graph};
use cyberlab::rng::{derive_seed, stream, Seed};
use cyberlab::secgame::{
    accumulated_expenses, investment_centrality, run_game, spearman, GameOutcome, SecurityProfile,
};
use cyberlab::topoctl::{
    contact_coefficients_edges, contact_coefficients_splits, edge_removal_intervention, paired_losses,
    pandemic_loss_premiums, random_removal_scan, recheck, risk_measure, splitting_intervention, surcharge,
    Action, InterventionResult,
};
use rand::Rng;
use serde::Serialize;

use crate::config::{ExperimentConfig, Kind, Method};
use crate::output::Outputs;

const PHASE_TAG: u64 = 0x7068_6173_65;
const HETERO_TAG: u64 = 0x6865_7465_72;
const ORACLE_TAG: u64 = 0x6f72_6163_6c65;
const RECHECK_TAG: u64 = 0x7265_6368_6b;

pub fn run(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    match cfg.kind {
        Kind::Generate => generate(cfg, out),
        Kind::Simulate => simulate(cfg, out),
        Kind::Game => game(cfg, out).map(|_| true),
        Kind::Allocation => allocation(cfg, out),
        Kind::PhaseTransition => phase_transition(cfg, out),
        Kind::Heterogeneity => heterogeneity(cfg, out),
        Kind::EdgeRemoval | Kind::NodeSplitting => intervention(cfg, out).map(|_| true),
        Kind::Premiums => premiums(cfg, out),
        Kind::OracleSuite => oracle_suite(cfg, out),
    }
}

fn build_graph(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Graph> {
    let spec = cfg.graph.as_ref().context("no graph configured")?;
    out.stage("graph", || spec.build(cfg.seed()))
}

#[derive(Serialize)]
struct NodeRow {
    node: usize,
    degree: usize,
    betweenness: f64,
    seed: Seed,
    runs: u64,
}

fn generate(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    let g = build_graph(cfg, out)?;
    let bet = out.stage("centrality", || Ok(betweenness_centrality(&g)))?;
    let rows: Vec<NodeRow> = (0..g.node_count())
        .map(|v| NodeRow {
            node: v,
            degree: g.degree(v),
            betweenness: bet.values()[v],
            seed: cfg.seed(),
            runs: cfg.runs(),
        })
        .collect();
    out.edge_list("graph.edges", &g)?;
    out.csv("nodes.csv", &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct HistogramRow {
    size: usize,
    count: u64,
    frequency: f64,
    seed: Seed,
    runs: u64,
}

fn histogram_rows(counts: &[u64], seed: Seed, runs: u64) -> Vec<HistogramRow> {
    counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > 0)
        .map(|(size, &count)| HistogramRow {
            size,
            count,
            frequency: count as f64 / runs as f64,
            seed,
            runs,
        })
        .collect()
}

#[derive(Serialize)]
struct EnsembleNodeRow {
    node: usize,
    degree: usize,
    infection_probability: f64,
    mean_infected_time: f64,
    seed: Seed,
    runs: u64,
}

#[derive(Serialize)]
struct EnsembleSummary {
    nodes: usize,
    edges: usize,
    tau: f64,
    gamma: f64,
    mean_degree: f64,
    mean_square_degree: f64,
    threshold_index: Option<f64>,
    mean_final_size: f64,
    verdict: PandemicVerdict,
    seed: Seed,
    runs: u64,
}

fn simulate(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    let g = build_graph(cfg, out)?;
    let (seed, runs) = (cfg.seed(), cfg.runs());
    let params = cfg.epidemic.params(g.node_count())?;
    let stats = out.stage("ensemble", || {
        Ok(monte_carlo(&g, &params, &InitialCondition::UniformRandomSingle, runs, seed)?)
    })?;
    let verdict = classify_pandemic(&stats, &cfg.epidemic.criterion()?);
    let (k1, k2) = degree_moments(&g);
    let threshold = epidemic_threshold(k1, k2, cfg.epidemic.tau, cfg.epidemic.gamma).ok();
    let mean_size = outbreak_histogram(&stats).iter().map(|(s, f)| *s as f64 * f).sum();
    let p = stats.infection_probability();
    let t = stats.mean_infected_time();
    let nodes: Vec<EnsembleNodeRow> = (0..g.node_count())
        .map(|v| EnsembleNodeRow {
            node: v,
            degree: g.degree(v),
            infection_probability: p[v],
            mean_infected_time: t[v],
            seed,
            runs,
        })
        .collect();
    out.csv("histogram.csv", &histogram_rows(stats.size_histogram(), seed, runs))?;
    out.csv("nodes.csv", &nodes)?;
    out.json(
        "ensemble.json",
        &EnsembleSummary {
            nodes: g.node_count(),
            edges: g.edge_count(),
            tau: cfg.epidemic.tau,
            gamma: cfg.epidemic.gamma,
            mean_degree: k1,
            mean_square_degree: k2,
            threshold_index: threshold.map(|t| t.index),
            mean_final_size: mean_size,
            verdict,
            seed,
            runs,
        },
    )?;
    Ok(true)
}

#[derive(Serialize)]
struct PhaseRow {
    network: String,
    p: Option<f64>,
    nodes: usize,
    edges: usize,
    mean_degree: f64,
    mean_square_degree: f64,
    threshold_index: Option<f64>,
    pandemic_frequency: f64,
    prone: bool,
    seed: Seed,
    runs: u64,
}

fn pandemic_row(
    cfg: &ExperimentConfig,
    out: &mut Outputs,
    label: &str,
    p: Option<f64>,
    g: &Graph,
) -> anyhow::Result<PhaseRow> {
    let (seed, runs) = (cfg.seed(), cfg.runs());
    let params = cfg.epidemic.params(g.node_count())?;
    let stats = out.stage(&format!("ensemble {label}"), || {
        Ok(monte_carlo(g, &params, &InitialCondition::UniformRandomSingle, runs, seed)?)
    })?;
    let verdict = classify_pandemic(&stats, &cfg.epidemic.criterion()?);
    out.csv(&format!("histogram_{label}.csv"), &histogram_rows(stats.size_histogram(), seed, runs))?;
    let (k1, k2) = degree_moments(g);
    Ok(PhaseRow {
        network: label.to_string(),
        p,
        nodes: g.node_count(),
        edges: g.edge_count(),
        mean_degree: k1,
        mean_square_degree: k2,
        threshold_index: epidemic_threshold(k1, k2, cfg.epidemic.tau, cfg.epidemic.gamma).ok().map(|t| t.index),
        pandemic_frequency: verdict.frequency,
        prone: verdict.prone,
        seed,
        runs,
    })
}

fn phase_transition(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    let section = &cfg.phase_transition;
    let mut rows = Vec::new();
    for (i, &p) in section.p.iter().enumerate() {
        let g = erdos_renyi(section.n, p, derive_seed(cfg.seed(), PHASE_TAG + i as u64))?;
        rows.push(pandemic_row(cfg, out, &format!("er_p{p}"), Some(p), &g)?);
    }
    out.csv("phase_transition.csv", &rows)?;
    Ok(true)
}

fn heterogeneity(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    let h = &cfg.heterogeneity;
    let ba = barabasi_albert(h.n, h.m, derive_seed(cfg.seed(), HETERO_TAG))?;
    let er = erdos_renyi(h.n, h.p, derive_seed(cfg.seed(), HETERO_TAG + 1))?;
    let rows = vec![
        pandemic_row(cfg, out, "ba", None, &ba)?,
        pandemic_row(cfg, out, "er", Some(h.p), &er)?,
    ];
    out.csv("heterogeneity.csv", &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct GameRow {
    round: usize,
    node: usize,
    gamma: f64,
    p_hat: f64,
    cost: f64,
    loss: f64,
    expense: f64,
    seed: Seed,
    runs: u64,
}

#[derive(Serialize)]
struct GameSummary {
    converged: bool,
    rounds: usize,
    total_expenses: f64,
    steady_gamma: Vec<f64>,
    rank_correlation_with_degree: Option<f64>,
    seed: Seed,
    runs: u64,
}

fn game(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<(Graph, GameOutcome)> {
    let g = build_graph(cfg, out)?;
    let (seed, runs) = (cfg.seed(), cfg.effective_runs());
    let start = SecurityProfile::uniform(g.node_count(), cfg.game.gamma0)?;
    let game_cfg = cfg.game_config();
    let outcome = out.stage("game", || Ok(run_game(&g, &start, &game_cfg)?))?;
    let mut rows = Vec::new();
    for rec in &outcome.history {
        let r = &rec.report;
        for v in 0..g.node_count() {
            rows.push(GameRow {
                round: rec.round,
                node: v,
                gamma: r.gamma[v],
                p_hat: r.infection_probability[v],
                cost: r.cost[v],
                loss: r.loss[v],
                expense: r.expense[v],
                seed,
                runs,
            });
        }
    }
    out.csv("game_history.csv", &rows)?;
    let degrees: Vec<f64> = g.degrees().iter().map(|&d| d as f64).collect();
    out.json(
        "game_summary.json",
        &GameSummary {
            converged: outcome.converged,
            rounds: outcome.rounds_played(),
            total_expenses: outcome.history.last().map_or(f64::NAN, |h| h.report.total),
            steady_gamma: outcome.profile.gamma().to_vec(),
            rank_correlation_with_degree: spearman(outcome.profile.gamma(), &degrees).ok(),
            seed,
            runs,
        },
    )?;
    Ok((g, outcome))
}

#[derive(Serialize)]
struct AllocationRow {
    strategy: Strategy,
    centrality: String,
    fraction: Option<f64>,
    budget: f64,
    expenses_before: f64,
    expenses_after: f64,
    reduction: f64,
    seed: Seed,
    runs: u64,
}

fn allocation(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    let (g, outcome) = game(cfg, out)?;
    let steady = outcome.profile;
    let game_cfg = cfg.game_config();
    let beta = cfg.allocation.beta;
    let before = out.stage("steady expenses", || Ok(accumulated_expenses(&g, &steady, &game_cfg)?))?;
    let centralities: Vec<CentralityVector> =
        vec![degree_centrality(&g), betweenness_centrality(&g), investment_centrality(&steady)];
    let mut plans = vec![AllocationPlan::untargeted(beta, g.node_count())?];
    for c in &centralities {
        for strategy in [Strategy::Upper, Strategy::Lower] {
            match AllocationPlan::targeted(strategy, beta, c, None) {
                Ok(plan) => plans.push(plan),
                Err(cyberlab::Error::ZeroCentrality) => {}
                Err(e) => return Err(e.into()),
            }
        }
        if let Some(f) = cfg.allocation.fraction {
            if let Ok(plan) = AllocationPlan::targeted(Strategy::CentralizedUpper, beta, c, Some(f)) {
                plans.push(plan);
            }
        }
    }
    let rows = out.stage("allocations", || {
        plans
            .iter()
            .map(|plan| {
                let e = evaluate_against(&g, &steady, &before, plan, &game_cfg)?;
                Ok(AllocationRow {
                    strategy: plan.strategy,
                    centrality: plan.centrality.map_or_else(|| "none".to_string(), |k| k.to_string()),
                    fraction: plan.fraction,
                    budget: beta,
                    expenses_before: e.before.total,
                    expenses_after: e.after.total,
                    reduction: e.reduction,
                    seed: cfg.seed(),
                    runs: cfg.effective_runs(),
                })
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    out.csv("allocation.csv", &rows)?;
    Ok(true)
}

#[derive(Serialize)]
struct LogRow {
    step: usize,
    action: &'static str,
    target: String,
    pandemic_frequency: f64,
    confirmed_frequency: Option<f64>,
    avg_path_length: Option<f64>,
    seed: Seed,
    runs: u64,
}

#[derive(Serialize)]
struct ScanRow {
    fraction: f64,
    removed_edges: usize,
    pandemic_frequency: f64,
    confirmed_frequency: Option<f64>,
    seed: Seed,
    runs: u64,
}

#[derive(Serialize)]
struct InterventionSummary {
    method: Method,
    nodes_before: usize,
    edges_before: usize,
    nodes_after: usize,
    edges_after: usize,
    removed_fraction: Option<f64>,
    splits: usize,
    split_fraction: f64,
    frequency_before: f64,
    frequency_after: f64,
    recheck_frequency: f64,
    avg_path_before: Option<f64>,
    avg_path_after: Option<f64>,
    seed: Seed,
    runs: u64,
}

fn log_rows(res: &InterventionResult, seed: Seed, runs: u64) -> Vec<LogRow> {
    res.steps
        .iter()
        .map(|s| {
            let (action, target) = match &s.action {
                Action::Initial => ("initial", String::new()),
                Action::RemoveEdges(edges) => (
                    "edge",
                    edges.iter().map(|e| format!("{}-{}", e.lo(), e.hi())).collect::<Vec<_>>().join(" "),
                ),
                Action::Split(rec) => ("split", format!("{}->{}", rec.node, rec.new_node)),
            };
            LogRow {
                step: s.step,
                action,
                target,
                pandemic_frequency: s.check.frequency,
                confirmed_frequency: s.confirmation.map(|c| c.frequency),
                avg_path_length: s.avg_path_length,
                seed,
                runs,
            }
        })
        .collect()
}

/// Runs the guided or splitting loop; `None` for the random-removal scan.
fn intervention(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Option<(Graph, InterventionResult)>> {
    let g = build_graph(cfg, out)?;
    let icfg = cfg.intervention_config()?;
    let iv = &cfg.intervention;
    let (seed, runs) = (cfg.seed(), cfg.runs());
    if iv.method == Method::Random {
        let scan = out.stage("random scan", || {
            Ok(random_removal_scan(&g, &icfg, iv.step, iv.max_fraction, iv.path_samples)?)
        })?;
        let rows: Vec<ScanRow> = scan
            .points
            .iter()
            .map(|p| ScanRow {
                fraction: p.fraction,
                removed_edges: p.removed_edges,
                pandemic_frequency: p.check.frequency,
                confirmed_frequency: p.confirmation.map(|c| c.frequency),
                seed,
                runs,
            })
            .collect();
        out.csv("random_scan.csv", &rows)?;
        out.json("random_scan.json", &scan)?;
        return Ok(None);
    }
    let res = out.stage("intervention", || {
        Ok(match iv.method {
            Method::Split => splitting_intervention(&g, &icfg, iv.centrality, iv.variant, iv.max_splits)?,
            _ => edge_removal_intervention(&g, &icfg, iv.batch)?,
        })
    })?;
    let again = out.stage("recheck", || Ok(recheck(&res, &icfg, derive_seed(seed, RECHECK_TAG))?))?;
    out.csv("intervention_log.csv", &log_rows(&res, seed, runs))?;
    out.edge_list("controlled.edges", &res.graph)?;
    out.json(
        "intervention_summary.json",
        &InterventionSummary {
            method: iv.method,
            nodes_before: res.original_nodes,
            edges_before: res.original_edges,
            nodes_after: res.graph.node_count(),
            edges_after: res.graph.edge_count(),
            removed_fraction: (iv.method == Method::Guided).then(|| res.removed_fraction()),
            splits: res.splits.len(),
            split_fraction: res.split_fraction(),
            frequency_before: res.frequency_before(),
            frequency_after: res.frequency_after(),
            recheck_frequency: again.frequency,
            avg_path_before: res.avg_path_before,
            avg_path_after: res.avg_path_after.or_else(|| avg_shortest_path(&res.graph).ok()),
            seed,
            runs,
        },
    )?;
    Ok(Some((g, res)))
}

#[derive(Serialize)]
struct CoefficientRow {
    node: usize,
    share: f64,
    c: f64,
    surcharge: f64,
    premium: f64,
    seed: Seed,
    runs: u64,
}

#[derive(Serialize)]
struct PremiumSummary {
    measure: String,
    alpha: f64,
    rho: f64,
    pool: f64,
    mean_loss: f64,
    mean_loss_controlled: f64,
    seed: Seed,
    runs: u64,
}

fn premiums(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    let (g, res) = intervention(cfg, out)?.context("premiums need a guided or splitting intervention")?;
    let (seed, runs) = (cfg.seed(), cfg.runs());
    let (loss, loss_c) = out.stage("paired losses", || {
        Ok(paired_losses(&g, &res.graph, cfg.epidemic.tau, cfg.epidemic.gamma, runs, seed)?)
    })?;
    let (coeffs, shares): (_, Vec<f64>) = if cfg.intervention.method == Method::Split {
        let centrality = match cfg.intervention.centrality {
            CentralityKind::Betweenness => betweenness_centrality(&g),
            _ => degree_centrality(&g),
        };
        let origins = res.split_origins();
        let shares = (0..g.node_count())
            .map(|v| if origins.contains(&v) { centrality.values()[v] } else { 0.0 })
            .collect();
        (contact_coefficients_splits(&origins, centrality.values())?, shares)
    } else {
        let shares = (0..g.node_count())
            .map(|v| res.removed.iter().filter(|e| e.touches(v)).count() as f64)
            .collect();
        (contact_coefficients_edges(g.node_count(), &res.removed)?, shares)
    };
    let spec = cfg.risk_spec()?;
    let report = pandemic_loss_premiums(&loss, &loss_c, &spec, &coeffs)?;
    let pool = cfg.premiums.pool.unwrap_or(report.rho);
    let base = vec![cfg.premiums.base; g.node_count()];
    let adjusted = surcharge(&base, &coeffs, pool)?;
    let rows: Vec<CoefficientRow> = (0..g.node_count())
        .map(|v| CoefficientRow {
            node: v,
            share: shares[v],
            c: coeffs.values()[v],
            surcharge: adjusted[v] - base[v],
            premium: adjusted[v],
            seed,
            runs,
        })
        .collect();
    out.csv("coefficients.csv", &rows)?;
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    out.json(
        "premiums.json",
        &PremiumSummary {
            measure: spec.measure.to_string(),
            alpha: spec.alpha,
            rho: risk_measure(
                &loss.iter().zip(&loss_c).map(|(l, c)| (l - c).max(0.0)).collect::<Vec<_>>(),
                &spec,
            )?,
            pool,
            mean_loss: mean(&loss),
            mean_loss_controlled: mean(&loss_c),
            seed,
            runs,
        },
    )?;
    Ok(true)
}

#[derive(Serialize)]
struct OracleRow {
    graph: usize,
    nodes: usize,
    edges: String,
    tau: f64,
    node: usize,
    gamma: f64,
    exact: f64,
    estimate: f64,
    bound: f64,
    pass: bool,
    seed: Seed,
    runs: u64,
}

/// Exact against Monte Carlo infection probabilities on small random graphs.
fn oracle_suite(cfg: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<bool> {
    let o = &cfg.oracle_suite;
    let (seed, runs) = (cfg.seed(), cfg.runs());
    let mut rng = stream(derive_seed(seed, ORACLE_TAG), 0);
    let mut rows = Vec::new();
    for gi in 0..o.graphs {
        let n = rng.random_range(o.max_nodes.min(2)..=o.max_nodes);
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.random_bool(0.6) {
                    edges.push((i, j));
                }
            }
        }
        let g = Graph::from_edges(n, edges.clone())?;
        let tau = rng.random_range(0.05..2.0);
        let gamma: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..2.0)).collect();
        let params = cyberlab::epidemic::SirParams::new(tau, gamma.clone())?;
        let init = InitialCondition::UniformRandomSingle;
        let mc = out.stage(&format!("oracle graph {gi}"), || {
            Ok(monte_carlo(&g, &params, &init, runs, derive_seed(seed, gi as u64))?.infection_probability())
        })?;
        let label = edges.iter().map(|(a, b)| format!("{a}-{b}")).collect::<Vec<_>>().join(" ");
        for v in 0..n {
            let exact = exact_infection_probability(&g, &params, &init, v)?;
            let bound = o.sigmas * (exact * (1.0 - exact) / runs as f64).sqrt();
            rows.push(OracleRow {
                graph: gi,
                nodes: n,
                edges: label.clone(),
                tau,
                node: v,
                gamma: gamma[v],
                exact,
                estimate: mc[v],
                bound,
                pass: (mc[v] - exact).abs() <= bound,
                seed,
                runs,
            });
        }
    }
    let ok = rows.iter().all(|r| r.pass);
    out.csv("oracle.csv", &rows)?;
    Ok(ok)
}
