//! End-to-end checks of generators, ensembles and interventions against
//! closed forms and paired comparisons.

use cyberlab::epidemic::{
    monte_carlo, pandemic_check, CheckOptions, InitialCondition, PandemicCriterion, SirParams,
};
use cyberlab::graph::{barabasi_albert, erdos_renyi, Graph};
use cyberlab::topoctl::{
    contact_coefficients_edges, edge_removal_intervention, guided_edge_removal, paired_losses,
    pandemic_loss_premiums, InterventionConfig, RiskMeasure, RiskSpec,
};

fn line2() -> Graph {
    Graph::from_edges(2, [(0, 1)]).unwrap()
}

#[test]
fn two_node_infection_probabilities() {
    let g = line2();
    let p = SirParams::homogeneous(2, 0.1, 0.1).unwrap();
    let uniform = monte_carlo(&g, &p, &InitialCondition::UniformRandomSingle, 1_000_000, 21).unwrap();
    for x in uniform.infection_probability() {
        assert!((x - 0.75).abs() <= 0.002, "{x}");
    }
    let fixed = monte_carlo(&g, &p, &InitialCondition::FixedNode(1), 1_000_000, 22).unwrap();
    let x = fixed.infection_probability()[0];
    assert!((x - 0.5).abs() <= 0.002, "{x}");
    assert_eq!(fixed.infection_probability()[1], 1.0);
}

#[test]
fn er_edge_count_is_binomial() {
    let pairs = 50.0 * 49.0 / 2.0;
    let counts: Vec<f64> = (0..1000).map(|s| erdos_renyi(50, 0.16, s).unwrap().edge_count() as f64).collect();
    let mean = counts.iter().sum::<f64>() / counts.len() as f64;
    let se = (pairs * 0.16 * 0.84 / counts.len() as f64).sqrt();
    assert!((mean - 196.0).abs() <= 3.0 * se, "mean {mean}");
}

#[test]
fn ba_has_heavier_tail_than_er() {
    let max_degree = |g: &Graph| g.degrees().into_iter().max().unwrap();
    let wins = (0..100)
        .filter(|&s| {
            max_degree(&barabasi_albert(1000, 5, s).unwrap()) > max_degree(&erdos_renyi(1000, 0.01, s).unwrap())
        })
        .count();
    assert!(wins >= 95, "{wins}");
}

#[test]
fn strong_infection_reaches_everyone() {
    let g = Graph::complete(10);
    let p = SirParams::homogeneous(10, 100.0, 1.0).unwrap();
    let stats = monte_carlo(&g, &p, &InitialCondition::UniformRandomSingle, 10_000, 5).unwrap();
    let full = stats.size_histogram()[10] as f64 / stats.runs() as f64;
    assert!(full >= 0.99, "{full}");
}

#[test]
fn guided_removal_beats_random_removal() {
    let criterion = PandemicCriterion::default();
    let init = InitialCondition::UniformRandomSingle;
    let mut dominated = 0;
    for s in 0..10 {
        let g = barabasi_albert(1000, 5, 300 + s).unwrap();
        let k = g.edge_count() / 10;
        let removed = guided_edge_removal(&g, k, k / 4).unwrap();
        let guided = g.without_edges(&removed);
        let p = SirParams::homogeneous(1000, 0.1, 1.0).unwrap();
        let fg = pandemic_check(&guided, &p, &init, &criterion, 4000, s, CheckOptions::default()).unwrap();
        let random = CheckOptions {
            early_stop: false,
            random_removed_edges: Some(k),
        };
        let fr = pandemic_check(&g, &p, &init, &criterion, 4000, s, random).unwrap();
        if fg.frequency <= fr.frequency {
            dominated += 1;
        }
    }
    assert!(dominated >= 9, "{dominated}/10");
}

#[test]
fn premiums_concentrate_on_hubs() {
    let g = barabasi_albert(1000, 5, 400).unwrap();
    let cfg = InterventionConfig {
        check_runs: 4000,
        confirm_runs: 20_000,
        ..InterventionConfig::new(0.1, 1.0, 41)
    };
    let res = edge_removal_intervention(&g, &cfg, None).unwrap();
    let (loss, loss_c) = paired_losses(&g, &res.graph, 0.1, 1.0, 10_000, 42).unwrap();
    let c = contact_coefficients_edges(1000, &res.removed).unwrap();
    let spec = RiskSpec::new(RiskMeasure::ES, 0.95).unwrap();
    let report = pandemic_loss_premiums(&loss, &loss_c, &spec, &c).unwrap();
    assert!(report.rho > 0.0);
    let mut sorted = report.premiums.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let top: f64 = sorted[..100].iter().sum();
    assert!(top > 0.5 * report.rho, "{top} of {}", report.rho);
    let total: f64 = report.premiums.iter().sum();
    assert!((total - report.rho).abs() <= 1e-9 * report.rho);
}
