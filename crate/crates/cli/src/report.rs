//! Human-readable summaries of finished runs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use anyhow::{ensure, Context};

use crate::config::Kind;
use crate::output::RunManifest;

type Row = BTreeMap<String, String>;

fn read_rows(path: &Path) -> anyhow::Result<Vec<Row>> {
    let mut r = csv::Reader::from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let headers = r.headers()?.clone();
    r.records()
        .map(|rec| {
            let rec = rec?;
            Ok(headers.iter().zip(rec.iter()).map(|(h, v)| (h.to_string(), v.to_string())).collect())
        })
        .collect()
}

fn read_json(path: &Path) -> anyhow::Result<serde_json::Value> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(serde_json::from_str(&text)?)
}

fn get<'a>(row: &'a Row, key: &str) -> &'a str {
    row.get(key).map_or("", String::as_str)
}

fn short(v: &str) -> String {
    v.parse::<f64>().map_or_else(|_| v.to_string(), |x| format!("{x:.4}"))
}

fn json_num(v: &serde_json::Value, key: &str) -> String {
    match &v[key] {
        serde_json::Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), |x| format!("{x:.4}")),
        serde_json::Value::Null => "-".to_string(),
        other => other.to_string(),
    }
}

/// Summary text for the run described by `manifest`, whose outputs live in `dir`.
pub fn summarize(manifest: &RunManifest, dir: &Path) -> anyhow::Result<String> {
    for f in &manifest.outputs {
        ensure!(dir.join(f).exists(), "missing output {}", dir.join(f).display());
    }
    let mut s = String::new();
    writeln!(
        s,
        "{} run: seed {}, runs {}, {} threads, {:.1}s",
        manifest.kind, manifest.seed, manifest.runs, manifest.threads, manifest.wall_clock_seconds
    )?;
    for st in &manifest.stages {
        writeln!(s, "  {:<28} {:>9.3}s", st.stage, st.seconds)?;
    }
    match manifest.config.kind {
        Kind::PhaseTransition | Kind::Heterogeneity => {
            let file = if manifest.config.kind == Kind::PhaseTransition {
                "phase_transition.csv"
            } else {
                "heterogeneity.csv"
            };
            writeln!(s, "\n{:<12} {:>8} {:>10} {:>10} {:>6}", "network", "<k>", "index", "frequency", "prone")?;
            for r in read_rows(&dir.join(file))? {
                writeln!(
                    s,
                    "{:<12} {:>8} {:>10} {:>10} {:>6}",
                    get(&r, "network"),
                    short(get(&r, "mean_degree")),
                    short(get(&r, "threshold_index")),
                    short(get(&r, "pandemic_frequency")),
                    get(&r, "prone")
                )?;
            }
        }
        Kind::Allocation => {
            let rows = read_rows(&dir.join("allocation.csv"))?;
            let kinds = ["degree", "betweenness", "investment"];
            writeln!(s, "\nexpense reduction")?;
            writeln!(s, "{:<18} {:>12} {:>12} {:>12}", "strategy", kinds[0], kinds[1], kinds[2])?;
            for strategy in ["upper", "lower", "centralized_upper"] {
                let cells: Vec<String> = kinds
                    .iter()
                    .map(|k| {
                        rows.iter()
                            .find(|r| get(r, "strategy") == strategy && get(r, "centrality") == *k)
                            .map_or("-".to_string(), |r| short(get(r, "reduction")))
                    })
                    .collect();
                if cells.iter().any(|c| c != "-") {
                    writeln!(s, "{:<18} {:>12} {:>12} {:>12}", strategy, cells[0], cells[1], cells[2])?;
                }
            }
            if let Some(r) = rows.iter().find(|r| get(r, "strategy") == "untargeted") {
                writeln!(s, "{:<18} {:>12}", "untargeted", short(get(r, "reduction")))?;
                writeln!(s, "expenses at steady state: {}", short(get(r, "expenses_before")))?;
            }
        }
        Kind::Game => {
            let v = read_json(&dir.join("game_summary.json"))?;
            writeln!(
                s,
                "\nconverged {} after {} rounds; total expenses {}; rank correlation with degree {}",
                v["converged"],
                v["rounds"],
                json_num(&v, "total_expenses"),
                json_num(&v, "rank_correlation_with_degree")
            )?;
        }
        Kind::EdgeRemoval | Kind::NodeSplitting | Kind::Premiums => {
            if manifest.outputs.iter().any(|f| f == "random_scan.json") {
                let v = read_json(&dir.join("random_scan.json"))?;
                writeln!(
                    s,
                    "\nrandom removal: control at fraction {}, <l_c> {}",
                    json_num(&v, "control_fraction"),
                    json_num(&v, "avg_path_at_control")
                )?;
            } else {
                let v = read_json(&dir.join("intervention_summary.json"))?;
                writeln!(
                    s,
                    "\nremoved fraction {}, splits {} ({} of nodes)",
                    json_num(&v, "removed_fraction"),
                    v["splits"],
                    json_num(&v, "split_fraction")
                )?;
                writeln!(
                    s,
                    "pandemic frequency {} -> {} (recheck {})",
                    json_num(&v, "frequency_before"),
                    json_num(&v, "frequency_after"),
                    json_num(&v, "recheck_frequency")
                )?;
                writeln!(
                    s,
                    "<l> {} -> {}",
                    json_num(&v, "avg_path_before"),
                    json_num(&v, "avg_path_after")
                )?;
            }
            if manifest.config.kind == Kind::Premiums {
                let v = read_json(&dir.join("premiums.json"))?;
                writeln!(
                    s,
                    "{} at {}: {}; pool {}",
                    v["measure"].as_str().unwrap_or_default(),
                    json_num(&v, "alpha"),
                    json_num(&v, "rho"),
                    json_num(&v, "pool")
                )?;
                let mut rows = read_rows(&dir.join("coefficients.csv"))?;
                rows.sort_by(|a, b| {
                    let c = |r: &Row| get(r, "c").parse::<f64>().unwrap_or(0.0);
                    c(b).total_cmp(&c(a))
                });
                for r in rows.iter().take(5) {
                    writeln!(s, "  node {:>5}  c {}  premium {}", get(r, "node"), short(get(r, "c")), short(get(r, "premium")))?;
                }
            }
        }
        Kind::OracleSuite => {
            let rows = read_rows(&dir.join("oracle.csv"))?;
            let passed = rows.iter().filter(|r| get(r, "pass") == "true").count();
            writeln!(s, "\noracle checks passed: {passed}/{}", rows.len())?;
        }
        Kind::Simulate => {
            let v = read_json(&dir.join("ensemble.json"))?;
            writeln!(
                s,
                "\nmean final size {}; pandemic frequency {} (prone {})",
                json_num(&v, "mean_final_size"),
                json_num(&v["verdict"], "frequency"),
                v["verdict"]["prone"]
            )?;
        }
        Kind::Generate => {
            let rows = read_rows(&dir.join("nodes.csv"))?;
            let edges: usize = rows.iter().filter_map(|r| get(r, "degree").parse::<usize>().ok()).sum::<usize>() / 2;
            writeln!(s, "\n{} nodes, {edges} edges", rows.len())?;
        }
    }
    writeln!(s, "\noutputs:")?;
    for f in &manifest.outputs {
        writeln!(s, "  {f}")?;
    }
    Ok(s)
}
