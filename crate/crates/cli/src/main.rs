//! `cyberlab` command-line experiment runner.
//!
//! Exit codes: 0 success, 1 configuration error, 2 runtime error, 3 failed
//! oracle checks.

mod config;
mod experiments;
mod output;
mod report;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use cyberlab::centrality::CentralityKind;
use cyberlab::secgame::UpdateRule;
use cyberlab::topoctl::{RiskMeasure, SplitVariant};

use config::{ExperimentConfig, GraphSpec, Kind, Method, Mode};
use output::{write_manifest, Outputs, RunManifest};

#[derive(Parser)]
#[command(name = "cyberlab", version, about = "Network contagion, security game and intervention experiments")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Master seed (required unless the config sets one)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Simulation runs per ensemble
    #[arg(long, global = true)]
    runs: Option<u64>,
    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Contagion {
    /// Network: er:N:p, ba:N:m, fixture:NAME, path:N, complete:N or edges:FILE
    #[arg(long)]
    graph: GraphSpec,
    /// Infection rate per contact
    #[arg(long)]
    tau: Option<f64>,
    /// Homogeneous recovery rate
    #[arg(long)]
    gamma: Option<f64>,
    /// Pandemic size fraction
    #[arg(long)]
    q: Option<f64>,
    /// Pandemic frequency threshold
    #[arg(long)]
    epsilon: Option<f64>,
}

#[derive(Args)]
struct GameArgs {
    /// Use exact probabilities (at most 10 nodes)
    #[arg(long)]
    exact: bool,
    #[arg(long)]
    rounds: Option<usize>,
    /// Starting level of every node
    #[arg(long)]
    gamma0: Option<f64>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Update nodes one after another
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct InterventionArgs {
    /// guided, random or split
    #[arg(long, default_value = "guided", value_parser = parse_method)]
    method: Method,
    /// Centrality driving splits: degree or betweenness
    #[arg(long, default_value = "degree")]
    centrality: CentralityKind,
    /// Split the lower-degree half off instead of alternating ranks
    #[arg(long)]
    modified: bool,
    /// Edges removed per step
    #[arg(long)]
    batch: Option<usize>,
    /// Stop splitting after this many splits
    #[arg(long)]
    max_splits: Option<usize>,
    /// Runs of the confirmation ensemble
    #[arg(long)]
    confirm_runs: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a TOML config
    Run { config: PathBuf },
    /// Build a network and write its edge list and centralities
    Generate {
        #[arg(long)]
        graph: GraphSpec,
    },
    /// Outbreak ensemble on one network
    Simulate {
        #[command(flatten)]
        contagion: Contagion,
    },
    /// Iterate best responses to a steady state
    Game {
        #[command(flatten)]
        contagion: Contagion,
        #[command(flatten)]
        game: GameArgs,
    },
    /// Steady state plus budget allocations
    Allocate {
        #[command(flatten)]
        contagion: Contagion,
        #[command(flatten)]
        game: GameArgs,
        /// Extra budget
        #[arg(long)]
        beta: Option<f64>,
        /// Also target only this top fraction of nodes
        #[arg(long)]
        fraction: Option<f64>,
    },
    /// Edge removal or node splitting until pandemics are controlled
    Intervene {
        #[command(flatten)]
        contagion: Contagion,
        #[command(flatten)]
        intervention: InterventionArgs,
    },
    /// Pandemic-loss premiums after an intervention
    Premiums {
        #[command(flatten)]
        contagion: Contagion,
        #[command(flatten)]
        intervention: InterventionArgs,
        /// var or es
        #[arg(long, default_value = "es")]
        measure: RiskMeasure,
        #[arg(long)]
        alpha: Option<f64>,
        /// Surcharge pool (default: the risk measure)
        #[arg(long)]
        pool: Option<f64>,
    },
    /// Summarize a finished run from its manifest (file or output directory)
    Report { manifest: PathBuf },
}

fn parse_method(s: &str) -> Result<Method, String> {
    match s {
        "guided" => Ok(Method::Guided),
        "random" => Ok(Method::Random),
        "split" => Ok(Method::Split),
        other => Err(format!("unknown method `{other}` (guided, random or split)")),
    }
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
    Oracle,
}

impl Contagion {
    fn apply(self, cfg: &mut ExperimentConfig) {
        cfg.graph = Some(self.graph);
        let e = &mut cfg.epidemic;
        e.tau = self.tau.unwrap_or(e.tau);
        e.gamma = self.gamma.unwrap_or(e.gamma);
        e.q = self.q.unwrap_or(e.q);
        e.epsilon = self.epsilon.unwrap_or(e.epsilon);
    }
}

impl GameArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        let g = &mut cfg.game;
        if self.exact {
            g.mode = Mode::Exact;
        }
        if self.sequential {
            g.update = UpdateRule::Sequential;
        }
        g.rounds = self.rounds.unwrap_or(g.rounds);
        g.gamma0 = self.gamma0.unwrap_or(g.gamma0);
        g.tolerance = self.tolerance.or(g.tolerance);
    }
}

impl InterventionArgs {
    fn apply(self, cfg: &mut ExperimentConfig) {
        let iv = &mut cfg.intervention;
        iv.method = self.method;
        iv.centrality = self.centrality;
        if self.modified {
            iv.variant = SplitVariant::Modified;
        }
        iv.batch = self.batch.or(iv.batch);
        iv.max_splits = self.max_splits.unwrap_or(iv.max_splits);
        iv.confirm_runs = self.confirm_runs.unwrap_or(iv.confirm_runs);
    }
}

fn config_for(command: Command) -> Result<ExperimentConfig, Failure> {
    Ok(match command {
        Command::Run { config } => ExperimentConfig::load(&config).map_err(Failure::Config)?,
        Command::Generate { graph } => ExperimentConfig {
            graph: Some(graph),
            ..ExperimentConfig::new(Kind::Generate)
        },
        Command::Simulate { contagion } => {
            let mut cfg = ExperimentConfig::new(Kind::Simulate);
            contagion.apply(&mut cfg);
            cfg
        }
        Command::Game { contagion, game } => {
            let mut cfg = ExperimentConfig::new(Kind::Game);
            contagion.apply(&mut cfg);
            game.apply(&mut cfg);
            cfg
        }
        Command::Allocate {
            contagion,
            game,
            beta,
            fraction,
        } => {
            let mut cfg = ExperimentConfig::new(Kind::Allocation);
            contagion.apply(&mut cfg);
            game.apply(&mut cfg);
            cfg.allocation.beta = beta.unwrap_or(cfg.allocation.beta);
            cfg.allocation.fraction = fraction;
            cfg
        }
        Command::Intervene { contagion, intervention } => {
            let kind = if intervention.method == Method::Split {
                Kind::NodeSplitting
            } else {
                Kind::EdgeRemoval
            };
            let mut cfg = ExperimentConfig::new(kind);
            contagion.apply(&mut cfg);
            intervention.apply(&mut cfg);
            cfg
        }
        Command::Premiums {
            contagion,
            intervention,
            measure,
            alpha,
            pool,
        } => {
            let mut cfg = ExperimentConfig::new(Kind::Premiums);
            contagion.apply(&mut cfg);
            intervention.apply(&mut cfg);
            cfg.premiums.measure = measure;
            cfg.premiums.alpha = alpha.unwrap_or(cfg.premiums.alpha);
            cfg.premiums.pool = pool;
            cfg
        }
        Command::Report { .. } => unreachable!("handled before"),
    })
}

fn report(path: &Path) -> Result<(), Failure> {
    let manifest = output::read_manifest(path).map_err(Failure::Runtime)?;
    let dir = if path.is_dir() { path } else { path.parent().unwrap_or(Path::new(".")) };
    let text = report::summarize(&manifest, dir).map_err(Failure::Runtime)?;
    print!("{text}");
    Ok(())
}

fn execute(cli: Cli) -> Result<(), Failure> {
    let Global { seed, runs, threads, out } = cli.global;
    if let Command::Report { manifest } = &cli.command {
        return report(manifest);
    }
    let mut cfg = config_for(cli.command)?;
    cfg.seed = seed.or(cfg.seed);
    cfg.runs = runs.or(cfg.runs);
    cfg.out = out.or(cfg.out);
    cfg.validate().map_err(Failure::Config)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        pool = pool.num_threads(t);
    }
    let pool = pool.build().context("starting worker pool").map_err(Failure::Runtime)?;

    let started = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let mut outputs = Outputs::create(&cfg.out_dir()).map_err(Failure::Runtime)?;
    let passed = pool
        .install(|| experiments::run(&cfg, &mut outputs))
        .with_context(|| format!("{} experiment", cfg.kind))
        .map_err(Failure::Runtime)?;
    let config_echo = cfg.to_toml().map_err(Failure::Runtime)?;
    outputs.text("config.toml", &config_echo).map_err(Failure::Runtime)?;
    let (dir, files, stages) = outputs.into_parts();
    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        kind: cfg.kind.to_string(),
        seed: cfg.seed(),
        runs: cfg.effective_runs(),
        threads: pool.current_num_threads(),
        config: cfg,
        started_unix: started,
        wall_clock_seconds: clock.elapsed().as_secs_f64(),
        stages,
        outputs: files,
    };
    let path = write_manifest(&dir, &manifest).map_err(Failure::Runtime)?;
    eprintln!("wrote {}", path.display());
    if passed {
        Ok(())
    } else {
        Err(Failure::Oracle)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("configuration error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Oracle) => {
            eprintln!("oracle checks failed; see oracle.csv");
            ExitCode::from(3)
        }
    }
}
