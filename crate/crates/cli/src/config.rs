//! Experiment configuration files.
//!
//! A config is a TOML document with a handful of top-level keys and one
//! table per concern:
//!
//! ```toml
//! kind = "phase_transition"
//! seed = 42
//! runs = 10000
//!
//! [epidemic]
//! tau = 0.1
//! gamma = 1.0
//!
//! [phase_transition]
//! n = 1000
//! p = [0.010, 0.011, 0.012, 0.013, 0.014]
//! ```
//!
//! Every table is optional and falls back to the defaults below. Unknown
//! keys are rejected.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context};
use cyberlab::allocate::targeted_count;
use cyberlab::centrality::CentralityKind;
use cyberlab::epidemic::{PandemicCriterion, ProbabilityMode, SirParams};
use cyberlab::graph::{barabasi_albert, erdos_renyi, fixture, Fixture, Graph};
use cyberlab::rng::{derive_seed, Seed};
use cyberlab::secgame::{GameConfig, UpdateRule, DEFAULT_K, DEFAULT_ROUNDS};
use cyberlab::topoctl::{InterventionConfig, RiskMeasure, RiskSpec, SplitVariant};
use serde::{Deserialize, Serialize};

const GRAPH_TAG: u64 = 0x6772_6170_68;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Generate,
    Simulate,
    Game,
    Allocation,
    PhaseTransition,
    Heterogeneity,
    EdgeRemoval,
    NodeSplitting,
    Premiums,
    OracleSuite,
}

impl Kind {
    pub fn default_runs(self) -> u64 {
        match self {
            Kind::Generate => 0,
            Kind::Game | Kind::Allocation | Kind::OracleSuite => 100_000,
            _ => 10_000,
        }
    }

    fn needs_graph(self) -> bool {
        !matches!(self, Kind::PhaseTransition | Kind::Heterogeneity | Kind::OracleSuite)
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).map_err(|_| fmt::Error)?;
        f.write_str(s.as_str().unwrap_or_default())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    Er,
    Ba,
    Fixture,
    Path,
    Complete,
    EdgeList,
}

/// Where the network comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    /// Generator seed; derived from the master seed when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<Seed>,
}

impl GraphSpec {
    fn bare(model: Model) -> Self {
        GraphSpec {
            model,
            n: None,
            p: None,
            m: None,
            name: None,
            path: None,
            seed: None,
        }
    }

    pub fn build(&self, master: Seed) -> anyhow::Result<Graph> {
        let seed = self.seed.unwrap_or_else(|| derive_seed(master, GRAPH_TAG));
        let n = || self.n.context("graph.n is required for this model");
        Ok(match self.model {
            Model::Er => erdos_renyi(n()?, self.p.context("graph.p is required for er")?, seed)?,
            Model::Ba => barabasi_albert(n()?, self.m.context("graph.m is required for ba")?, seed)?,
            Model::Fixture => {
                let name: Fixture = self.name.as_deref().context("graph.name is required for fixture")?.parse()?;
                fixture(name)
            }
            Model::Path => {
                let n = n()?;
                Graph::from_edges(n, (1..n).map(|v| (v - 1, v)))?
            }
            Model::Complete => Graph::complete(n()?),
            Model::EdgeList => {
                let path = self.path.as_ref().context("graph.path is required for edge_list")?;
                let file = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
                Graph::read_edge_list(std::io::BufReader::new(file))?
            }
        })
    }
}

/// `er:N:p`, `ba:N:m`, `fixture:NAME`, `path:N`, `complete:N` or `edges:FILE`.
impl FromStr for GraphSpec {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> anyhow::Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let spec = match parts.as_slice() {
            ["er", n, p] => GraphSpec {
                n: Some(n.parse()?),
                p: Some(p.parse()?),
                ..GraphSpec::bare(Model::Er)
            },
            ["ba", n, m] => GraphSpec {
                n: Some(n.parse()?),
                m: Some(m.parse()?),
                ..GraphSpec::bare(Model::Ba)
            },
            ["fixture", name] => GraphSpec {
                name: Some(name.to_string()),
                ..GraphSpec::bare(Model::Fixture)
            },
            ["path", n] => GraphSpec {
                n: Some(n.parse()?),
                ..GraphSpec::bare(Model::Path)
            },
            ["complete", n] => GraphSpec {
                n: Some(n.parse()?),
                ..GraphSpec::bare(Model::Complete)
            },
            ["edges", path] => GraphSpec {
                path: Some(PathBuf::from(path)),
                ..GraphSpec::bare(Model::EdgeList)
            },
            _ => bail!("unrecognized graph `{s}` (try er:N:p, ba:N:m, fixture:tree8, path:N, complete:N, edges:FILE)"),
        };
        Ok(spec)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EpidemicSection {
    pub tau: f64,
    /// Homogeneous recovery rate.
    pub gamma: f64,
    /// Pandemic size fraction.
    pub q: f64,
    /// Pandemic frequency threshold.
    pub epsilon: f64,
}

impl Default for EpidemicSection {
    fn default() -> Self {
        EpidemicSection {
            tau: 0.1,
            gamma: 1.0,
            q: 0.1,
            epsilon: 0.001,
        }
    }
}

impl EpidemicSection {
    pub fn criterion(&self) -> anyhow::Result<PandemicCriterion> {
        Ok(PandemicCriterion::new(self.q, self.epsilon)?)
    }

    pub fn params(&self, n: usize) -> anyhow::Result<SirParams> {
        Ok(SirParams::homogeneous(n, self.tau, self.gamma)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    #[default]
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GameSection {
    pub k: f64,
    pub rounds: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Starting level of every node.
    pub gamma0: f64,
    pub mode: Mode,
    pub update: UpdateRule,
}

impl Default for GameSection {
    fn default() -> Self {
        GameSection {
            k: DEFAULT_K,
            rounds: DEFAULT_ROUNDS,
            tolerance: None,
            gamma0: 0.1,
            mode: Mode::MonteCarlo,
            update: UpdateRule::Simultaneous,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AllocationSection {
    pub beta: f64,
    /// Also evaluate upper allocation restricted to this top fraction.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fraction: Option<f64>,
}

impl Default for AllocationSection {
    fn default() -> Self {
        AllocationSection { beta: 5.0, fraction: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseSection {
    pub n: usize,
    pub p: Vec<f64>,
}

impl Default for PhaseSection {
    fn default() -> Self {
        PhaseSection {
            n: 1000,
            p: vec![0.010, 0.011, 0.012, 0.013, 0.014],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeterogeneitySection {
    pub n: usize,
    /// Attachment count of the scale-free network.
    pub m: usize,
    /// Link probability of the random network.
    pub p: f64,
}

impl Default for HeterogeneitySection {
    fn default() -> Self {
        HeterogeneitySection { n: 1000, m: 5, p: 0.01 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Repeated removal of the highest edge-betweenness edges.
    #[default]
    Guided,
    /// Fresh uniformly random removals per run, scanned over fractions.
    Random,
    /// Repeated splitting of the most central node.
    Split,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InterventionSection {
    pub method: Method,
    pub centrality: CentralityKind,
    pub variant: SplitVariant,
    /// Edges removed per step; 1% of the edges when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub batch: Option<usize>,
    pub confirm_runs: u64,
    pub max_splits: usize,
    pub step: f64,
    pub max_fraction: f64,
    pub path_samples: usize,
}

impl Default for InterventionSection {
    fn default() -> Self {
        InterventionSection {
            method: Method::Guided,
            centrality: CentralityKind::Degree,
            variant: SplitVariant::Standard,
            batch: None,
            confirm_runs: 100_000,
            max_splits: 500,
            step: 0.01,
            max_fraction: 0.9,
            path_samples: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PremiumSection {
    pub measure: RiskMeasure,
    pub alpha: f64,
    /// Uniform base premium per node before the surcharge.
    pub base: f64,
    /// Surcharge pool; the risk measure of the pandemic loss when absent.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pool: Option<f64>,
}

impl Default for PremiumSection {
    fn default() -> Self {
        PremiumSection {
            measure: RiskMeasure::ES,
            alpha: 0.99,
            base: 0.0,
            pool: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleSection {
    pub graphs: usize,
    pub max_nodes: usize,
    /// Allowed deviation in binomial standard errors.
    pub sigmas: f64,
}

impl Default for OracleSection {
    fn default() -> Self {
        OracleSection {
            graphs: 20,
            max_nodes: 4,
            sigmas: 4.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: Kind,
    pub seed: Option<Seed>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub graph: Option<GraphSpec>,
    #[serde(default)]
    pub epidemic: EpidemicSection,
    #[serde(default)]
    pub game: GameSection,
    #[serde(default)]
    pub allocation: AllocationSection,
    #[serde(default)]
    pub phase_transition: PhaseSection,
    #[serde(default)]
    pub heterogeneity: HeterogeneitySection,
    #[serde(default)]
    pub intervention: InterventionSection,
    #[serde(default)]
    pub premiums: PremiumSection,
    #[serde(default)]
    pub oracle_suite: OracleSection,
}

impl ExperimentConfig {
    pub fn new(kind: Kind) -> Self {
        ExperimentConfig {
            kind,
            seed: None,
            runs: None,
            out: None,
            graph: None,
            epidemic: EpidemicSection::default(),
            game: GameSection::default(),
            allocation: AllocationSection::default(),
            phase_transition: PhaseSection::default(),
            heterogeneity: HeterogeneitySection::default(),
            intervention: InterventionSection::default(),
            premiums: PremiumSection::default(),
            oracle_suite: OracleSection::default(),
        }
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: ExperimentConfig = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        // Relative edge-list paths are resolved against the config file.
        if let Some(GraphSpec { path: Some(p), .. }) = cfg.graph.as_mut() {
            if p.is_relative() {
                if let Some(dir) = path.parent() {
                    *p = dir.join(&*p);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> anyhow::Result<String> {
        Ok(toml::to_string(self)?)
    }

    pub fn seed(&self) -> Seed {
        self.seed.expect("validated config has a seed")
    }

    pub fn runs(&self) -> u64 {
        self.runs.unwrap_or_else(|| self.kind.default_runs())
    }

    /// Runs behind every estimate; zero when the game uses exact probabilities.
    pub fn effective_runs(&self) -> u64 {
        match (self.kind, self.game.mode) {
            (Kind::Game | Kind::Allocation, Mode::Exact) => 0,
            _ => self.runs(),
        }
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("cyberlab-out"))
    }

    pub fn game_config(&self) -> GameConfig {
        let mode = match self.game.mode {
            Mode::Exact => ProbabilityMode::Exact,
            Mode::MonteCarlo => ProbabilityMode::MonteCarlo {
                runs: self.runs(),
                seed: self.seed(),
            },
        };
        GameConfig {
            k: self.game.k,
            rounds: self.game.rounds,
            tolerance: self.game.tolerance,
            update: self.game.update,
            ..GameConfig::new(self.epidemic.tau, mode)
        }
    }

    pub fn intervention_config(&self) -> anyhow::Result<InterventionConfig> {
        Ok(InterventionConfig {
            criterion: self.epidemic.criterion()?,
            check_runs: self.runs(),
            confirm_runs: self.intervention.confirm_runs,
            ..InterventionConfig::new(self.epidemic.tau, self.epidemic.gamma, self.seed())
        })
    }

    pub fn risk_spec(&self) -> anyhow::Result<RiskSpec> {
        Ok(RiskSpec::new(self.premiums.measure, self.premiums.alpha)?)
    }

    /// Checks everything that can be checked before any simulation starts.
    pub fn validate(&self) -> anyhow::Result<()> {
        ensure!(self.seed.is_some(), "a master seed is required (`seed = …` or --seed)");
        ensure!(self.kind == Kind::Generate || self.runs() > 0, "runs must be positive");
        self.epidemic.criterion()?;
        self.epidemic.params(1)?;
        if self.kind.needs_graph() {
            let spec = self.graph.as_ref().context("a [graph] section (or --graph) is required")?;
            if spec.model == Model::Fixture {
                let name = spec.name.as_deref().context("graph.name is required for fixture")?;
                name.parse::<Fixture>()?;
            }
            ensure!(
                spec.model == Model::EdgeList || spec.model == Model::Fixture || spec.n.is_some(),
                "graph.n is required for this model"
            );
            if let Some(p) = spec.p {
                ensure!((0.0..=1.0).contains(&p), "graph.p must lie in [0, 1]");
            }
        }
        match self.kind {
            Kind::Game | Kind::Allocation => {
                self.game_config().validate()?;
                ensure!(self.game.gamma0 > 0.0, "game.gamma0 must be positive");
                if self.kind == Kind::Allocation {
                    ensure!(self.allocation.beta > 0.0, "allocation.beta must be positive");
                    if let Some(f) = self.allocation.fraction {
                        ensure!(f > 0.0 && f <= 1.0, "allocation.fraction must lie in (0, 1]");
                        targeted_count(f, 1);
                    }
                }
            }
            Kind::PhaseTransition => {
                ensure!(!self.phase_transition.p.is_empty(), "phase_transition.p is empty");
                ensure!(
                    self.phase_transition.p.iter().all(|p| (0.0..=1.0).contains(p)),
                    "phase_transition.p values must lie in [0, 1]"
                );
            }
            Kind::Heterogeneity => {
                let h = &self.heterogeneity;
                ensure!(h.m >= 1 && h.m < h.n, "heterogeneity.m must lie in [1, n)");
                ensure!((0.0..=1.0).contains(&h.p), "heterogeneity.p must lie in [0, 1]");
            }
            Kind::EdgeRemoval | Kind::NodeSplitting | Kind::Premiums => {
                let iv = &self.intervention;
                ensure!(iv.confirm_runs > 0, "intervention.confirm_runs must be positive");
                ensure!(iv.batch != Some(0), "intervention.batch must be positive");
                ensure!(iv.step > 0.0 && iv.step <= 1.0, "intervention.step must lie in (0, 1]");
                ensure!(
                    (0.0..=1.0).contains(&iv.max_fraction),
                    "intervention.max_fraction must lie in [0, 1]"
                );
                match (self.kind, iv.method) {
                    (Kind::EdgeRemoval, Method::Split) => bail!("edge_removal needs method guided or random"),
                    (Kind::NodeSplitting, m) if m != Method::Split => {
                        bail!("node_splitting needs method = \"split\"")
                    }
                    (Kind::Premiums, Method::Random) => bail!("premiums need method guided or split"),
                    _ => {}
                }
                if iv.method == Method::Split {
                    ensure!(
                        iv.centrality != CentralityKind::Investment,
                        "splitting is driven by degree or betweenness"
                    );
                }
                if self.kind == Kind::Premiums {
                    self.risk_spec()?;
                    ensure!(self.premiums.base >= 0.0, "premiums.base must be non-negative");
                    if let Some(pool) = self.premiums.pool {
                        ensure!(pool >= 0.0, "premiums.pool must be non-negative");
                    }
                }
            }
            Kind::OracleSuite => {
                let o = &self.oracle_suite;
                ensure!(o.graphs > 0, "oracle_suite.graphs must be positive");
                ensure!(
                    (1..=cyberlab::epidemic::MAX_EXACT_NODES).contains(&o.max_nodes),
                    "oracle_suite.max_nodes must lie in [1, {}]",
                    cyberlab::epidemic::MAX_EXACT_NODES
                );
                ensure!(o.sigmas > 0.0, "oracle_suite.sigmas must be positive");
            }
            Kind::Generate | Kind::Simulate => {}
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_shorthand() {
        let s: GraphSpec = "ba:100:3".parse().unwrap();
        assert_eq!((s.model, s.n, s.m), (Model::Ba, Some(100), Some(3)));
        assert_eq!(s.build(1).unwrap().node_count(), 100);
        let s: GraphSpec = "fixture:tree8".parse().unwrap();
        assert_eq!(s.build(1).unwrap().edge_count(), 7);
        assert_eq!("path:2".parse::<GraphSpec>().unwrap().build(0).unwrap().edge_count(), 1);
        assert!("er:10".parse::<GraphSpec>().is_err());
    }

    #[test]
    fn toml_round_trip() {
        let text = r#"
            kind = "edge_removal"
            seed = 3
            runs = 500
            [graph]
            model = "ba"
            n = 200
            m = 3
            [intervention]
            method = "random"
            step = 0.05
        "#;
        let cfg: ExperimentConfig = toml::from_str(text).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.intervention.method, Method::Random);
        assert_eq!(cfg.epidemic, EpidemicSection::default());
        let again: ExperimentConfig = toml::from_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let missing_seed: ExperimentConfig = toml::from_str("kind = \"oracle_suite\"").unwrap();
        assert!(missing_seed.validate().is_err());
        assert!(toml::from_str::<ExperimentConfig>("kind = \"game\"\nseed = 1\nbogus = 2").is_err());
        let mut cfg = ExperimentConfig::new(Kind::Game);
        cfg.seed = Some(1);
        assert!(cfg.validate().is_err(), "game without a graph");
        cfg.graph = Some("path:2".parse().unwrap());
        cfg.validate().unwrap();
        cfg.epidemic.tau = -1.0;
        assert!(cfg.validate().is_err());
    }
}
