//! Experiment configuration: TOML file, command-line flags and defaults,
//! merged with flag > file > default precedence.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use trustweave::harness::{build_platoon_scenario, GraphSpec, PlatoonConfig, Scenario};
use trustweave::protocol::{AdversaryStrategy, ConfidenceSchedule};
use trustweave::trust::{TrustDist, TrustModel};

use crate::error::CliError;

pub const SEED_ENV: &str = "TRUSTWEAVE_SEED";

const DEFAULT_TRIALS: usize = 100;
const DEFAULT_SCHEDULE: &str = "exp:0.9,0.05";
const DEFAULT_OUT: &str = "trustweave-out";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Adversary as written in config files; agent ids are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AdversaryFile {
    Constant { value: f64 },
    BoundedRandom { eta: f64 },
    Replay { source: usize, lag: usize },
}

impl AdversaryFile {
    fn resolve(self) -> Result<AdversaryStrategy, CliError> {
        Ok(match self {
            AdversaryFile::Constant { value } => AdversaryStrategy::Constant { value },
            AdversaryFile::BoundedRandom { eta } => AdversaryStrategy::BoundedRandom { eta },
            AdversaryFile::Replay { source, lag } => AdversaryStrategy::Replay {
                source: source.checked_sub(1).ok_or_else(|| CliError::Config("agent ids are 1-based".into()))?,
                lag,
            },
        })
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioFile {
    /// `platoon` or a path to a graph file.
    pub source: Option<String>,
    pub x0: Option<Vec<f64>>,
    pub eta: Option<f64>,
    pub speed_a: Option<f64>,
    pub speed_b: Option<f64>,
    /// Platoon only: 1-based legitimate targets of each malicious vehicle.
    pub attackers: Option<Vec<Vec<usize>>>,
    /// Platoon only: 1-based bidirectional links between the platoons.
    pub cross_links: Option<Vec<[usize; 2]>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrustFile {
    pub legit: Option<TrustDist>,
    pub malicious: Option<TrustDist>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputFile {
    pub dir: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoundsSection {
    /// Plug-in classification times.
    pub t_f: usize,
    pub t_f_m: usize,
    pub t_max: usize,
    pub epsilons: Vec<f64>,
    pub gammas: Vec<f64>,
    pub expected_at: Vec<usize>,
    pub pmf_max_k: usize,
    pub asymptotes: bool,
}

impl Default for BoundsSection {
    fn default() -> Self {
        Self {
            t_f: 50,
            t_f_m: 50,
            t_max: 500,
            epsilons: vec![1.0, 5.0, 10.0],
            gammas: Vec::new(),
            expected_at: vec![100, 500],
            pmf_max_k: 100,
            asymptotes: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub c: f64,
    pub gammas: Vec<f64>,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { c: 0.9, gammas: vec![0.01, 0.05, 0.2, 1.0] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub c: f64,
    pub gamma: f64,
    pub t0: usize,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self { c: 0.9, gamma: 0.05, t0: 50 }
    }
}

/// Config file contents; every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub horizon: Option<usize>,
    pub schedule: Option<String>,
    pub scenario: ScenarioFile,
    pub trust: TrustFile,
    pub adversary: Option<AdversaryFile>,
    pub output: OutputFile,
    pub bounds: Option<BoundsSection>,
    pub sweep: Option<SweepSection>,
    pub compare: Option<CompareSection>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("invalid config {}: {e}", path.display())))
    }
}

/// Flags shared by every subcommand.
#[derive(Debug, Default, Clone, clap::Args)]
pub struct CommonArgs {
    /// TOML experiment config.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `platoon` or a path to a graph JSON file.
    #[arg(long)]
    pub scenario: Option<String>,
    /// exp:c,gamma | step:T0 | const:lambda | zero
    #[arg(long)]
    pub schedule: Option<String>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Master seed; falls back to the config file, then TRUSTWEAVE_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Format of the per-round series artifact.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads; 0 or absent uses every available core.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolvedScenario {
    /// `platoon` or the graph file path.
    pub source: String,
    pub graph: GraphSpec,
    pub x0: Vec<f64>,
    pub eta: f64,
    pub trust: TrustModel,
    pub adversary: AdversaryStrategy,
}

/// Fully resolved configuration, echoed into every artifact directory.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub command: String,
    pub seed: u64,
    pub trials: usize,
    pub horizon: usize,
    pub schedule: ConfidenceSchedule,
    pub scenario: ResolvedScenario,
    pub out: PathBuf,
    pub format: Format,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub compare: Option<CompareSection>,
    #[serde(skip)]
    pub built: Option<Scenario>,
}

impl Resolved {
    pub fn scenario(&self) -> &Scenario {
        self.built.as_ref().expect("scenario built during resolution")
    }
}

fn one_based(id: usize) -> Result<usize, CliError> {
    id.checked_sub(1).ok_or_else(|| CliError::Config("agent ids are 1-based".into()))
}

pub fn resolve(command: &str, args: &CommonArgs, env_seed: Option<String>) -> Result<Resolved, CliError> {
    let file = match &args.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    // paths inside the file are relative to the file
    let base = args.config.as_ref().and_then(|p| p.parent().map(Path::to_path_buf)).unwrap_or_default();

    let env_seed = env_seed
        .map(|s| {
            s.trim().parse::<u64>().map_err(|_| CliError::Config(format!("{SEED_ENV} must be an integer, got `{s}`")))
        })
        .transpose()?;
    let seed = args.seed.or(file.seed).or(env_seed).unwrap_or(0);
    let trials = args.trials.or(file.trials).unwrap_or(DEFAULT_TRIALS);
    if trials == 0 {
        return Err(CliError::Config("trials must be at least 1".into()));
    }
    let schedule_text = args.schedule.clone().or(file.schedule).unwrap_or_else(|| DEFAULT_SCHEDULE.into());
    let schedule: ConfidenceSchedule = schedule_text.parse()?;

    let defaults = PlatoonConfig::default();
    let horizon = args.horizon.or(file.horizon).unwrap_or(defaults.horizon);
    let trust = TrustModel::new(
        file.trust.legit.unwrap_or(defaults.trust.legit),
        file.trust.malicious.unwrap_or(defaults.trust.malicious),
    )?;
    let eta = file.scenario.eta.unwrap_or(defaults.eta);
    let adversary = match file.adversary {
        Some(a) => a.resolve()?,
        None => AdversaryStrategy::Constant { value: eta },
    };

    let (source, source_from_file) = match (&args.scenario, &file.scenario.source) {
        (Some(s), _) => (s.clone(), false),
        (None, Some(s)) => (s.clone(), true),
        (None, None) => ("platoon".to_string(), false),
    };
    let sc = &file.scenario;
    let built = if source == "platoon" {
        let mut cfg = PlatoonConfig { eta, horizon, trust, adversary, ..PlatoonConfig::default() };
        cfg.speed_a = sc.speed_a.unwrap_or(cfg.speed_a);
        cfg.speed_b = sc.speed_b.unwrap_or(cfg.speed_b);
        if let Some(att) = &sc.attackers {
            cfg.attackers = att
                .iter()
                .map(|targets| targets.iter().map(|&t| one_based(t)).collect::<Result<_, _>>())
                .collect::<Result<_, _>>()?;
        }
        if let Some(links) = &sc.cross_links {
            cfg.cross_links =
                links.iter().map(|&[a, b]| Ok((one_based(a)?, one_based(b)?))).collect::<Result<_, CliError>>()?;
        }
        if sc.x0.is_some() {
            return Err(CliError::Config("the platoon scenario takes speed_a and speed_b, not x0".into()));
        }
        build_platoon_scenario(&cfg)?
    } else {
        let path = if source_from_file { base.join(&source) } else { PathBuf::from(&source) };
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read graph file {}: {e}", path.display())))?;
        let spec: GraphSpec = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("invalid graph file {}: {e}", path.display())))?;
        let graph = spec.to_graph()?;
        let x0 = sc
            .x0
            .clone()
            .ok_or_else(|| CliError::Config(format!("scenario.x0 is required for graph file {}", path.display())))?;
        Scenario::new(graph, trust, x0, adversary, eta, horizon)?
    };

    Ok(Resolved {
        command: command.to_string(),
        seed,
        trials,
        horizon,
        schedule,
        scenario: ResolvedScenario {
            source,
            graph: GraphSpec::from_graph(&built.graph),
            x0: built.x0.clone(),
            eta,
            trust,
            adversary: built.adversary,
        },
        out: args.out.clone().or(file.output.dir.map(|d| base.join(d))).unwrap_or_else(|| DEFAULT_OUT.into()),
        format: args.format.or(file.output.format).unwrap_or(Format::Csv),
        bounds: (command == "bounds").then(|| file.bounds.unwrap_or_default()),
        sweep: (command == "sweep").then(|| file.sweep.unwrap_or_default()),
        compare: (command == "compare").then(|| file.compare.unwrap_or_default()),
        built: Some(built),
    })
}
