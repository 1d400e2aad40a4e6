//! Layered configuration: defaults, then a TOML file, then command-line
//! overrides.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use lexgraph::corpus::{Direction, SplitPlan, TemporalPool};
use lexgraph::graph::OrientationMode;
use lexgraph::rng::derive_seed;
use lexgraph::sage::TrainConfig;
use lexgraph::tasks::RegimeTag;

/// Fully resolved settings for one command invocation. Serialized
/// canonically for the manifest's config hash.
#[derive(Clone, Debug, Serialize)]
pub struct Config {
    pub corpus: Option<PathBuf>,
    pub seed: u64,
    pub mode: OrientationMode,
    pub include_time: bool,
    pub include_acts: bool,
    pub regime: RegimeTag,
    pub deterministic: bool,
    pub out: PathBuf,
    pub features: FeatureSettings,
    pub train: TrainConfig,
    pub split: SplitSettings,
    pub sweep: SweepSettings,
    pub fetch: FetchSettings,
    pub shuffle: ShuffleSettings,
}

#[derive(Clone, Debug, Serialize)]
pub struct FeatureSettings {
    pub dim: usize,
    pub vanilla: Option<PathBuf>,
    pub pretrained: Option<PathBuf>,
    /// Seed of the random-regime stream; defaults to a value derived from
    /// the master seed.
    pub random_seed: u64,
    /// Seed of fallback rows; defaults to a value derived from the master
    /// seed.
    pub fallback_seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SplitSettings {
    pub kind: SplitKind,
    pub direction: Direction,
    pub cutoff: i32,
    pub pool: TemporalPool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitKind {
    Simple,
    Temporal,
}

impl SplitSettings {
    pub fn plan(&self) -> SplitPlan {
        match self.kind {
            SplitKind::Simple => SplitPlan::Simple,
            SplitKind::Temporal => SplitPlan::Temporal {
                direction: self.direction,
                cutoff_year: self.cutoff,
                pool: self.pool,
            },
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepSettings {
    pub cutoffs: Vec<i32>,
    pub direction: Direction,
}

#[derive(Clone, Debug, Serialize)]
pub struct FetchSettings {
    pub endpoint: Option<String>,
    pub concurrency: usize,
    pub attempts: u32,
    pub backoff_ms: u64,
    pub timeout_ms: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ShuffleSettings {
    pub fraction: f64,
    pub control_seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        let seed = 0;
        Config {
            corpus: None,
            seed,
            mode: OrientationMode::Directed,
            include_time: false,
            include_acts: false,
            regime: RegimeTag::Random,
            deterministic: false,
            out: PathBuf::from("runs/latest"),
            features: FeatureSettings {
                dim: lexgraph::features::DEFAULT_RANDOM_DIM,
                vanilla: None,
                pretrained: None,
                random_seed: derive_seed(seed, "features/random"),
                fallback_seed: derive_seed(seed, "features/fallback"),
            },
            train: TrainConfig::default(),
            split: SplitSettings {
                kind: SplitKind::Simple,
                direction: Direction::Forward,
                cutoff: 1980,
                pool: TemporalPool::AllLabeled,
            },
            sweep: SweepSettings {
                // 5-year steps over the labeled corpus span.
                cutoffs: (0..13).map(|k| 1956 + 5 * k).collect(),
                direction: Direction::Forward,
            },
            fetch: FetchSettings {
                endpoint: None,
                concurrency: 4,
                attempts: 3,
                backoff_ms: 1000,
                timeout_ms: 30_000,
            },
            shuffle: ShuffleSettings {
                fraction: 0.5,
                control_seed: derive_seed(seed, "shuffle/control"),
            },
        }
    }
}

/// The TOML file schema; every field optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    corpus: Option<PathBuf>,
    seed: Option<u64>,
    mode: Option<String>,
    time: Option<bool>,
    acts: Option<bool>,
    regime: Option<String>,
    deterministic: Option<bool>,
    out: Option<PathBuf>,
    #[serde(default)]
    features: FileFeatures,
    #[serde(default)]
    train: FileTrain,
    #[serde(default)]
    split: FileSplit,
    #[serde(default)]
    sweep: FileSweep,
    #[serde(default)]
    fetch: FileFetch,
    #[serde(default)]
    shuffle: FileShuffle,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFeatures {
    dim: Option<usize>,
    vanilla: Option<PathBuf>,
    pretrained: Option<PathBuf>,
    random_seed: Option<u64>,
    fallback_seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileTrain {
    epochs: Option<usize>,
    learning_rate: Option<f64>,
    hidden_dim: Option<usize>,
    depth: Option<usize>,
    l2: Option<f64>,
    negative_ratio: Option<usize>,
    neighbor_fanout: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSplit {
    kind: Option<String>,
    direction: Option<String>,
    cutoff: Option<i32>,
    pool: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileSweep {
    cutoffs: Option<Vec<i32>>,
    direction: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileFetch {
    endpoint: Option<String>,
    concurrency: Option<usize>,
    attempts: Option<u32>,
    backoff_ms: Option<u64>,
    timeout_ms: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileShuffle {
    fraction: Option<f64>,
    control_seed: Option<u64>,
}

pub fn parse_mode(s: &str) -> Result<OrientationMode, String> {
    match s {
        "directed" => Ok(OrientationMode::Directed),
        "rev" | "rev_directed" => Ok(OrientationMode::RevDirected),
        "undirected" => Ok(OrientationMode::Undirected),
        other => Err(format!(
            "unknown mode {other:?} (expected directed, rev, or undirected)"
        )),
    }
}

pub fn parse_direction(s: &str) -> Result<Direction, String> {
    match s {
        "forward" => Ok(Direction::Forward),
        "reverse" => Ok(Direction::Reverse),
        other => Err(format!(
            "unknown direction {other:?} (expected forward or reverse)"
        )),
    }
}

pub fn parse_pool(s: &str) -> Result<TemporalPool, String> {
    match s {
        "all" | "all_labeled" => Ok(TemporalPool::AllLabeled),
        "train_hints" | "train_hints_only" => Ok(TemporalPool::TrainHintsOnly),
        other => Err(format!(
            "unknown pool {other:?} (expected all_labeled or train_hints_only)"
        )),
    }
}

fn parse_split_kind(s: &str) -> Result<SplitKind, String> {
    match s {
        "simple" => Ok(SplitKind::Simple),
        "temporal" => Ok(SplitKind::Temporal),
        other => Err(format!(
            "unknown split kind {other:?} (expected simple or temporal)"
        )),
    }
}

/// Command-line values that override file and default settings.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub corpus: Option<PathBuf>,
    pub seed: Option<u64>,
    pub mode: Option<OrientationMode>,
    pub include_time: Option<bool>,
    pub include_acts: Option<bool>,
    pub regime: Option<RegimeTag>,
    pub deterministic: bool,
    pub out: Option<PathBuf>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub hidden_dim: Option<usize>,
    pub depth: Option<usize>,
    pub l2: Option<f64>,
    pub negative_ratio: Option<usize>,
    pub neighbor_fanout: Option<usize>,
    pub feature_dim: Option<usize>,
    pub vanilla: Option<PathBuf>,
    pub pretrained: Option<PathBuf>,
    pub split_kind: Option<SplitKind>,
    pub direction: Option<Direction>,
    pub cutoff: Option<i32>,
    pub pool: Option<TemporalPool>,
    pub cutoffs: Option<Vec<i32>>,
    pub endpoint: Option<String>,
    pub fraction: Option<f64>,
    pub control_seed: Option<u64>,
}

/// Resolve an effective configuration: defaults, then `path` (if given),
/// then `over`. Seed-derived defaults track whichever seed wins.
pub fn resolve(path: Option<&Path>, over: &Overrides) -> Result<Config> {
    let file: FileConfig = match path {
        None => FileConfig::default(),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("reading config {}", p.display()))?;
            toml::from_str(&text).with_context(|| format!("parsing config {}", p.display()))?
        }
    };

    let mut config = Config::default();
    let seed = over.seed.or(file.seed).unwrap_or(config.seed);
    config.seed = seed;
    config.train.seed = seed;
    config.features.random_seed = derive_seed(seed, "features/random");
    config.features.fallback_seed = derive_seed(seed, "features/fallback");
    config.shuffle.control_seed = derive_seed(seed, "shuffle/control");

    config.corpus = over.corpus.clone().or(file.corpus);
    if let Some(mode) = &file.mode {
        config.mode = parse_mode(mode).map_err(anyhow::Error::msg)?;
    }
    if let Some(time) = file.time {
        config.include_time = time;
    }
    if let Some(acts) = file.acts {
        config.include_acts = acts;
    }
    if let Some(regime) = &file.regime {
        config.regime = regime.parse().map_err(anyhow::Error::msg)?;
    }
    if let Some(deterministic) = file.deterministic {
        config.deterministic = deterministic;
    }
    if let Some(out) = file.out {
        config.out = out;
    }

    let f = file.features;
    if let Some(dim) = f.dim {
        config.features.dim = dim;
    }
    config.features.vanilla = f.vanilla;
    config.features.pretrained = f.pretrained;
    if let Some(s) = f.random_seed {
        config.features.random_seed = s;
    }
    if let Some(s) = f.fallback_seed {
        config.features.fallback_seed = s;
    }

    let t = file.train;
    if let Some(v) = t.epochs {
        config.train.epochs = v;
    }
    if let Some(v) = t.learning_rate {
        config.train.learning_rate = v;
    }
    if let Some(v) = t.hidden_dim {
        config.train.hidden_dim = v;
    }
    if let Some(v) = t.depth {
        config.train.depth = v;
    }
    if let Some(v) = t.l2 {
        config.train.l2 = v;
    }
    if let Some(v) = t.negative_ratio {
        config.train.negative_ratio = v;
    }
    if let Some(v) = t.neighbor_fanout {
        config.train.neighbor_fanout = if v == 0 { None } else { Some(v) };
    }

    let s = file.split;
    if let Some(kind) = &s.kind {
        config.split.kind = parse_split_kind(kind).map_err(anyhow::Error::msg)?;
    }
    if let Some(direction) = &s.direction {
        config.split.direction = parse_direction(direction).map_err(anyhow::Error::msg)?;
    }
    if let Some(cutoff) = s.cutoff {
        config.split.cutoff = cutoff;
    }
    if let Some(pool) = &s.pool {
        config.split.pool = parse_pool(pool).map_err(anyhow::Error::msg)?;
    }

    let w = file.sweep;
    if let Some(cutoffs) = w.cutoffs {
        config.sweep.cutoffs = cutoffs;
    }
    if let Some(direction) = &w.direction {
        config.sweep.direction = parse_direction(direction).map_err(anyhow::Error::msg)?;
    }

    let fe = file.fetch;
    config.fetch.endpoint = fe.endpoint;
    if let Some(v) = fe.concurrency {
        config.fetch.concurrency = v;
    }
    if let Some(v) = fe.attempts {
        config.fetch.attempts = v;
    }
    if let Some(v) = fe.backoff_ms {
        config.fetch.backoff_ms = v;
    }
    if let Some(v) = fe.timeout_ms {
        config.fetch.timeout_ms = v;
    }

    let sh = file.shuffle;
    if let Some(v) = sh.fraction {
        config.shuffle.fraction = v;
    }
    if let Some(v) = sh.control_seed {
        config.shuffle.control_seed = v;
    }

    // Command-line overrides win.
    if let Some(v) = &over.out {
        config.out = v.clone();
    }
    if let Some(v) = over.mode {
        config.mode = v;
    }
    if let Some(v) = over.include_time {
        config.include_time = v;
    }
    if let Some(v) = over.include_acts {
        config.include_acts = v;
    }
    if let Some(v) = over.regime {
        config.regime = v;
    }
    if over.deterministic {
        config.deterministic = true;
    }
    if let Some(v) = over.epochs {
        config.train.epochs = v;
    }
    if let Some(v) = over.learning_rate {
        config.train.learning_rate = v;
    }
    if let Some(v) = over.hidden_dim {
        config.train.hidden_dim = v;
    }
    if let Some(v) = over.depth {
        config.train.depth = v;
    }
    if let Some(v) = over.l2 {
        config.train.l2 = v;
    }
    if let Some(v) = over.negative_ratio {
        config.train.negative_ratio = v;
    }
    if let Some(v) = over.neighbor_fanout {
        config.train.neighbor_fanout = if v == 0 { None } else { Some(v) };
    }
    if let Some(v) = over.feature_dim {
        config.features.dim = v;
    }
    if let Some(v) = &over.vanilla {
        config.features.vanilla = Some(v.clone());
    }
    if let Some(v) = &over.pretrained {
        config.features.pretrained = Some(v.clone());
    }
    if let Some(v) = over.split_kind {
        config.split.kind = v;
    }
    if let Some(v) = over.direction {
        config.split.direction = v;
        config.sweep.direction = v;
    }
    if let Some(v) = over.cutoff {
        config.split.cutoff = v;
    }
    if let Some(v) = over.pool {
        config.split.pool = v;
    }
    if let Some(v) = &over.cutoffs {
        config.sweep.cutoffs = v.clone();
    }
    if let Some(v) = &over.endpoint {
        config.fetch.endpoint = Some(v.clone());
    }
    if let Some(v) = over.fraction {
        config.shuffle.fraction = v;
    }
    if let Some(v) = over.control_seed {
        config.shuffle.control_seed = v;
    }

    if config.train.epochs == 0 || config.train.hidden_dim == 0 || config.train.depth == 0 {
        bail!("epochs, hidden_dim and depth must be positive");
    }
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    #[test]
    fn precedence_cli_over_file_over_default() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            "seed = 9\nmode = \"undirected\"\n[train]\nepochs = 33\n"
        )
        .unwrap();
        let over = Overrides {
            epochs: Some(44),
            ..Overrides::default()
        };
        let config = resolve(Some(f.path()), &over).unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.mode, OrientationMode::Undirected);
        assert_eq!(config.train.epochs, 44);
        // Untouched values keep defaults.
        assert_eq!(config.train.learning_rate, 0.01);
    }

    #[test]
    fn seed_derived_defaults_follow_master_seed() {
        let a = resolve(None, &Overrides { seed: Some(1), ..Overrides::default() }).unwrap();
        let b = resolve(None, &Overrides { seed: Some(2), ..Overrides::default() }).unwrap();
        assert_ne!(a.features.random_seed, b.features.random_seed);
        assert_eq!(a.train.seed, 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(f, "not_a_key = 1").unwrap();
        assert!(resolve(Some(f.path()), &Overrides::default()).is_err());
    }
}
