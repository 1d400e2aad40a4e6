//! `lexgraph`: build legal citation graphs, train and evaluate graph models
//! for judgment and citation link prediction, and run the fairness
//! redaction pipeline.

mod artifacts;
mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{parse_direction, parse_mode, parse_pool, Overrides, SplitKind};
use error::CliError;

#[derive(Parser)]
#[command(name = "lexgraph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Debug)]
struct Common {
    /// TOML configuration file; command-line flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Edge orientation: directed, rev, or undirected.
    #[arg(long, value_parser = parse_mode)]
    mode: Option<lexgraph::graph::OrientationMode>,
    /// Add one time node per decision year.
    #[arg(long, overrides_with = "no_time")]
    time: bool,
    #[arg(long = "no-time", hide = true)]
    no_time: bool,
    /// Add one act node per referenced statute.
    #[arg(long, overrides_with = "no_acts")]
    acts: bool,
    #[arg(long = "no-acts", hide = true)]
    no_acts: bool,
    /// Feature regime: random, vanilla, pretrained, or hierar.
    #[arg(long, value_parser = clap::builder::ValueParser::new(|s: &str| s.parse::<lexgraph::tasks::RegimeTag>()))]
    regime: Option<lexgraph::tasks::RegimeTag>,
    /// Run directory for artifacts.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Suppress wall-clock fields so repeated runs are byte-identical.
    #[arg(long)]
    deterministic: bool,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    hidden_dim: Option<usize>,
    #[arg(long)]
    depth: Option<usize>,
    #[arg(long)]
    l2: Option<f64>,
    #[arg(long)]
    negative_ratio: Option<usize>,
    /// Neighbors aggregated per node during training (0 = full).
    #[arg(long)]
    fanout: Option<usize>,
    #[arg(long)]
    feature_dim: Option<usize>,
    /// Vanilla embedding file.
    #[arg(long)]
    vanilla_features: Option<PathBuf>,
    /// Pretrained embedding file.
    #[arg(long)]
    pretrained_features: Option<PathBuf>,
}

#[derive(Args, Clone, Debug)]
struct SplitArgs {
    /// Split kind: simple or temporal.
    #[arg(long, value_parser = clap::builder::ValueParser::new(parse_split_kind_arg))]
    split: Option<SplitKind>,
    /// Temporal direction: forward or reverse.
    #[arg(long, value_parser = parse_direction)]
    direction: Option<lexgraph::corpus::Direction>,
    /// Temporal cutoff year.
    #[arg(long)]
    cutoff: Option<i32>,
    /// Temporal pool: all_labeled or train_hints_only.
    #[arg(long, value_parser = parse_pool)]
    pool: Option<lexgraph::corpus::TemporalPool>,
}

fn parse_split_kind_arg(s: &str) -> Result<SplitKind, String> {
    match s {
        "simple" => Ok(SplitKind::Simple),
        "temporal" => Ok(SplitKind::Temporal),
        other => Err(format!("unknown split {other:?}")),
    }
}

#[derive(Subcommand, Clone, Debug)]
enum Command {
    /// Parse a corpus and write a graph checkpoint plus build statistics.
    BuildGraph {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Train a judgment classifier on a graph checkpoint.
    Train {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Evaluate a saved model on a graph checkpoint.
    Eval {
        #[arg(long)]
        graph: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Temporal sweep: one training run per cutoff year.
    Sweep {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Comma-separated cutoff years.
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<i32>>,
        #[arg(long, value_parser = parse_direction)]
        direction: Option<lexgraph::corpus::Direction>,
        /// Temporal pool: all_labeled or train_hints_only.
        #[arg(long, value_parser = parse_pool)]
        pool: Option<lexgraph::corpus::TemporalPool>,
        #[command(flatten)]
        common: Common,
    },
    /// Citation link prediction with temporal edge splits.
    Linkpred {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        cutoffs: Option<Vec<i32>>,
        #[arg(long, value_parser = parse_direction)]
        direction: Option<lexgraph::corpus::Direction>,
        #[command(flatten)]
        common: Common,
    },
    /// Paired clean vs label-shuffled control runs.
    ShuffleControl {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Fraction of training labels replaced by coin flips.
        #[arg(long)]
        fraction: Option<f64>,
        #[arg(long)]
        control_seed: Option<u64>,
        #[command(flatten)]
        split: SplitArgs,
        #[command(flatten)]
        common: Common,
    },
    /// All 48 regime/orientation/characteristic cells.
    Grid {
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Replace pronouns and name spans, writing a redacted corpus.
    Redact {
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Entity spans JSONL file.
        #[arg(long)]
        spans: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fetch cited documents from a remote API (LEXGRAPH_API_TOKEN).
    Fetch {
        /// Document API base URL.
        #[arg(long)]
        endpoint: Option<String>,
        /// File of document ids, one per line.
        #[arg(long)]
        ids: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn flag_pair(on: bool, off: bool) -> Option<bool> {
    match (on, off) {
        (true, _) => Some(true),
        (false, true) => Some(false),
        (false, false) => None,
    }
}

fn overrides(common: &Common, corpus: Option<&PathBuf>, split: Option<&SplitArgs>) -> Overrides {
    let mut over = Overrides {
        corpus: corpus.cloned(),
        seed: common.seed,
        mode: common.mode,
        include_time: flag_pair(common.time, common.no_time),
        include_acts: flag_pair(common.acts, common.no_acts),
        regime: common.regime,
        deterministic: common.deterministic,
        out: common.out.clone(),
        epochs: common.epochs,
        learning_rate: common.learning_rate,
        hidden_dim: common.hidden_dim,
        depth: common.depth,
        l2: common.l2,
        negative_ratio: common.negative_ratio,
        neighbor_fanout: common.fanout,
        feature_dim: common.feature_dim,
        vanilla: common.vanilla_features.clone(),
        pretrained: common.pretrained_features.clone(),
        ..Overrides::default()
    };
    if let Some(split) = split {
        over.split_kind = split.split;
        over.direction = split.direction;
        over.cutoff = split.cutoff;
        over.pool = split.pool;
    }
    over
}

fn run(cli: Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::BuildGraph { corpus, common } => {
            let over = overrides(common, corpus.as_ref(), None);
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_build_graph(&config)
        }
        Command::Train { graph, split, common } => {
            let over = overrides(common, None, Some(split));
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_train(&config, graph)
        }
        Command::Eval {
            graph,
            model,
            split,
            common,
        } => {
            let over = overrides(common, None, Some(split));
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_eval(&config, graph, model)
        }
        Command::Sweep {
            corpus,
            cutoffs,
            direction,
            pool,
            common,
        } => {
            let mut over = overrides(common, corpus.as_ref(), None);
            over.cutoffs = cutoffs.clone();
            over.direction = *direction;
            over.pool = *pool;
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_sweep(&config)
        }
        Command::Linkpred {
            corpus,
            cutoffs,
            direction,
            common,
        } => {
            let mut over = overrides(common, corpus.as_ref(), None);
            over.cutoffs = cutoffs.clone();
            over.direction = *direction;
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_linkpred(&config)
        }
        Command::ShuffleControl {
            corpus,
            fraction,
            control_seed,
            split,
            common,
        } => {
            let mut over = overrides(common, corpus.as_ref(), Some(split));
            over.fraction = *fraction;
            over.control_seed = *control_seed;
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_shuffle_control(&config)
        }
        Command::Grid { corpus, common } => {
            let over = overrides(common, corpus.as_ref(), None);
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_grid(&config)
        }
        Command::Redact { corpus, spans, common } => {
            let over = overrides(common, corpus.as_ref(), None);
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_redact(&config, spans)
        }
        Command::Fetch { endpoint, ids, common } => {
            let mut over = overrides(common, None, None);
            over.endpoint = endpoint.clone();
            let config = config::resolve(common.config.as_deref(), &over)
                .map_err(CliError::validation)?;
            commands::cmd_fetch(&config, ids)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code())
        }
    }
}
