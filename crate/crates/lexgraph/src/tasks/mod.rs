//! Experiment drivers: node classification runs, temporal sweeps, link
//! prediction with temporal edge splits, the label-shuffle control, and the
//! full regime/orientation/characteristic grid.

mod classify;
mod grid;
mod link;
mod sweep;

pub use classify::{
    evaluate_node_model, run_label_shuffle_control, run_node_classification, NodeRunArtifacts,
};
pub use grid::{run_grid, GridCell, GridReport};
pub use link::{run_link_prediction, split_citation_edges, EdgeSplit, LinkOutcome};
pub use sweep::{run_temporal_sweep, SweepOutcome};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{CorpusError, SplitPlan, YearRange};
use crate::features::{
    FeatureError, FeatureProvider, FeatureTable, ResolvedRegime, DEFAULT_RANDOM_DIM,
};
use crate::graph::OrientationMode;
use crate::metrics::{MetricsError, RocPoint};
use crate::sage::{SageError, TrainConfig};

#[derive(Debug, Error)]
pub enum TaskError {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Sage(#[from] SageError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error("{0}")]
    Invalid(String),
}

/// Embedding regime selector, resolved against a [`FeatureCatalog`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeTag {
    Random,
    Vanilla,
    Pretrained,
    Hierar,
}

impl RegimeTag {
    pub const ALL: [RegimeTag; 4] = [
        RegimeTag::Vanilla,
        RegimeTag::Pretrained,
        RegimeTag::Random,
        RegimeTag::Hierar,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RegimeTag::Random => "random",
            RegimeTag::Vanilla => "vanilla",
            RegimeTag::Pretrained => "pretrained",
            RegimeTag::Hierar => "hierar",
        }
    }
}

impl std::str::FromStr for RegimeTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "random" => Ok(RegimeTag::Random),
            "vanilla" => Ok(RegimeTag::Vanilla),
            "pretrained" => Ok(RegimeTag::Pretrained),
            "hierar" => Ok(RegimeTag::Hierar),
            other => Err(format!("unknown regime {other:?}")),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    NodeClassification,
    LinkPrediction,
}

impl TaskKind {
    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::NodeClassification => "node_classification",
            TaskKind::LinkPrediction => "link_prediction",
        }
    }
}

/// Everything one experiment cell needs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub regime: RegimeTag,
    pub mode: OrientationMode,
    pub include_time: bool,
    pub include_acts: bool,
    pub split: SplitPlan,
    pub task: TaskKind,
    pub train: TrainConfig,
}

impl ExperimentSpec {
    pub fn simple(regime: RegimeTag, mode: OrientationMode) -> Self {
        ExperimentSpec {
            regime,
            mode,
            include_time: false,
            include_acts: false,
            split: SplitPlan::Simple,
            task: TaskKind::NodeClassification,
            train: TrainConfig::default(),
        }
    }

    /// Stable hex digest of the canonical JSON encoding, for provenance.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("spec serializes");
        format!("{:016x}", crate::rng::fnv1a(json.as_bytes()))
    }
}

/// In-memory feature sources the regime tags resolve against.
#[derive(Clone, Debug)]
pub struct FeatureCatalog {
    pub random_dim: usize,
    pub random_seed: u64,
    pub fallback_seed: u64,
    pub vanilla: Option<FeatureTable>,
    pub pretrained: Option<FeatureTable>,
}

impl Default for FeatureCatalog {
    fn default() -> Self {
        FeatureCatalog {
            random_dim: DEFAULT_RANDOM_DIM,
            random_seed: 1,
            fallback_seed: 2,
            vanilla: None,
            pretrained: None,
        }
    }
}

impl FeatureCatalog {
    pub fn provider(&self, tag: RegimeTag) -> Result<FeatureProvider, TaskError> {
        let missing =
            |name: &str| TaskError::Feature(FeatureError::MissingTable(name.to_string()));
        let regime = match tag {
            RegimeTag::Random => ResolvedRegime::Random {
                seed: self.random_seed,
                dim: self.random_dim,
            },
            RegimeTag::Vanilla => ResolvedRegime::File {
                table: self.vanilla.clone().ok_or_else(|| missing("vanilla"))?,
            },
            RegimeTag::Pretrained => ResolvedRegime::File {
                table: self.pretrained.clone().ok_or_else(|| missing("pretrained"))?,
            },
            RegimeTag::Hierar => {
                let train = self.pretrained.clone().ok_or_else(|| missing("pretrained"))?;
                let test = self.vanilla.clone().ok_or_else(|| missing("vanilla"))?;
                if train.dim() != test.dim() {
                    return Err(TaskError::Feature(FeatureError::TableDimMismatch(
                        train.dim(),
                        test.dim(),
                    )));
                }
                ResolvedRegime::Hierarchical { train, test }
            }
        };
        Ok(FeatureProvider {
            regime,
            fallback_seed: self.fallback_seed,
        })
    }
}

/// Overall macro scores of a classification run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PrfSummary {
    pub n: usize,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub f1_label0: f64,
    pub f1_label1: f64,
}

/// Per-bucket classification scores of a temporal run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketScore {
    pub range: YearRange,
    pub n: usize,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub f1_label0: f64,
    pub f1_label1: f64,
}

/// Per-bucket ROC of a link prediction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketRoc {
    pub range: YearRange,
    pub n_pos: usize,
    pub n_neg: usize,
    pub auc: f64,
    pub points: Vec<RocPoint>,
}

/// A bucket that produced no score, and why.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkippedBucket {
    pub range: YearRange,
    pub reason: String,
}

/// Result of one experiment run.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: TaskKind,
    pub regime: RegimeTag,
    pub mode: OrientationMode,
    pub include_time: bool,
    pub include_acts: bool,
    pub split: SplitPlan,
    pub train: TrainConfig,
    /// True when training labels were deliberately corrupted.
    pub control: bool,
    pub spec_digest: String,
    pub train_loss_initial: f64,
    pub train_loss_final: f64,
    /// Classification: scores over all test nodes pooled.
    pub overall: Option<PrfSummary>,
    /// Classification: per-bucket scores in sweep order.
    pub buckets: Vec<BucketScore>,
    /// Link prediction: pooled AUC over all test buckets.
    pub overall_auc: Option<f64>,
    /// Link prediction: per-bucket curves in sweep order.
    pub roc_buckets: Vec<BucketRoc>,
    pub skipped_buckets: Vec<SkippedBucket>,
    /// RFC 3339 wall-clock time; absent in deterministic runs.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl EvalReport {
    pub(crate) fn shell(spec: &ExperimentSpec, task: TaskKind) -> Self {
        EvalReport {
            task,
            regime: spec.regime,
            mode: spec.mode,
            include_time: spec.include_time,
            include_acts: spec.include_acts,
            split: spec.split,
            train: spec.train.clone(),
            control: false,
            spec_digest: spec.digest(),
            train_loss_initial: f64::NAN,
            train_loss_final: f64::NAN,
            overall: None,
            buckets: Vec::new(),
            overall_auc: None,
            roc_buckets: Vec::new(),
            skipped_buckets: Vec::new(),
            timestamp: None,
        }
    }
}
