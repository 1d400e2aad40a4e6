//! Train/test split assignment: the published simple split, and temporal
//! splits that train up to (or from) a cutoff year and evaluate on 5-year
//! buckets beyond it.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{CaseDoc, CorpusError, SplitHint};
use crate::graph::{LegalGraph, NodeId, NodeKind};

/// Evaluation buckets always span five consecutive years.
pub const BUCKET_WIDTH_YEARS: i32 = 5;

/// Inclusive year range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct YearRange {
    pub start: i32,
    pub end: i32,
}

impl YearRange {
    pub fn new(start: i32, end: i32) -> Self {
        YearRange { start, end }
    }

    pub fn contains(&self, year: i32) -> bool {
        (self.start..=self.end).contains(&year)
    }
}

impl std::fmt::Display for YearRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}-{}", self.start, self.end)
    }
}

/// Temporal training direction.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Train on years `<= cutoff`, evaluate ascending beyond it.
    Forward,
    /// Train on years `>= cutoff`, evaluate descending below it.
    Reverse,
}

impl Direction {
    pub fn as_str(self) -> &'static str {
        match self {
            Direction::Forward => "forward",
            Direction::Reverse => "reverse",
        }
    }
}

/// Which labeled cases a temporal split may draw from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemporalPool {
    /// Year is the only split key; every labeled case is eligible.
    #[default]
    AllLabeled,
    /// Only cases hinted train/dev are re-split; test-hinted cases stay out
    /// of both sides and only pass messages.
    TrainHintsOnly,
}

/// Split selection for one experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SplitPlan {
    Simple,
    Temporal {
        direction: Direction,
        cutoff_year: i32,
        #[serde(default)]
        pool: TemporalPool,
    },
}

/// Disjoint assignment of case nodes to train, test buckets, and
/// message-passing-only roles.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub train_ids: BTreeSet<NodeId>,
    pub test_buckets: Vec<(YearRange, BTreeSet<NodeId>)>,
    pub unlabeled_ids: BTreeSet<NodeId>,
}

impl SplitAssignment {
    /// All test ids across buckets.
    pub fn test_ids(&self) -> BTreeSet<NodeId> {
        self.test_buckets
            .iter()
            .flat_map(|(_, ids)| ids.iter().copied())
            .collect()
    }

    pub fn is_train(&self, id: NodeId) -> bool {
        self.train_ids.contains(&id)
    }
}

fn case_node_id(graph: &LegalGraph, doc: &CaseDoc) -> NodeId {
    graph
        .node_by_key(NodeKind::Case, &doc.case_id)
        .unwrap_or_else(|| panic!("case {:?} missing from graph", doc.case_id))
        .id
}

/// Assign the published split: train/dev hints train, test hints test,
/// unlabeled documents pass messages only.
pub fn assign_simple_split(
    graph: &LegalGraph,
    docs: &[CaseDoc],
) -> Result<SplitAssignment, CorpusError> {
    let mut train_ids = BTreeSet::new();
    let mut test_ids = BTreeSet::new();
    let mut unlabeled_ids = BTreeSet::new();
    let mut test_years: Vec<i32> = Vec::new();

    for doc in docs {
        let id = case_node_id(graph, doc);
        match (doc.label, doc.split_hint) {
            (None, _) => {
                unlabeled_ids.insert(id);
            }
            (Some(_), None) => return Err(CorpusError::MissingSplitHint(doc.case_id.clone())),
            (Some(_), Some(SplitHint::Train)) | (Some(_), Some(SplitHint::Dev)) => {
                train_ids.insert(id);
            }
            (Some(_), Some(SplitHint::Test)) => {
                test_ids.insert(id);
                test_years.push(doc.year);
            }
        }
    }

    let test_buckets = if test_ids.is_empty() {
        Vec::new()
    } else {
        let start = *test_years.iter().min().unwrap();
        let end = *test_years.iter().max().unwrap();
        vec![(YearRange::new(start, end), test_ids)]
    };

    Ok(SplitAssignment {
        train_ids,
        test_buckets,
        unlabeled_ids,
    })
}

/// Assign a temporal split around `cutoff_year`.
///
/// Forward: train on labeled years `<= cutoff`; buckets are the full 5-year
/// windows `[cutoff+1, cutoff+5]`, `[cutoff+6, cutoff+10]`, ... ascending
/// while a window can still contain an eligible labeled year. Reverse is the
/// mirror image with train on `>= cutoff` and windows descending below it.
/// The final window may be only partially populated.
pub fn assign_temporal_split(
    graph: &LegalGraph,
    docs: &[CaseDoc],
    direction: Direction,
    cutoff_year: i32,
    pool: TemporalPool,
) -> Result<SplitAssignment, CorpusError> {
    let mut train_ids = BTreeSet::new();
    let mut unlabeled_ids = BTreeSet::new();
    let mut eligible: Vec<(NodeId, i32)> = Vec::new();

    for doc in docs {
        let id = case_node_id(graph, doc);
        let in_pool = doc.label.is_some()
            && match pool {
                TemporalPool::AllLabeled => true,
                TemporalPool::TrainHintsOnly => matches!(
                    doc.split_hint,
                    Some(SplitHint::Train) | Some(SplitHint::Dev)
                ),
            };
        if in_pool {
            eligible.push((id, doc.year));
        } else {
            unlabeled_ids.insert(id);
        }
    }

    let on_train_side = |year: i32| match direction {
        Direction::Forward => year <= cutoff_year,
        Direction::Reverse => year >= cutoff_year,
    };

    let mut test_years: Vec<i32> = Vec::new();
    let mut test_pool: Vec<(NodeId, i32)> = Vec::new();
    for &(id, year) in &eligible {
        if on_train_side(year) {
            train_ids.insert(id);
        } else {
            test_years.push(year);
            test_pool.push((id, year));
        }
    }

    if train_ids.is_empty() {
        return Err(CorpusError::EmptyTrain);
    }

    let mut test_buckets: Vec<(YearRange, BTreeSet<NodeId>)> = Vec::new();
    if !test_pool.is_empty() {
        let ranges = evaluation_windows(direction, cutoff_year, &test_years);
        for range in ranges {
            let ids: BTreeSet<NodeId> = test_pool
                .iter()
                .filter(|(_, y)| range.contains(*y))
                .map(|(id, _)| *id)
                .collect();
            test_buckets.push((range, ids));
        }
    }

    Ok(SplitAssignment {
        train_ids,
        test_buckets,
        unlabeled_ids,
    })
}

/// The 5-year evaluation windows beyond a cutoff, ordered in sweep
/// direction, covering every year in `test_years`.
pub fn evaluation_windows(
    direction: Direction,
    cutoff_year: i32,
    test_years: &[i32],
) -> Vec<YearRange> {
    let mut ranges = Vec::new();
    match direction {
        Direction::Forward => {
            let max_year = *test_years.iter().max().unwrap();
            let mut start = cutoff_year + 1;
            while start <= max_year {
                ranges.push(YearRange::new(start, start + BUCKET_WIDTH_YEARS - 1));
                start += BUCKET_WIDTH_YEARS;
            }
        }
        Direction::Reverse => {
            let min_year = *test_years.iter().min().unwrap();
            let mut end = cutoff_year - 1;
            while end >= min_year {
                ranges.push(YearRange::new(end - BUCKET_WIDTH_YEARS + 1, end));
                end -= BUCKET_WIDTH_YEARS;
            }
        }
    }
    ranges
}

/// One row of the year-wise distribution of labeled training examples.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistogramRow {
    pub range: YearRange,
    pub count: usize,
    pub cumulative: usize,
}

/// Count labeled train/dev documents per year range, with a running
/// cumulative total. Ranges must be non-overlapping and ascending.
pub fn year_histogram(docs: &[CaseDoc], ranges: &[YearRange]) -> Vec<HistogramRow> {
    assert!(
        ranges.windows(2).all(|w| w[0].end < w[1].start),
        "histogram ranges must be ascending and non-overlapping"
    );
    let mut rows = Vec::with_capacity(ranges.len());
    let mut cumulative = 0;
    for &range in ranges {
        let count = docs
            .iter()
            .filter(|d| {
                d.label.is_some()
                    && matches!(
                        d.split_hint,
                        Some(SplitHint::Train) | Some(SplitHint::Dev)
                    )
                    && range.contains(d.year)
            })
            .count();
        cumulative += count;
        rows.push(HistogramRow {
            range,
            count,
            cumulative,
        });
    }
    rows
}

/// The default reporting ranges: thirteen 5-year windows from 1956-1960
/// through 2016-2020.
pub fn default_histogram_ranges() -> Vec<YearRange> {
    (0..13)
        .map(|i| {
            let start = 1956 + 5 * i;
            YearRange::new(start, start + 4)
        })
        .collect()
}
