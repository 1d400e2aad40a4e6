//! Citation link prediction with temporal edge splits.
//!
//! Per cutoff, case-case canonical edges are split by the citing case's
//! year: the train side trains an edge scorer, the rest form 5-year test
//! buckets. Test edges are removed from the message-passing adjacency so
//! the model never sees the edges it is asked to score. Characteristic
//! edges are never positives but still shape message passing when enabled.

use std::collections::HashSet;
use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::classify::resolve_split;
use super::{BucketRoc, EvalReport, ExperimentSpec, FeatureCatalog, SkippedBucket, TaskError, TaskKind};
use crate::corpus::{build_graph, evaluation_windows, CaseDoc, Direction, SplitPlan, TemporalPool};
use crate::features::materialize;
use crate::graph::{LegalGraph, NodeId};
use crate::metrics::roc;
use crate::rng::derive_seed;
use crate::sage::{
    fit_link_model, node_embeddings, sample_negative_edges, score_edge, AdjList, Tensor,
};

/// Reports per cutoff, plus cutoffs that could not run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LinkOutcome {
    pub reports: Vec<EvalReport>,
    pub skipped_cutoffs: Vec<(i32, String)>,
}

fn on_train_side(direction: Direction, cutoff: i32, year: i32) -> bool {
    match direction {
        Direction::Forward => year <= cutoff,
        Direction::Reverse => year >= cutoff,
    }
}

/// Normalize to an unordered pair for dedup and scoring.
fn unordered(u: NodeId, v: NodeId) -> (u32, u32) {
    (u.min(v).0, u.max(v).0)
}

/// Outcome of a temporal edge split.
pub struct EdgeSplit {
    /// Deduplicated unordered training pairs.
    pub train_pairs: Vec<(u32, u32)>,
    /// Held-out canonical edges tagged with their citing year.
    pub test_edges: Vec<(NodeId, NodeId, i32)>,
}

/// Temporal edge split for one cutoff. Training pairs are the deduplicated
/// unordered case-case edges whose citing year falls on the train side;
/// test edges are the rest. A pair cited in both directions across the
/// cutoff stays in training and out of evaluation, so the two sides
/// partition the unordered citation pairs.
pub fn split_citation_edges(graph: &LegalGraph, direction: Direction, cutoff: i32) -> EdgeSplit {
    let year_of = |id: NodeId| {
        graph.nodes()[id.index()]
            .year
            .expect("case nodes carry years")
    };
    let mut train_pairs: Vec<(u32, u32)> = Vec::new();
    let mut train_seen: HashSet<(u32, u32)> = HashSet::new();
    let mut test_edges: Vec<(NodeId, NodeId, i32)> = Vec::new();
    for edge in graph.citation_edges() {
        let year = year_of(edge.citing);
        if on_train_side(direction, cutoff, year) {
            let pair = unordered(edge.citing, edge.cited);
            if train_seen.insert(pair) {
                train_pairs.push(pair);
            }
        } else {
            test_edges.push((edge.citing, edge.cited, year));
        }
    }
    test_edges.retain(|&(u, v, _)| !train_seen.contains(&unordered(u, v)));
    EdgeSplit {
        train_pairs,
        test_edges,
    }
}

/// Run link prediction over the given cutoffs.
pub fn run_link_prediction(
    docs: &[CaseDoc],
    catalog: &FeatureCatalog,
    base_spec: &ExperimentSpec,
    direction: Direction,
    cutoffs: &[i32],
) -> Result<LinkOutcome, TaskError> {
    let (graph, _) = build_graph(docs, base_spec.include_time, base_spec.include_acts, base_spec.mode)?;
    let citations = graph.citation_edges();
    if citations.is_empty() {
        return Err(TaskError::Invalid(
            "link prediction needs at least one citation edge".into(),
        ));
    }
    let year_of = |id: NodeId| {
        graph.nodes()[id.index()]
            .year
            .expect("case nodes carry years")
    };

    let mut outcome = LinkOutcome::default();
    'cutoffs: for &cutoff in cutoffs {
        let mut spec = base_spec.clone();
        spec.split = SplitPlan::Temporal {
            direction,
            cutoff_year: cutoff,
            pool: TemporalPool::AllLabeled,
        };
        spec.train.seed = derive_seed(base_spec.train.seed, &format!("link/{cutoff}"));
        let seed = spec.train.seed;

        // Temporal edge split keyed by the citing case's year.
        let EdgeSplit {
            train_pairs,
            test_edges,
        } = split_citation_edges(&graph, direction, cutoff);
        if train_pairs.is_empty() {
            outcome
                .skipped_cutoffs
                .push((cutoff, "no training edges on the train side".into()));
            continue;
        }
        // Every test-side canonical edge is held out of message passing,
        // including orientations whose unordered pair stayed in training.
        let excluded: HashSet<(NodeId, NodeId)> = citations
            .iter()
            .filter(|e| !on_train_side(direction, cutoff, year_of(e.citing)))
            .map(|e| (e.citing, e.cited))
            .collect();

        // Hold test edges out of message passing.
        let message_adj: Rc<AdjList> = Rc::new(
            graph
                .in_adjacency_excluding(spec.mode, &excluded)
                .iter()
                .map(|list| list.iter().map(|id| id.0).collect())
                .collect(),
        );

        // Feature routing (hierarchical regime) follows the same year split.
        let split = resolve_split(&graph, docs, &spec.split).map_err(|e| match e {
            TaskError::Corpus(crate::corpus::CorpusError::EmptyTrain) => TaskError::Corpus(
                crate::corpus::CorpusError::EmptyTrain,
            ),
            other => other,
        });
        let split = match split {
            Ok(s) => s,
            Err(TaskError::Corpus(crate::corpus::CorpusError::EmptyTrain)) => {
                // Unlabeled corpora have no labeled train side; route every
                // case through the year rule directly.
                let mut train_ids = std::collections::BTreeSet::new();
                let mut unlabeled = std::collections::BTreeSet::new();
                for node in graph.nodes() {
                    if node.kind == crate::graph::NodeKind::Case {
                        if on_train_side(direction, cutoff, node.year.unwrap_or(i32::MIN)) {
                            train_ids.insert(node.id);
                        } else {
                            unlabeled.insert(node.id);
                        }
                    }
                }
                crate::corpus::SplitAssignment {
                    train_ids,
                    test_buckets: Vec::new(),
                    unlabeled_ids: unlabeled,
                }
            }
            Err(other) => return Err(other),
        };
        let provider = catalog.provider(spec.regime)?;
        let matrix = materialize(&graph, &split, &provider);
        let features = Tensor::from_values(&[matrix.rows(), matrix.dim()], matrix.into_data())?;

        let (model, trace) =
            match fit_link_model(&graph, &message_adj, &features, &train_pairs, &spec.train) {
                Ok(done) => done,
                Err(crate::sage::SageError::Exhausted { .. }) => {
                    outcome
                        .skipped_cutoffs
                        .push((cutoff, "not enough non-edges to sample negatives".into()));
                    continue 'cutoffs;
                }
                Err(e) => return Err(e.into()),
            };

        let mut report = EvalReport::shell(&spec, TaskKind::LinkPrediction);
        report.train_loss_initial = trace.initial_loss();
        report.train_loss_final = trace.final_loss();

        let embeddings = node_embeddings(&model, features, &message_adj)?;
        let test_years: Vec<i32> = test_edges.iter().map(|&(_, _, y)| y).collect();
        let mut pooled_scores: Vec<f64> = Vec::new();
        let mut pooled_labels: Vec<u8> = Vec::new();

        if !test_edges.is_empty() {
            for (bucket_idx, range) in evaluation_windows(direction, cutoff, &test_years)
                .into_iter()
                .enumerate()
            {
                let mut positives: Vec<(u32, u32)> = Vec::new();
                let mut seen: HashSet<(u32, u32)> = HashSet::new();
                for &(u, v, year) in &test_edges {
                    if range.contains(year) {
                        let pair = unordered(u, v);
                        if seen.insert(pair) {
                            positives.push(pair);
                        }
                    }
                }
                if positives.is_empty() {
                    report.skipped_buckets.push(SkippedBucket {
                        range,
                        reason: "no test edges in bucket".into(),
                    });
                    continue;
                }
                let negatives = match sample_negative_edges(
                    &graph,
                    positives.len() * spec.train.negative_ratio,
                    derive_seed(seed, &format!("eval_negatives/{bucket_idx}")),
                ) {
                    Ok(neg) => neg,
                    Err(crate::sage::SageError::Exhausted { .. }) => {
                        report.skipped_buckets.push(SkippedBucket {
                            range,
                            reason: "not enough non-edges for negatives".into(),
                        });
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                };

                let mut scores = Vec::with_capacity(positives.len() + negatives.len());
                let mut labels = Vec::with_capacity(scores.capacity());
                for &(u, v) in &positives {
                    scores.push(score_edge(
                        embeddings.row(u as usize),
                        embeddings.row(v as usize),
                    ));
                    labels.push(1u8);
                }
                for &(u, v) in &negatives {
                    scores.push(score_edge(
                        embeddings.row(u.index()),
                        embeddings.row(v.index()),
                    ));
                    labels.push(0u8);
                }
                pooled_scores.extend_from_slice(&scores);
                pooled_labels.extend_from_slice(&labels);

                let curve = roc(&scores, &labels)?;
                report.roc_buckets.push(BucketRoc {
                    range,
                    n_pos: positives.len(),
                    n_neg: negatives.len(),
                    auc: curve.auc,
                    points: curve.points,
                });
            }
        }

        if !pooled_labels.is_empty() {
            report.overall_auc = Some(roc(&pooled_scores, &pooled_labels)?.auc);
        }
        outcome.reports.push(report);
    }
    Ok(outcome)
}
