//! Node classification runs and the label-shuffle control.

use std::rc::Rc;

use rand::Rng;

use super::{
    BucketScore, EvalReport, ExperimentSpec, FeatureCatalog, PrfSummary, SkippedBucket, TaskError,
    TaskKind,
};
use crate::corpus::{assign_simple_split, assign_temporal_split, CaseDoc, SplitAssignment, SplitPlan};
use crate::features::materialize;
use crate::graph::{LegalGraph, NodeId};
use crate::metrics::macro_prf;
use crate::rng;
use crate::sage::{
    fit_node_classifier, graph_adjacency, node_probabilities, predict_label, AdjList, SageModel,
    Tensor,
};

/// A trained classification run: the report plus the model that produced it.
pub struct NodeRunArtifacts {
    pub report: EvalReport,
    pub model: SageModel,
}

pub(crate) fn resolve_split(
    graph: &LegalGraph,
    docs: &[CaseDoc],
    plan: &SplitPlan,
) -> Result<SplitAssignment, TaskError> {
    let split = match plan {
        SplitPlan::Simple => assign_simple_split(graph, docs)?,
        SplitPlan::Temporal {
            direction,
            cutoff_year,
            pool,
        } => assign_temporal_split(graph, docs, *direction, *cutoff_year, *pool)?,
    };
    Ok(split)
}

fn node_labels(graph: &LegalGraph) -> Vec<f64> {
    graph
        .nodes()
        .iter()
        .map(|n| n.label.map(f64::from).unwrap_or(0.0))
        .collect()
}

/// Train and evaluate one node classification cell on a prebuilt graph.
/// Unlabeled and characteristic nodes participate in message passing but
/// never in the loss.
pub fn run_node_classification(
    graph: &LegalGraph,
    docs: &[CaseDoc],
    catalog: &FeatureCatalog,
    spec: &ExperimentSpec,
) -> Result<NodeRunArtifacts, TaskError> {
    run_with_label_noise(graph, docs, catalog, spec, None)
}

/// Like [`run_node_classification`], but with `fraction` of the training
/// labels replaced by independent fair coin flips before training. The
/// returned report is flagged as a control run.
pub fn run_label_shuffle_control(
    graph: &LegalGraph,
    docs: &[CaseDoc],
    catalog: &FeatureCatalog,
    spec: &ExperimentSpec,
    fraction: f64,
    control_seed: u64,
) -> Result<NodeRunArtifacts, TaskError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(TaskError::Invalid(format!(
            "shuffle fraction {fraction} outside [0, 1]"
        )));
    }
    run_with_label_noise(graph, docs, catalog, spec, Some((fraction, control_seed)))
}

fn run_with_label_noise(
    graph: &LegalGraph,
    docs: &[CaseDoc],
    catalog: &FeatureCatalog,
    spec: &ExperimentSpec,
    noise: Option<(f64, u64)>,
) -> Result<NodeRunArtifacts, TaskError> {
    let split = resolve_split(graph, docs, &spec.split)?;
    let provider = catalog.provider(spec.regime)?;
    let matrix = materialize(graph, &split, &provider);
    let features = Tensor::from_values(&[matrix.rows(), matrix.dim()], matrix.into_data())?;
    let adj: Rc<AdjList> = Rc::new(graph_adjacency(graph));

    let mut labels = node_labels(graph);
    let mask: Vec<u32> = split.train_ids.iter().map(|id| id.0).collect();

    if let Some((fraction, control_seed)) = noise {
        let shuffled = (fraction * mask.len() as f64).ceil() as usize;
        let mut selector = rng::rng_for(control_seed, "shuffle/select");
        let mut order: Vec<usize> = (0..mask.len()).collect();
        for i in 0..shuffled.min(order.len()) {
            let j = selector.gen_range(i..order.len());
            order.swap(i, j);
        }
        let mut coins = rng::rng_for(control_seed, "shuffle/coins");
        for &slot in order.iter().take(shuffled) {
            labels[mask[slot] as usize] = f64::from(coins.gen::<bool>());
        }
    }

    let (model, trace) = fit_node_classifier(&adj, &features, &labels, &mask, &spec.train)?;
    let mut report = score_node_model(graph, &split, &model, features, &adj, spec)?;
    report.control = noise.map(|(f, _)| f > 0.0).unwrap_or(false);
    report.train_loss_initial = trace.initial_loss();
    report.train_loss_final = trace.final_loss();
    Ok(NodeRunArtifacts { report, model })
}

/// Evaluate an already trained model under a spec (no training).
pub fn evaluate_node_model(
    graph: &LegalGraph,
    docs: &[CaseDoc],
    catalog: &FeatureCatalog,
    spec: &ExperimentSpec,
    model: &SageModel,
) -> Result<EvalReport, TaskError> {
    let split = resolve_split(graph, docs, &spec.split)?;
    let provider = catalog.provider(spec.regime)?;
    let matrix = materialize(graph, &split, &provider);
    let features = Tensor::from_values(&[matrix.rows(), matrix.dim()], matrix.into_data())?;
    let adj: Rc<AdjList> = Rc::new(graph_adjacency(graph));
    score_node_model(graph, &split, model, features, &adj, spec)
}

fn score_node_model(
    graph: &LegalGraph,
    split: &crate::corpus::SplitAssignment,
    model: &SageModel,
    features: Tensor,
    adj: &Rc<AdjList>,
    spec: &ExperimentSpec,
) -> Result<EvalReport, TaskError> {
    let probs = node_probabilities(model, features, adj)?;
    let preds: Vec<u8> = probs.iter().map(|&p| predict_label(p)).collect();
    let true_label = |id: NodeId| graph.nodes()[id.index()].label.expect("test nodes are labeled");

    let mut report = EvalReport::shell(spec, TaskKind::NodeClassification);
    let mut pooled_labels: Vec<u8> = Vec::new();
    let mut pooled_preds: Vec<u8> = Vec::new();

    for (range, ids) in &split.test_buckets {
        if ids.is_empty() {
            report.skipped_buckets.push(SkippedBucket {
                range: *range,
                reason: "no labeled cases in bucket".into(),
            });
            continue;
        }
        let labels: Vec<u8> = ids.iter().map(|&id| true_label(id)).collect();
        let bucket_preds: Vec<u8> = ids.iter().map(|&id| preds[id.index()]).collect();
        pooled_labels.extend_from_slice(&labels);
        pooled_preds.extend_from_slice(&bucket_preds);
        let scores = macro_prf(&labels, &bucket_preds)?;
        report.buckets.push(BucketScore {
            range: *range,
            n: ids.len(),
            macro_precision: scores.macro_precision,
            macro_recall: scores.macro_recall,
            macro_f1: scores.macro_f1,
            f1_label0: scores.class0.f1,
            f1_label1: scores.class1.f1,
        });
    }

    if !pooled_labels.is_empty() {
        let scores = macro_prf(&pooled_labels, &pooled_preds)?;
        report.overall = Some(PrfSummary {
            n: pooled_labels.len(),
            macro_precision: scores.macro_precision,
            macro_recall: scores.macro_recall,
            macro_f1: scores.macro_f1,
            f1_label0: scores.class0.f1,
            f1_label1: scores.class1.f1,
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::build_graph;
    use crate::graph::OrientationMode;
    use crate::sage::TrainConfig;
    use crate::synth::{planted_signal_corpus, PlantedConfig};
    use crate::tasks::RegimeTag;

    fn small_fixture() -> (Vec<CaseDoc>, FeatureCatalog) {
        let config = PlantedConfig {
            nodes: 120,
            feature_dim: 16,
            seed: 3,
            ..PlantedConfig::default()
        };
        let (docs, table) = planted_signal_corpus(&config);
        let catalog = FeatureCatalog {
            random_dim: 16,
            vanilla: Some(table.clone()),
            pretrained: Some(table),
            ..FeatureCatalog::default()
        };
        (docs, catalog)
    }

    fn quick_spec() -> ExperimentSpec {
        ExperimentSpec {
            train: TrainConfig {
                epochs: 60,
                hidden_dim: 16,
                ..TrainConfig::default()
            },
            ..ExperimentSpec::simple(RegimeTag::Pretrained, OrientationMode::Undirected)
        }
    }

    #[test]
    fn planted_signal_is_learnable() {
        let (docs, catalog) = small_fixture();
        let (graph, _) = build_graph(&docs, false, false, OrientationMode::Undirected).unwrap();
        let spec = quick_spec();
        let run = run_node_classification(&graph, &docs, &catalog, &spec).unwrap();
        let overall = run.report.overall.unwrap();
        assert!(overall.macro_f1 >= 0.9, "macro F1 {}", overall.macro_f1);
        assert!(run.report.train_loss_final < run.report.train_loss_initial);
    }

    #[test]
    fn reports_are_reproducible() {
        let (docs, catalog) = small_fixture();
        let (graph, _) = build_graph(&docs, false, false, OrientationMode::Undirected).unwrap();
        let spec = quick_spec();
        let a = run_node_classification(&graph, &docs, &catalog, &spec).unwrap();
        let b = run_node_classification(&graph, &docs, &catalog, &spec).unwrap();
        assert_eq!(
            serde_json::to_string(&a.report).unwrap(),
            serde_json::to_string(&b.report).unwrap()
        );
    }

    #[test]
    fn zero_fraction_control_equals_base_run() {
        let (docs, catalog) = small_fixture();
        let (graph, _) = build_graph(&docs, false, false, OrientationMode::Undirected).unwrap();
        let mut spec = quick_spec();
        spec.train.epochs = 20;
        let base = run_node_classification(&graph, &docs, &catalog, &spec).unwrap();
        let control =
            run_label_shuffle_control(&graph, &docs, &catalog, &spec, 0.0, 99).unwrap();
        assert_eq!(
            base.report.overall.unwrap().macro_f1,
            control.report.overall.unwrap().macro_f1
        );
        assert!(!control.report.control);
    }

    #[test]
    fn full_shuffle_degrades_scores() {
        let (docs, catalog) = small_fixture();
        let (graph, _) = build_graph(&docs, false, false, OrientationMode::Undirected).unwrap();
        let spec = quick_spec();
        let base = run_node_classification(&graph, &docs, &catalog, &spec).unwrap();
        let control =
            run_label_shuffle_control(&graph, &docs, &catalog, &spec, 1.0, 7).unwrap();
        assert!(control.report.control);
        assert!(
            control.report.overall.unwrap().macro_f1 + 0.15
                < base.report.overall.unwrap().macro_f1
        );
    }

    #[test]
    fn evaluate_matches_training_report() {
        let (docs, catalog) = small_fixture();
        let (graph, _) = build_graph(&docs, false, false, OrientationMode::Undirected).unwrap();
        let mut spec = quick_spec();
        spec.train.epochs = 15;
        let run = run_node_classification(&graph, &docs, &catalog, &spec).unwrap();
        let evaluated =
            evaluate_node_model(&graph, &docs, &catalog, &spec, &run.model).unwrap();
        assert_eq!(run.report.overall, evaluated.overall);
    }

    #[test]
    fn invalid_fraction_rejected() {
        let (docs, catalog) = small_fixture();
        let (graph, _) = build_graph(&docs, false, false, OrientationMode::Undirected).unwrap();
        let spec = quick_spec();
        assert!(run_label_shuffle_control(&graph, &docs, &catalog, &spec, 1.5, 0).is_err());
    }
}
