//! Graph construction from parsed documents.

use serde::{Deserialize, Serialize};

use super::{CaseDoc, CorpusError};
use crate::graph::{GraphError, LegalGraph, NodeKind, OrientationMode};

/// Counters collected while building a graph.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BuildStats {
    pub case_nodes: usize,
    pub labeled_cases: usize,
    pub time_nodes: usize,
    pub act_nodes: usize,
    pub citation_edges: usize,
    pub characteristic_edges: usize,
    /// Citations whose target id is absent from the corpus (dropped).
    pub dangling_citations: usize,
    /// Self-citations in the raw documents (dropped).
    pub self_citations_dropped: usize,
    /// Repeated (citing, cited) pairs in the raw documents (deduplicated).
    pub duplicate_citations: usize,
}

/// Build a [`LegalGraph`] from documents: one case node per document in file
/// order, citation edges resolved by case id, optional characteristic nodes,
/// and adjacency derived under `mode`.
///
/// Citations to ids outside the corpus are dropped and counted, as are
/// self-citations and duplicate citation pairs.
pub fn build_graph(
    docs: &[CaseDoc],
    include_time: bool,
    include_acts: bool,
    mode: OrientationMode,
) -> Result<(LegalGraph, BuildStats), CorpusError> {
    let mut graph = LegalGraph::new();
    let mut stats = BuildStats::default();

    let mut ids = Vec::with_capacity(docs.len());
    for doc in docs {
        let id = graph
            .add_node(NodeKind::Case, &doc.case_id, Some(doc.year), doc.label)
            .map_err(graph_to_corpus_error)?;
        ids.push(id);
        stats.case_nodes += 1;
        if doc.label.is_some() {
            stats.labeled_cases += 1;
        }
    }

    for (doc, &citing) in docs.iter().zip(&ids) {
        for cited_id in &doc.cited_ids {
            match graph.node_by_key(NodeKind::Case, cited_id) {
                None => stats.dangling_citations += 1,
                Some(target) => {
                    let cited = target.id;
                    if cited == citing {
                        stats.self_citations_dropped += 1;
                        continue;
                    }
                    if graph.has_canonical_edge(citing, cited) {
                        stats.duplicate_citations += 1;
                        continue;
                    }
                    graph
                        .add_citation(citing, cited)
                        .map_err(graph_to_corpus_error)?;
                }
            }
        }
    }
    stats.citation_edges = graph.canonical_edges().len();

    let acts_by_case: Vec<_> = docs
        .iter()
        .zip(&ids)
        .map(|(doc, &id)| (id, doc.act_ids.clone()))
        .collect();
    graph.inject_characteristic_nodes(&acts_by_case, include_time, include_acts);
    stats.time_nodes = graph.count_kind(NodeKind::Time);
    stats.act_nodes = graph.count_kind(NodeKind::Act);
    stats.characteristic_edges = graph.canonical_edges().len() - stats.citation_edges;

    graph.derive_adjacency(mode);
    Ok((graph, stats))
}

fn graph_to_corpus_error(err: GraphError) -> CorpusError {
    CorpusError::Parse {
        line: 0,
        message: err.to_string(),
    }
}
