//! From-scratch differentiable graph model: mean-aggregation layers over an
//! in-adjacency, a binary classification head, dot-product edge scoring,
//! reverse-mode gradients, and Adam.

mod checkpoint;
mod model;
mod optim;
mod sampling;
mod tape;
mod tensor;
mod train;

pub use checkpoint::{load_model, save_model};
pub use model::{
    bind_model, class_logits, forward_embeddings, node_embeddings, node_probabilities,
    predict_label, sample_fanout, score_edge, write_param_grads, BoundModel, ClassifierHead,
    SageLayer, SageModel,
};
pub use optim::{adam_step, AdamConfig, AdamState};
pub use sampling::sample_negative_edges;
pub use tape::{sigmoid, AdjList, Gradients, Tape, Var, BCE_EPS};
pub use tensor::Tensor;
pub use train::{fit_link_model, fit_node_classifier, TrainConfig, TrainTrace};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SageError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite value produced in {0}")]
    NonFinite(String),
    #[error("loss mask is empty")]
    EmptyMask,
    #[error("could not sample {wanted} non-edges (found {found})")]
    Exhausted { wanted: usize, found: usize },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

/// Build the engine's adjacency representation from a derived graph.
pub fn graph_adjacency(graph: &crate::graph::LegalGraph) -> AdjList {
    graph
        .in_adjacency()
        .iter()
        .map(|list| list.iter().map(|id| id.0).collect())
        .collect()
}
