//! Full-batch training loops for the two tasks.

use std::rc::Rc;

use serde::{Deserialize, Serialize};

use super::model::{
    bind_model, class_logits, forward_embeddings, sample_fanout, write_param_grads, SageModel,
};
use super::optim::{adam_step, AdamConfig, AdamState};
use super::tape::{AdjList, Tape};
use super::tensor::Tensor;
use super::SageError;
use crate::rng::derive_seed;

/// Hyperparameters. None of these are dictated by the data; they are all
/// explicit and surfaced in reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub hidden_dim: usize,
    pub depth: usize,
    pub seed: u64,
    pub l2: f64,
    /// Cap on in-neighbors aggregated per node; `None` uses the full
    /// neighborhood.
    pub neighbor_fanout: Option<usize>,
    /// Negatives per positive edge in the link task.
    pub negative_ratio: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            learning_rate: 0.01,
            hidden_dim: 128,
            depth: 2,
            seed: 0,
            l2: 0.0,
            neighbor_fanout: None,
            negative_ratio: 1,
        }
    }
}

impl TrainConfig {
    fn validate(&self) -> Result<(), SageError> {
        if self.epochs == 0 || self.hidden_dim == 0 || self.depth == 0 {
            return Err(SageError::ShapeMismatch(
                "epochs, hidden_dim and depth must be positive".into(),
            ));
        }
        if self.negative_ratio == 0 {
            return Err(SageError::ShapeMismatch(
                "negative_ratio must be positive".into(),
            ));
        }
        let lr_ok = self.learning_rate.is_finite() && self.learning_rate > 0.0;
        if !lr_ok || self.l2 < 0.0 {
            return Err(SageError::ShapeMismatch(
                "learning_rate must be positive and l2 non-negative".into(),
            ));
        }
        Ok(())
    }
}

/// Loss trace of a finished run.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct TrainTrace {
    pub losses: Vec<f64>,
}

impl TrainTrace {
    pub fn initial_loss(&self) -> f64 {
        self.losses.first().copied().unwrap_or(f64::NAN)
    }

    pub fn final_loss(&self) -> f64 {
        self.losses.last().copied().unwrap_or(f64::NAN)
    }
}

fn epoch_adjacency(adj: &Rc<AdjList>, config: &TrainConfig, epoch: usize) -> Rc<AdjList> {
    match config.neighbor_fanout {
        Some(k) => Rc::new(sample_fanout(adj, k, derive_seed(config.seed, "fanout"), epoch)),
        None => Rc::clone(adj),
    }
}

fn add_l2_penalty(
    tape: &mut Tape,
    bound: &super::model::BoundModel,
    loss: super::tape::Var,
    l2: f64,
) -> Result<super::tape::Var, SageError> {
    if l2 == 0.0 {
        return Ok(loss);
    }
    let mut penalty = None;
    for var in bound.param_vars() {
        let sq = tape.sum_squares(var)?;
        penalty = Some(match penalty {
            None => sq,
            Some(acc) => tape.add(acc, sq)?,
        });
    }
    let scaled = tape.scale(penalty.expect("model has parameters"), l2)?;
    tape.add(loss, scaled)
}

/// Train a node classifier with masked binary cross-entropy over `mask`.
/// Nodes outside the mask participate in message passing only.
pub fn fit_node_classifier(
    adj: &Rc<AdjList>,
    features: &Tensor,
    labels: &[f64],
    mask: &[u32],
    config: &TrainConfig,
) -> Result<(SageModel, TrainTrace), SageError> {
    config.validate()?;
    if features.rows() != labels.len() || features.rows() != adj.len() {
        return Err(SageError::ShapeMismatch(format!(
            "features ({} rows) vs labels ({}) vs adjacency ({})",
            features.rows(),
            labels.len(),
            adj.len()
        )));
    }
    let mut model = SageModel::new(features.cols(), config.hidden_dim, config.depth, config.seed)?;
    let mut state = AdamState::for_model(&model);
    let adam = AdamConfig::with_lr(config.learning_rate);
    let labels = Rc::new(labels.to_vec());
    let mask = Rc::new(mask.to_vec());
    let mut trace = TrainTrace::default();

    for epoch in 0..config.epochs {
        let adj_epoch = epoch_adjacency(adj, config, epoch);
        let mut tape = Tape::new();
        let bound = bind_model(&mut tape, &model)?;
        let x = tape.leaf(features.clone())?;
        let emb = forward_embeddings(&mut tape, &bound, x, &adj_epoch)?;
        let logits = class_logits(&mut tape, &bound, emb)?;
        let loss = tape.masked_bce(logits, Rc::clone(&labels), Rc::clone(&mask))?;
        let loss = add_l2_penalty(&mut tape, &bound, loss, config.l2)?;
        trace.losses.push(tape.value(loss).values()[0]);

        let grads = tape.backward(loss)?;
        write_param_grads(&tape, &grads, &bound, &mut model);
        adam_step(&mut model, &mut state, &adam);
    }
    Ok((model, trace))
}

/// Train an edge scorer: positives are the given unordered pairs, negatives
/// are resampled every epoch from the graph's non-edges at
/// `config.negative_ratio` per positive.
pub fn fit_link_model(
    graph: &crate::graph::LegalGraph,
    adj: &Rc<AdjList>,
    features: &Tensor,
    positives: &[(u32, u32)],
    config: &TrainConfig,
) -> Result<(SageModel, TrainTrace), SageError> {
    config.validate()?;
    if positives.is_empty() {
        return Err(SageError::EmptyMask);
    }
    if features.rows() != adj.len() {
        return Err(SageError::ShapeMismatch(format!(
            "features ({} rows) vs adjacency ({})",
            features.rows(),
            adj.len()
        )));
    }
    let mut model = SageModel::new(features.cols(), config.hidden_dim, config.depth, config.seed)?;
    let mut state = AdamState::for_model(&model);
    let adam = AdamConfig::with_lr(config.learning_rate);
    let mut trace = TrainTrace::default();

    for epoch in 0..config.epochs {
        let negatives = super::sampling::sample_negative_edges(
            graph,
            positives.len() * config.negative_ratio,
            derive_seed(config.seed, &format!("train_negatives/{epoch}")),
        )?;
        let mut pairs: Vec<(u32, u32)> = Vec::with_capacity(positives.len() + negatives.len());
        let mut labels: Vec<f64> = Vec::with_capacity(positives.len() + negatives.len());
        pairs.extend_from_slice(positives);
        labels.extend(std::iter::repeat_n(1.0, positives.len()));
        for (u, v) in negatives {
            pairs.push((u.0, v.0));
            labels.push(0.0);
        }

        let adj_epoch = epoch_adjacency(adj, config, epoch);
        let mut tape = Tape::new();
        let bound = bind_model(&mut tape, &model)?;
        let x = tape.leaf(features.clone())?;
        let emb = forward_embeddings(&mut tape, &bound, x, &adj_epoch)?;
        let loss = tape.edge_bce(emb, Rc::new(pairs), Rc::new(labels))?;
        let loss = add_l2_penalty(&mut tape, &bound, loss, config.l2)?;
        trace.losses.push(tape.value(loss).values()[0]);

        let grads = tape.backward(loss)?;
        write_param_grads(&tape, &grads, &bound, &mut model);
        adam_step(&mut model, &mut state, &adam);
    }
    Ok((model, trace))
}
