//! The model: stacked mean-aggregation layers, a one-logit classification
//! head, and dot-product edge scoring.
//!
//! Each layer computes `act(W . concat(h_v, mean of in-neighbor rows) + b)`
//! per node, with an empty neighborhood contributing a zero mean vector.
//! The rectifier is applied between layers but not after the last one.

use std::rc::Rc;

use rand::Rng;

use super::tape::{sigmoid, AdjList, Tape, Var};
use super::tensor::Tensor;
use super::SageError;
use crate::rng;

/// One aggregation layer: weight (out_dim x 2*in_dim) and bias (out_dim).
#[derive(Clone, Debug)]
pub struct SageLayer {
    pub weight: Tensor,
    pub bias: Tensor,
}

impl SageLayer {
    pub fn in_dim(&self) -> usize {
        self.weight.cols() / 2
    }

    pub fn out_dim(&self) -> usize {
        self.weight.rows()
    }
}

/// Linear head mapping embeddings to a single logit.
#[derive(Clone, Debug)]
pub struct ClassifierHead {
    pub weight: Tensor,
    pub bias: Tensor,
}

/// Full model state. Edge scoring has no parameters of its own; pairs are
/// scored by `logistic(dot(emb_u, emb_v))`.
#[derive(Clone, Debug)]
pub struct SageModel {
    pub layers: Vec<SageLayer>,
    pub class_head: ClassifierHead,
}

impl SageModel {
    /// Build a model with `depth` layers of width `hidden_dim` on top of
    /// `feature_dim` inputs, initialized uniformly at +/- 1/sqrt(fan_in)
    /// from the seeded stream.
    pub fn new(
        feature_dim: usize,
        hidden_dim: usize,
        depth: usize,
        seed: u64,
    ) -> Result<Self, SageError> {
        if depth == 0 {
            return Err(SageError::ShapeMismatch(
                "model needs at least one layer".into(),
            ));
        }
        if feature_dim == 0 || hidden_dim == 0 {
            return Err(SageError::ShapeMismatch(
                "feature and hidden dimensions must be positive".into(),
            ));
        }
        let mut layers = Vec::with_capacity(depth);
        let mut in_dim = feature_dim;
        for layer_idx in 0..depth {
            let fan_in = 2 * in_dim;
            let weight = init_tensor(
                &[hidden_dim, fan_in],
                seed,
                &format!("layer{layer_idx}/weight"),
            )?;
            layers.push(SageLayer {
                weight,
                bias: Tensor::zeros(&[hidden_dim]),
            });
            in_dim = hidden_dim;
        }
        let class_head = ClassifierHead {
            weight: init_tensor(&[1, hidden_dim], seed, "head/weight")?,
            bias: Tensor::zeros(&[1]),
        };
        Ok(SageModel { layers, class_head })
    }

    pub fn feature_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn hidden_dim(&self) -> usize {
        self.layers.last().unwrap().out_dim()
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Parameters in declared order: per layer weight then bias, then the
    /// head weight and bias. Checkpoints and optimizer state follow this
    /// order.
    pub fn params(&self) -> Vec<&Tensor> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &self.layers {
            out.push(&layer.weight);
            out.push(&layer.bias);
        }
        out.push(&self.class_head.weight);
        out.push(&self.class_head.bias);
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        let mut out = Vec::with_capacity(2 * self.layers.len() + 2);
        for layer in &mut self.layers {
            out.push(&mut layer.weight);
            out.push(&mut layer.bias);
        }
        out.push(&mut self.class_head.weight);
        out.push(&mut self.class_head.bias);
        out
    }
}

fn init_tensor(shape: &[usize], seed: u64, context: &str) -> Result<Tensor, SageError> {
    let fan_in = *shape.last().unwrap();
    let bound = 1.0 / (fan_in as f64).sqrt();
    let mut rng = rng::rng_for(seed, &format!("init/{context}"));
    let len: usize = shape.iter().product();
    let values: Vec<f64> = (0..len)
        .map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * bound)
        .collect();
    Tensor::from_values(shape, values)
}

/// Model parameters registered as leaves on a tape, in declared order.
pub struct BoundModel {
    pub layer_vars: Vec<(Var, Var)>,
    pub head_vars: (Var, Var),
}

impl BoundModel {
    /// Parameter vars in the same order as [`SageModel::params`].
    pub fn param_vars(&self) -> Vec<Var> {
        let mut out = Vec::with_capacity(2 * self.layer_vars.len() + 2);
        for &(w, b) in &self.layer_vars {
            out.push(w);
            out.push(b);
        }
        out.push(self.head_vars.0);
        out.push(self.head_vars.1);
        out
    }
}

/// Register all model parameters on the tape.
pub fn bind_model(tape: &mut Tape, model: &SageModel) -> Result<BoundModel, SageError> {
    let mut layer_vars = Vec::with_capacity(model.layers.len());
    for layer in &model.layers {
        let w = tape.leaf(layer.weight.clone())?;
        let b = tape.leaf(layer.bias.clone())?;
        layer_vars.push((w, b));
    }
    let hw = tape.leaf(model.class_head.weight.clone())?;
    let hb = tape.leaf(model.class_head.bias.clone())?;
    Ok(BoundModel {
        layer_vars,
        head_vars: (hw, hb),
    })
}

/// Run the layer stack over node features, producing one embedding row per
/// node. The rectifier is omitted after the final layer.
pub fn forward_embeddings(
    tape: &mut Tape,
    bound: &BoundModel,
    features: Var,
    adj: &Rc<AdjList>,
) -> Result<Var, SageError> {
    let mut h = features;
    let last = bound.layer_vars.len() - 1;
    for (idx, &(w, b)) in bound.layer_vars.iter().enumerate() {
        let m = tape.neighbor_mean(h, Rc::clone(adj))?;
        let cat = tape.concat_cols(h, m)?;
        h = tape.linear(cat, w, b)?;
        if idx != last {
            h = tape.relu(h)?;
        }
    }
    Ok(h)
}

/// One logit per node from the classification head.
pub fn class_logits(tape: &mut Tape, bound: &BoundModel, emb: Var) -> Result<Var, SageError> {
    tape.linear(emb, bound.head_vars.0, bound.head_vars.1)
}

/// Inference without gradient bookkeeping: per-node probability of label 1.
pub fn node_probabilities(
    model: &SageModel,
    features: Tensor,
    adj: &Rc<AdjList>,
) -> Result<Vec<f64>, SageError> {
    let mut tape = Tape::new();
    let bound = bind_model(&mut tape, model)?;
    let x = tape.leaf(features)?;
    let emb = forward_embeddings(&mut tape, &bound, x, adj)?;
    let logits = class_logits(&mut tape, &bound, emb)?;
    Ok(tape.value(logits).values().iter().map(|&z| sigmoid(z)).collect())
}

/// Embedding matrix for inference.
pub fn node_embeddings(
    model: &SageModel,
    features: Tensor,
    adj: &Rc<AdjList>,
) -> Result<Tensor, SageError> {
    let mut tape = Tape::new();
    let bound = bind_model(&mut tape, model)?;
    let x = tape.leaf(features)?;
    let emb = forward_embeddings(&mut tape, &bound, x, adj)?;
    Ok(tape.value(emb).clone())
}

/// Predicted label under the documented tie rule: probability >= 0.5 maps
/// to label 1.
pub fn predict_label(probability: f64) -> u8 {
    u8::from(probability >= 0.5)
}

/// Symmetric edge score `logistic(dot(emb_u, emb_v))`.
pub fn score_edge(emb_u: &[f64], emb_v: &[f64]) -> f64 {
    debug_assert_eq!(emb_u.len(), emb_v.len());
    let z: f64 = emb_u.iter().zip(emb_v).map(|(a, b)| a * b).sum();
    sigmoid(z)
}

/// Copy gradients from a backward pass into the model's parameter slots, in
/// declared order. Parameters the loss never touched receive exact zeros.
pub fn write_param_grads(
    tape: &Tape,
    grads: &super::tape::Gradients,
    bound: &BoundModel,
    model: &mut SageModel,
) {
    let vars = bound.param_vars();
    for (var, param) in vars.into_iter().zip(model.params_mut()) {
        let len = tape.value(var).len();
        param.set_grad(grads.dense(var, len));
    }
}

/// Restrict an adjacency to at most `fanout` in-neighbors per node, sampled
/// without replacement from the (seed, epoch, node) stream. Lists stay
/// sorted for deterministic aggregation.
pub fn sample_fanout(adj: &AdjList, fanout: usize, seed: u64, epoch: usize) -> AdjList {
    adj.iter()
        .enumerate()
        .map(|(v, sources)| {
            if sources.len() <= fanout {
                return sources.clone();
            }
            let mut rng = rng::rng_for(seed, &format!("fanout/{epoch}/{v}"));
            let mut pool = sources.clone();
            // Partial Fisher-Yates: the first `fanout` entries are the sample.
            for i in 0..fanout {
                let j = rng.gen_range(i..pool.len());
                pool.swap(i, j);
            }
            let mut sample = pool[..fanout].to_vec();
            sample.sort_unstable();
            sample
        })
        .collect()
}
