//! Citation-graph learning toolkit for legal judgment prediction.
//!
//! The pipeline: ingest a JSONL case corpus ([`corpus`]), build a typed
//! citation graph with optional per-year time nodes and per-statute act
//! nodes ([`graph`]), attach node features under one of four embedding
//! regimes ([`features`]), train a from-scratch differentiable
//! mean-aggregation graph model for binary judgment prediction or citation
//! link prediction ([`sage`]), and evaluate with macro precision/recall/F1
//! and ROC/AUC ([`metrics`]) under simple or temporal splits. Experiment
//! drivers for grids, temporal sweeps, link prediction, and the
//! label-shuffle control live in [`tasks`]; fairness-motivated text
//! redaction in [`redact`]; synthetic validation corpora in [`synth`].

pub mod corpus;
pub mod features;
pub mod graph;
pub mod metrics;
pub mod redact;
pub mod rng;
pub mod sage;
pub mod synth;
pub mod tasks;
