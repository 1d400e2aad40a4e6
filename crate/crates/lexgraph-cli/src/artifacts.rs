//! Artifact persistence: atomic writes, content digests, the graph
//! checkpoint format, and the CSV emitters for plot data.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use lexgraph::corpus::{CaseDoc, SplitHint};
use lexgraph::graph::{LegalGraph, NodeKind, OrientationMode};
use lexgraph::tasks::{EvalReport, GridReport};

/// Write bytes via a temp file and rename, so readers never observe a
/// partial artifact.
pub fn atomic_write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    let tmp = path.with_extension(format!(
        "{}.tmp",
        path.extension().and_then(|e| e.to_str()).unwrap_or("out")
    ));
    std::fs::write(&tmp, bytes).with_context(|| format!("writing {}", tmp.display()))?;
    std::fs::rename(&tmp, path).with_context(|| format!("renaming to {}", path.display()))?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    atomic_write(path, text.as_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        let _ = write!(out, "{b:02x}");
    }
    out
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).with_context(|| format!("digesting {}", path.display()))?;
    Ok(sha256_hex(&bytes))
}

// ── Graph checkpoint ─────────────────────────────────────────────

const GRAPH_FORMAT: &str = "lexgraph-graph";

#[derive(Serialize, Deserialize)]
struct GraphCheckpoint {
    format: String,
    version: u32,
    mode: OrientationMode,
    include_time: bool,
    include_acts: bool,
    nodes: Vec<CheckpointNode>,
    edges: Vec<(u32, u32)>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointNode {
    kind: NodeKind,
    key: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    year: Option<i32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split: Option<SplitHint>,
}

/// Persist a graph (with per-case split hints from `docs`) as JSON.
pub fn save_graph(
    path: &Path,
    graph: &LegalGraph,
    include_time: bool,
    include_acts: bool,
    docs: &[CaseDoc],
) -> Result<()> {
    let hints: HashMap<&str, SplitHint> = docs
        .iter()
        .filter_map(|d| d.split_hint.map(|h| (d.case_id.as_str(), h)))
        .collect();
    let checkpoint = GraphCheckpoint {
        format: GRAPH_FORMAT.to_string(),
        version: 1,
        mode: graph.mode(),
        include_time,
        include_acts,
        nodes: graph
            .nodes()
            .iter()
            .map(|n| CheckpointNode {
                kind: n.kind,
                key: n.key.clone(),
                year: n.year,
                label: n.label,
                split: match n.kind {
                    NodeKind::Case => hints.get(n.key.as_str()).copied(),
                    _ => None,
                },
            })
            .collect(),
        edges: graph
            .canonical_edges()
            .iter()
            .map(|e| (e.citing.0, e.cited.0))
            .collect(),
    };
    write_json(path, &checkpoint)
}

/// Everything a downstream command needs from a graph checkpoint. The
/// reconstructed documents carry id/year/label/split only.
pub struct LoadedGraph {
    pub graph: LegalGraph,
    pub docs: Vec<CaseDoc>,
    pub include_time: bool,
    pub include_acts: bool,
}

pub fn load_graph(path: &Path) -> Result<LoadedGraph> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let checkpoint: GraphCheckpoint =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if checkpoint.format != GRAPH_FORMAT {
        bail!("{} is not a graph checkpoint", path.display());
    }
    if checkpoint.version != 1 {
        bail!("unsupported graph checkpoint version {}", checkpoint.version);
    }

    let mut graph = LegalGraph::new();
    let mut docs = Vec::new();
    for node in &checkpoint.nodes {
        graph
            .add_node(node.kind, &node.key, node.year, node.label)
            .map_err(|e| anyhow::anyhow!("checkpoint node {:?}: {e}", node.key))?;
        if node.kind == NodeKind::Case {
            let mut doc = CaseDoc::new(
                node.key.clone(),
                node.year.context("case node without year")?,
            );
            doc.label = node.label;
            doc.split_hint = node.split;
            docs.push(doc);
        }
    }
    for &(citing, cited) in &checkpoint.edges {
        graph
            .add_citation(
                lexgraph::graph::NodeId(citing),
                lexgraph::graph::NodeId(cited),
            )
            .map_err(|e| anyhow::anyhow!("checkpoint edge ({citing},{cited}): {e}"))?;
    }
    graph.derive_adjacency(checkpoint.mode);
    Ok(LoadedGraph {
        graph,
        docs,
        include_time: checkpoint.include_time,
        include_acts: checkpoint.include_acts,
    })
}

// ── CSV emitters ─────────────────────────────────────────────────

pub fn histogram_csv(rows: &[lexgraph::corpus::HistogramRow]) -> String {
    let mut out = String::from("range_start,range_end,count,cumulative\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            row.range.start, row.range.end, row.count, row.cumulative
        );
    }
    out
}

/// One row per (cutoff, bucket) of a temporal classification sweep.
pub fn sweep_series_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(
        "regime,mode,time,acts,direction,cutoff,bucket_start,bucket_end,n,macro_f1,f1_label0,f1_label1\n",
    );
    for report in reports {
        let (direction, cutoff) = split_key(report);
        for bucket in &report.buckets {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{},{}",
                report.regime.as_str(),
                report.mode.as_str(),
                report.include_time,
                report.include_acts,
                direction,
                cutoff,
                bucket.range.start,
                bucket.range.end,
                bucket.n,
                bucket.macro_f1,
                bucket.f1_label0,
                bucket.f1_label1,
            );
        }
    }
    out
}

/// One row per (cutoff, bucket) of a link prediction run.
pub fn linkpred_series_csv(reports: &[EvalReport]) -> String {
    let mut out = String::from(
        "regime,mode,time,acts,direction,cutoff,bucket_start,bucket_end,n_pos,n_neg,auc\n",
    );
    for report in reports {
        let (direction, cutoff) = split_key(report);
        for bucket in &report.roc_buckets {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{},{}",
                report.regime.as_str(),
                report.mode.as_str(),
                report.include_time,
                report.include_acts,
                direction,
                cutoff,
                bucket.range.start,
                bucket.range.end,
                bucket.n_pos,
                bucket.n_neg,
                bucket.auc,
            );
        }
    }
    out
}

/// Operating points of one bucket's ROC curve.
pub fn roc_csv(points: &[lexgraph::metrics::RocPoint]) -> String {
    let mut out = String::from("fpr,tpr\n");
    for p in points {
        let _ = writeln!(out, "{},{}", p.fpr, p.tpr);
    }
    out
}

/// All 48 grid cells.
pub fn grid_csv(report: &GridReport) -> String {
    let mut out =
        String::from("regime,mode,acts,time,seed,macro_f1,macro_precision,macro_recall,error\n");
    for cell in &report.cells {
        let fmt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            cell.regime.as_str(),
            cell.mode.as_str(),
            cell.include_acts,
            cell.include_time,
            cell.seed,
            fmt(cell.macro_f1),
            fmt(cell.macro_precision),
            fmt(cell.macro_recall),
            cell.error.clone().unwrap_or_default(),
        );
    }
    out
}

fn split_key(report: &EvalReport) -> (String, String) {
    match report.split {
        lexgraph::corpus::SplitPlan::Temporal {
            direction,
            cutoff_year,
            ..
        } => (direction.as_str().to_string(), cutoff_year.to_string()),
        lexgraph::corpus::SplitPlan::Simple => ("simple".to_string(), String::new()),
    }
}

/// File name for a per-bucket ROC curve.
pub fn roc_file_name(
    direction: lexgraph::corpus::Direction,
    cutoff: i32,
    range: lexgraph::corpus::YearRange,
) -> PathBuf {
    PathBuf::from(format!(
        "roc_{}_{}_{}_{}.csv",
        direction.as_str(),
        cutoff,
        range.start,
        range.end
    ))
}
