//! Negative edge sampling for the link prediction task.

use rand::Rng;

use super::SageError;
use crate::graph::{LegalGraph, NodeId, NodeKind};
use crate::rng;

/// Uniformly sample `count` distinct unordered case-node pairs (u, v) with
/// u != v such that neither canonical orientation of the pair is an edge.
/// Rejection sampling, deterministic per seed.
pub fn sample_negative_edges(
    graph: &LegalGraph,
    count: usize,
    seed: u64,
) -> Result<Vec<(NodeId, NodeId)>, SageError> {
    if count == 0 {
        return Ok(Vec::new());
    }
    let cases: Vec<NodeId> = graph
        .nodes()
        .iter()
        .filter(|n| n.kind == NodeKind::Case)
        .map(|n| n.id)
        .collect();
    if cases.len() < 2 {
        return Err(SageError::Exhausted {
            wanted: count,
            found: 0,
        });
    }

    let mut rng = rng::rng_for(seed, "negative_edges");
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::with_capacity(count);
    let max_attempts = 100 * count + 1000;

    for _ in 0..max_attempts {
        if out.len() == count {
            break;
        }
        let u = cases[rng.gen_range(0..cases.len())];
        let v = cases[rng.gen_range(0..cases.len())];
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        if seen.contains(&key)
            || graph.has_canonical_edge(u, v)
            || graph.has_canonical_edge(v, u)
        {
            continue;
        }
        seen.insert(key);
        out.push((u, v));
    }

    if out.len() < count {
        return Err(SageError::Exhausted {
            wanted: count,
            found: out.len(),
        });
    }
    Ok(out)
}
