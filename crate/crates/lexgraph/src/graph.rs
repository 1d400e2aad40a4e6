//! Graph data model for legal citation networks.
//!
//! Nodes are cases plus optional characteristic nodes (one time node per
//! decision year, one act node per statute identifier). Edges are stored
//! once in canonical form -- `(citing, cited)` for citations, with the case
//! in the citing slot for characteristic edges -- and the message-passing
//! adjacency is derived from the canonical edges under one of three
//! orientation modes.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Earliest decision year accepted anywhere in the toolkit.
pub const MIN_YEAR: i32 = 1800;
/// Latest decision year accepted anywhere in the toolkit.
pub const MAX_YEAR: i32 = 2021;

/// Dense node index, assigned contiguously from 0 in insertion order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl std::fmt::Display for NodeId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Node variety: a judged case, a per-year time node, or a statute act node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Case,
    Time,
    Act,
}

/// A graph node. `key` is the external identifier (case id, year literal,
/// or act id) and is unique per kind. Only labeled dataset cases carry a
/// binary outcome label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: NodeId,
    pub kind: NodeKind,
    pub key: String,
    pub year: Option<i32>,
    pub label: Option<u8>,
}

/// One stored edge, independent of orientation mode. For characteristic
/// edges the case node always occupies the `citing` slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CanonicalEdge {
    pub citing: NodeId,
    pub cited: NodeId,
}

/// Rule that turns canonical edges into message-passing edges.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OrientationMode {
    /// Message flows citing -> cited.
    #[default]
    Directed,
    /// Message flows cited -> citing.
    RevDirected,
    /// Messages flow both ways.
    Undirected,
}

impl OrientationMode {
    pub const ALL: [OrientationMode; 3] = [
        OrientationMode::Directed,
        OrientationMode::Undirected,
        OrientationMode::RevDirected,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            OrientationMode::Directed => "directed",
            OrientationMode::RevDirected => "rev_directed",
            OrientationMode::Undirected => "undirected",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("node with kind {kind:?} and key {key:?} already exists")]
    DuplicateKey { kind: NodeKind, key: String },
    #[error("year {0} outside supported range [{MIN_YEAR}, {MAX_YEAR}]")]
    InvalidYear(i32),
    #[error("self-loop on node {0}")]
    SelfLoop(NodeId),
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
}

/// In-memory citation graph with derived message-passing adjacency.
///
/// Build phase is single-writer; after [`LegalGraph::derive_adjacency`] the
/// graph is meant to be shared read-only.
#[derive(Clone, Debug, Default)]
pub struct LegalGraph {
    nodes: Vec<Node>,
    key_index: HashMap<(NodeKind, String), NodeId>,
    canonical_edges: Vec<CanonicalEdge>,
    edge_set: HashSet<(NodeId, NodeId)>,
    mode: OrientationMode,
    in_adjacency: Vec<Vec<NodeId>>,
    adjacency_derived: bool,
}

impl LegalGraph {
    pub fn new() -> Self {
        Self::default()
    }

    /// Insert a node; ids are handed out contiguously from 0.
    pub fn add_node(
        &mut self,
        kind: NodeKind,
        key: &str,
        year: Option<i32>,
        label: Option<u8>,
    ) -> Result<NodeId, GraphError> {
        if let Some(y) = year {
            if !(MIN_YEAR..=MAX_YEAR).contains(&y) {
                return Err(GraphError::InvalidYear(y));
            }
        }
        if self.key_index.contains_key(&(kind, key.to_string())) {
            return Err(GraphError::DuplicateKey {
                kind,
                key: key.to_string(),
            });
        }
        let id = NodeId(self.nodes.len() as u32);
        self.nodes.push(Node {
            id,
            kind,
            key: key.to_string(),
            year,
            label,
        });
        self.key_index.insert((kind, key.to_string()), id);
        self.adjacency_derived = false;
        Ok(id)
    }

    /// Record a canonical edge. Duplicate `(citing, cited)` pairs are
    /// silently deduplicated; self-loops and unknown endpoints are errors.
    pub fn add_citation(&mut self, citing: NodeId, cited: NodeId) -> Result<(), GraphError> {
        if citing == cited {
            return Err(GraphError::SelfLoop(citing));
        }
        for id in [citing, cited] {
            if id.index() >= self.nodes.len() {
                return Err(GraphError::UnknownNode(id));
            }
        }
        if self.edge_set.insert((citing, cited)) {
            self.canonical_edges.push(CanonicalEdge { citing, cited });
            self.adjacency_derived = false;
        }
        Ok(())
    }

    /// Add one time node per distinct decision year and/or one act node per
    /// distinct act identifier, with a canonical edge from each case to its
    /// characteristic nodes. `acts_by_case` maps case nodes to the act ids
    /// they reference; time edges come from the case nodes' own years.
    ///
    /// Characteristic nodes are inserted in sorted key order so that two
    /// builds from the same documents assign identical ids.
    pub fn inject_characteristic_nodes(
        &mut self,
        acts_by_case: &[(NodeId, Vec<String>)],
        include_time: bool,
        include_acts: bool,
    ) {
        if include_time {
            let mut years: Vec<i32> = self
                .nodes
                .iter()
                .filter(|n| n.kind == NodeKind::Case)
                .filter_map(|n| n.year)
                .collect();
            years.sort_unstable();
            years.dedup();
            for year in years {
                self.add_node(NodeKind::Time, &year.to_string(), Some(year), None)
                    .expect("time node keys are distinct years");
            }
            let case_years: Vec<(NodeId, i32)> = self
                .nodes
                .iter()
                .filter(|n| n.kind == NodeKind::Case)
                .filter_map(|n| n.year.map(|y| (n.id, y)))
                .collect();
            for (case, year) in case_years {
                let time = self.key_index[&(NodeKind::Time, year.to_string())];
                self.add_citation(case, time)
                    .expect("case and time nodes are distinct and exist");
            }
        }
        if include_acts {
            let mut act_ids: Vec<&String> =
                acts_by_case.iter().flat_map(|(_, acts)| acts).collect();
            act_ids.sort_unstable();
            act_ids.dedup();
            let act_ids: Vec<String> = act_ids.into_iter().cloned().collect();
            for act in &act_ids {
                self.add_node(NodeKind::Act, act, None, None)
                    .expect("act node keys are deduplicated");
            }
            for (case, acts) in acts_by_case {
                for act in acts {
                    let act_node = self.key_index[&(NodeKind::Act, act.clone())];
                    self.add_citation(*case, act_node)
                        .expect("case and act nodes are distinct and exist");
                }
            }
        }
    }

    /// Derive the in-adjacency (per-node list of message sources) from the
    /// canonical edges under `mode`. Lists are sorted ascending and carry no
    /// parallel entries.
    pub fn derive_adjacency(&mut self, mode: OrientationMode) {
        self.mode = mode;
        self.in_adjacency = in_adjacency_of(self.nodes.len(), &self.canonical_edges, mode);
        self.adjacency_derived = true;
    }

    /// In-adjacency under `mode` with the given canonical edges excluded,
    /// without touching the graph's own derived state. Used to hold out
    /// evaluation edges from message passing.
    pub fn in_adjacency_excluding(
        &self,
        mode: OrientationMode,
        excluded: &HashSet<(NodeId, NodeId)>,
    ) -> Vec<Vec<NodeId>> {
        let kept: Vec<CanonicalEdge> = self
            .canonical_edges
            .iter()
            .filter(|e| !excluded.contains(&(e.citing, e.cited)))
            .copied()
            .collect();
        in_adjacency_of(self.nodes.len(), &kept, mode)
    }

    /// Sorted in-neighbor list of `v`; empty for isolated nodes.
    ///
    /// Requires [`LegalGraph::derive_adjacency`] to have run since the last
    /// mutation.
    pub fn in_neighbors(&self, v: NodeId) -> Result<&[NodeId], GraphError> {
        assert!(
            self.adjacency_derived,
            "derive_adjacency must run before in_neighbors"
        );
        self.in_adjacency
            .get(v.index())
            .map(|v| v.as_slice())
            .ok_or(GraphError::UnknownNode(v))
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> Result<&Node, GraphError> {
        self.nodes.get(id.index()).ok_or(GraphError::UnknownNode(id))
    }

    pub fn node_by_key(&self, kind: NodeKind, key: &str) -> Option<&Node> {
        self.key_index
            .get(&(kind, key.to_string()))
            .map(|id| &self.nodes[id.index()])
    }

    pub fn canonical_edges(&self) -> &[CanonicalEdge] {
        &self.canonical_edges
    }

    pub fn has_canonical_edge(&self, citing: NodeId, cited: NodeId) -> bool {
        self.edge_set.contains(&(citing, cited))
    }

    pub fn mode(&self) -> OrientationMode {
        self.mode
    }

    pub fn adjacency_derived(&self) -> bool {
        self.adjacency_derived
    }

    /// Full in-adjacency table, row i for NodeId i.
    pub fn in_adjacency(&self) -> &[Vec<NodeId>] {
        assert!(
            self.adjacency_derived,
            "derive_adjacency must run before in_adjacency"
        );
        &self.in_adjacency
    }

    pub fn count_kind(&self, kind: NodeKind) -> usize {
        self.nodes.iter().filter(|n| n.kind == kind).count()
    }

    /// Case-case canonical edges, i.e. true citations (characteristic edges
    /// excluded).
    pub fn citation_edges(&self) -> Vec<CanonicalEdge> {
        self.canonical_edges
            .iter()
            .filter(|e| {
                self.nodes[e.citing.index()].kind == NodeKind::Case
                    && self.nodes[e.cited.index()].kind == NodeKind::Case
            })
            .copied()
            .collect()
    }
}

fn in_adjacency_of(
    node_count: usize,
    edges: &[CanonicalEdge],
    mode: OrientationMode,
) -> Vec<Vec<NodeId>> {
    let mut adj: Vec<Vec<NodeId>> = vec![Vec::new(); node_count];
    for e in edges {
        match mode {
            OrientationMode::Directed => adj[e.cited.index()].push(e.citing),
            OrientationMode::RevDirected => adj[e.citing.index()].push(e.cited),
            OrientationMode::Undirected => {
                adj[e.cited.index()].push(e.citing);
                adj[e.citing.index()].push(e.cited);
            }
        }
    }
    for list in &mut adj {
        list.sort_unstable();
        list.dedup();
    }
    adj
}

#[cfg(test)]
mod tests {
    use super::*;

    fn case(g: &mut LegalGraph, key: &str) -> NodeId {
        g.add_node(NodeKind::Case, key, Some(1960), None).unwrap()
    }

    #[test]
    fn first_insertion_gets_id_zero() {
        let mut g = LegalGraph::new();
        let id = g
            .add_node(NodeKind::Case, "1960_15", Some(1960), Some(1))
            .unwrap();
        assert_eq!(id, NodeId(0));
        let n = g.node_by_key(NodeKind::Case, "1960_15").unwrap();
        assert_eq!(n.year, Some(1960));
        assert_eq!(n.label, Some(1));
    }

    #[test]
    fn duplicate_key_rejected_per_kind() {
        let mut g = LegalGraph::new();
        g.add_node(NodeKind::Time, "1960", Some(1960), None).unwrap();
        let err = g.add_node(NodeKind::Time, "1960", Some(1960), None);
        assert!(matches!(err, Err(GraphError::DuplicateKey { .. })));
        // Same key under a different kind is a different node.
        g.add_node(NodeKind::Case, "1960", Some(1960), None).unwrap();
    }

    #[test]
    fn year_bounds_enforced() {
        let mut g = LegalGraph::new();
        assert_eq!(
            g.add_node(NodeKind::Case, "x", Some(1799), None),
            Err(GraphError::InvalidYear(1799))
        );
        assert_eq!(
            g.add_node(NodeKind::Case, "y", Some(2022), None),
            Err(GraphError::InvalidYear(2022))
        );
        g.add_node(NodeKind::Case, "z", Some(1800), None).unwrap();
        g.add_node(NodeKind::Case, "w", Some(2021), None).unwrap();
    }

    #[test]
    fn extension_cases_carry_no_label() {
        let mut g = LegalGraph::new();
        for i in 0..24_907 {
            g.add_node(NodeKind::Case, &format!("ext_{i}"), Some(1900), None)
                .unwrap();
        }
        assert_eq!(g.node_count(), 24_907);
        assert!(g.nodes().iter().all(|n| n.label.is_none()));
    }

    #[test]
    fn duplicate_citation_dedups() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        let b = case(&mut g, "b");
        g.add_citation(a, b).unwrap();
        g.add_citation(a, b).unwrap();
        assert_eq!(g.canonical_edges().len(), 1);
    }

    #[test]
    fn canonical_direction_matters() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        let b = case(&mut g, "b");
        g.add_citation(a, b).unwrap();
        g.add_citation(b, a).unwrap();
        assert_eq!(g.canonical_edges().len(), 2);
    }

    #[test]
    fn self_loop_and_unknown_node_rejected() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        assert_eq!(g.add_citation(a, a), Err(GraphError::SelfLoop(a)));
        assert_eq!(
            g.add_citation(a, NodeId(9)),
            Err(GraphError::UnknownNode(NodeId(9)))
        );
    }

    #[test]
    fn orientation_modes_on_single_edge() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        let b = case(&mut g, "b");
        g.add_citation(a, b).unwrap();

        g.derive_adjacency(OrientationMode::Directed);
        assert_eq!(g.in_neighbors(b).unwrap(), &[a]);
        assert!(g.in_neighbors(a).unwrap().is_empty());

        g.derive_adjacency(OrientationMode::RevDirected);
        assert_eq!(g.in_neighbors(a).unwrap(), &[b]);
        assert!(g.in_neighbors(b).unwrap().is_empty());

        g.derive_adjacency(OrientationMode::Undirected);
        assert_eq!(g.in_neighbors(a).unwrap(), &[b]);
        assert_eq!(g.in_neighbors(b).unwrap(), &[a]);
    }

    #[test]
    fn star_in_neighbors_sorted() {
        let mut g = LegalGraph::new();
        let hub = case(&mut g, "hub");
        let mut citers = Vec::new();
        for i in 0..5 {
            citers.push(case(&mut g, &format!("c{i}")));
        }
        // Insert citations in scrambled order.
        for &i in &[3usize, 0, 4, 1, 2] {
            g.add_citation(citers[i], hub).unwrap();
        }
        g.derive_adjacency(OrientationMode::Directed);
        let got = g.in_neighbors(hub).unwrap();
        assert_eq!(got, &citers[..]);
        assert!(got.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn isolated_node_has_no_neighbors() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        g.derive_adjacency(OrientationMode::Undirected);
        assert!(g.in_neighbors(a).unwrap().is_empty());
    }

    #[test]
    fn unknown_node_lookups_error() {
        let mut g = LegalGraph::new();
        case(&mut g, "a");
        g.derive_adjacency(OrientationMode::Directed);
        assert_eq!(
            g.in_neighbors(NodeId(5)),
            Err(GraphError::UnknownNode(NodeId(5)))
        );
        assert!(matches!(g.node(NodeId(5)), Err(GraphError::UnknownNode(_))));
        assert!(g.node_by_key(NodeKind::Case, "missing").is_none());
    }

    #[test]
    fn time_injection_one_node_per_year() {
        let mut g = LegalGraph::new();
        for i in 0..3 {
            g.add_node(NodeKind::Case, &format!("c{i}"), Some(1960), None)
                .unwrap();
        }
        g.inject_characteristic_nodes(&[], true, false);
        assert_eq!(g.count_kind(NodeKind::Time), 1);
        let time = g.node_by_key(NodeKind::Time, "1960").unwrap().id;
        g.derive_adjacency(OrientationMode::Directed);
        assert_eq!(g.in_neighbors(time).unwrap().len(), 3);
    }

    #[test]
    fn injection_flags_off_adds_nothing() {
        let mut g = LegalGraph::new();
        case(&mut g, "a");
        case(&mut g, "b");
        g.inject_characteristic_nodes(&[(NodeId(0), vec!["IPC-302".into()])], false, false);
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.count_kind(NodeKind::Time), 0);
        assert_eq!(g.count_kind(NodeKind::Act), 0);
    }

    #[test]
    fn shared_act_single_node_two_edges() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        let b = case(&mut g, "b");
        g.inject_characteristic_nodes(
            &[
                (a, vec!["IPC-302".into()]),
                (b, vec!["IPC-302".into()]),
            ],
            false,
            true,
        );
        assert_eq!(g.count_kind(NodeKind::Act), 1);
        let act = g.node_by_key(NodeKind::Act, "IPC-302").unwrap().id;
        // Case occupies the citing slot of characteristic edges.
        assert!(g.has_canonical_edge(a, act));
        assert!(g.has_canonical_edge(b, act));
        assert!(!g.has_canonical_edge(act, a));
    }

    #[test]
    fn characteristic_edges_follow_orientation_mode() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        g.inject_characteristic_nodes(&[(a, vec!["X".into()])], true, true);
        let time = g.node_by_key(NodeKind::Time, "1960").unwrap().id;
        let act = g.node_by_key(NodeKind::Act, "X").unwrap().id;

        g.derive_adjacency(OrientationMode::RevDirected);
        let mut expect = [time, act];
        expect.sort_unstable();
        assert_eq!(g.in_neighbors(a).unwrap(), &expect[..]);
    }

    #[test]
    fn citation_edges_excludes_characteristic() {
        let mut g = LegalGraph::new();
        let a = case(&mut g, "a");
        let b = case(&mut g, "b");
        g.add_citation(a, b).unwrap();
        g.inject_characteristic_nodes(&[(a, vec!["X".into()])], true, true);
        let cites = g.citation_edges();
        assert_eq!(cites.len(), 1);
        assert_eq!(cites[0], CanonicalEdge { citing: a, cited: b });
    }

    #[test]
    fn node_count_arithmetic() {
        let mut g = LegalGraph::new();
        let mut acts = Vec::new();
        for (i, year) in [1960, 1960, 1975].iter().enumerate() {
            let id = g
                .add_node(NodeKind::Case, &format!("c{i}"), Some(*year), None)
                .unwrap();
            acts.push((id, vec![format!("act{}", i % 2)]));
        }
        g.inject_characteristic_nodes(&acts, true, true);
        // 3 cases + 2 distinct years + 2 distinct acts
        assert_eq!(g.node_count(), 3 + 2 + 2);
    }
}
