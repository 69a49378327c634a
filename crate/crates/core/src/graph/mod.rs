//! Undirected social graph with per-node profile and attribute storage.
//!
//! Node ids are arbitrary non-negative integers. Internally every node also
//! has a dense index in `[0, |V|)` that follows ascending id order; all
//! numeric kernels iterate in that order.

mod anonymize;
pub mod io;
mod labels;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use anonymize::{anonymize, IdMap};
pub use labels::{Label, LabelTable};

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize, Default,
)]
#[serde(transparent)]
pub struct NodeId(pub u64);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl From<u64> for NodeId {
    fn from(v: u64) -> Self {
        NodeId(v)
    }
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("self-loop on node {id}{}", line.map(|l| format!(" (line {l})")).unwrap_or_default())]
    SelfLoop { id: NodeId, line: Option<usize> },
    #[error("profile references node {0} which is not declared in the edge list")]
    DanglingProfile(NodeId),
    #[error("label references unknown node {0}")]
    UnknownLabel(NodeId),
    #[error("invalid profile for node {id}: {msg}")]
    InvalidProfile { id: NodeId, msg: String },
    #[error("unsupported format `{0}`")]
    UnsupportedFormat(String),
    #[error("markup error: {0}")]
    Markup(String),
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// One social-network account.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Profile {
    pub id: NodeId,
    pub name: Option<String>,
    pub employers: Vec<String>,
    pub position: Option<String>,
    pub location: Option<String>,
    /// Ground truth, when known.
    pub is_org_member: Option<bool>,
    /// Ground truth, when known.
    pub is_manager: Option<bool>,
    pub discloses_position: bool,
}

impl Profile {
    pub fn new(id: NodeId) -> Self {
        Profile {
            id,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        if self.discloses_position && self.position.is_none() {
            return Err(GraphError::InvalidProfile {
                id: self.id,
                msg: "discloses_position set without a position".into(),
            });
        }
        if self.is_manager == Some(true) && self.is_org_member != Some(true) {
            return Err(GraphError::InvalidProfile {
                id: self.id,
                msg: "manager flag set on a non-member".into(),
            });
        }
        Ok(())
    }
}

/// Immutable undirected simple graph. Build one with [`GraphBuilder`].
#[derive(Debug, Clone, Default)]
pub struct SocialGraph {
    ids: Vec<NodeId>,
    index: HashMap<NodeId, usize>,
    adj: Vec<Vec<usize>>,
    edge_count: usize,
    profiles: BTreeMap<NodeId, Profile>,
    attrs: BTreeMap<NodeId, BTreeMap<String, String>>,
}

impl PartialEq for SocialGraph {
    fn eq(&self, other: &Self) -> bool {
        self.ids == other.ids
            && self.adj == other.adj
            && self.profiles == other.profiles
            && self.attrs == other.attrs
    }
}

impl SocialGraph {
    pub fn node_count(&self) -> usize {
        self.ids.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Node ids in ascending order; position in this slice is the dense index.
    pub fn node_ids(&self) -> &[NodeId] {
        &self.ids
    }

    pub fn index_of(&self, id: NodeId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn id_at(&self, idx: usize) -> NodeId {
        self.ids[idx]
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.index.contains_key(&id)
    }

    /// Sorted dense neighbor indices of the node at `idx`.
    pub fn neighbors(&self, idx: usize) -> &[usize] {
        &self.adj[idx]
    }

    pub fn degree(&self, idx: usize) -> usize {
        self.adj[idx].len()
    }

    pub fn neighbor_ids(&self, id: NodeId) -> Vec<NodeId> {
        match self.index_of(id) {
            Some(i) => self.adj[i].iter().map(|&j| self.ids[j]).collect(),
            None => Vec::new(),
        }
    }

    pub fn has_edge(&self, u: NodeId, v: NodeId) -> bool {
        match (self.index_of(u), self.index_of(v)) {
            (Some(a), Some(b)) => self.adj[a].binary_search(&b).is_ok(),
            _ => false,
        }
    }

    /// Edges as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (NodeId, NodeId)> + '_ {
        self.adj.iter().enumerate().flat_map(move |(i, nbrs)| {
            nbrs.iter()
                .filter(move |&&j| j > i)
                .map(move |&j| (self.ids[i], self.ids[j]))
        })
    }

    /// Edges as dense index pairs `(i, j)` with `i < j`.
    pub fn index_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, nbrs)| nbrs.iter().filter(move |&&j| j > i).map(move |&j| (i, j)))
    }

    pub fn degree_sequence(&self) -> Vec<usize> {
        let mut d: Vec<usize> = self.adj.iter().map(Vec::len).collect();
        d.sort_unstable();
        d
    }

    pub fn profile(&self, id: NodeId) -> Option<&Profile> {
        self.profiles.get(&id)
    }

    pub fn profiles(&self) -> impl Iterator<Item = &Profile> {
        self.profiles.values()
    }

    pub fn attr(&self, id: NodeId, key: &str) -> Option<&str> {
        self.attrs.get(&id)?.get(key).map(String::as_str)
    }

    pub fn attrs(&self, id: NodeId) -> Option<&BTreeMap<String, String>> {
        self.attrs.get(&id)
    }

    /// Sets a free-form node attribute (community id, predicted role, ...).
    /// Structure is unaffected.
    pub fn set_attr(&mut self, id: NodeId, key: impl Into<String>, value: impl Into<String>) {
        if self.contains(id) {
            self.attrs
                .entry(id)
                .or_default()
                .insert(key.into(), value.into());
        }
    }

    /// Subgraph induced on `keep`; ids not in the graph are ignored.
    pub fn induced_subgraph<'a>(&self, keep: impl IntoIterator<Item = &'a NodeId>) -> SocialGraph {
        let keep: BTreeSet<NodeId> = keep
            .into_iter()
            .copied()
            .filter(|id| self.contains(*id))
            .collect();
        let mut b = GraphBuilder::new();
        for &id in &keep {
            b.add_node(id);
            if let Some(p) = self.profiles.get(&id) {
                b.profiles.insert(id, p.clone());
            }
            if let Some(a) = self.attrs.get(&id) {
                b.attrs.insert(id, a.clone());
            }
        }
        for (u, v) in self.edges() {
            if keep.contains(&u) && keep.contains(&v) {
                b.edges.insert((u, v));
            }
        }
        b.build()
    }

    pub fn builder(&self) -> GraphBuilder {
        GraphBuilder {
            nodes: self.ids.iter().copied().collect(),
            edges: self.edges().collect(),
            profiles: self.profiles.clone(),
            attrs: self.attrs.clone(),
        }
    }
}

/// Accumulates nodes, edges and profiles; duplicate edges collapse silently.
#[derive(Debug, Clone, Default)]
pub struct GraphBuilder {
    nodes: BTreeSet<NodeId>,
    edges: BTreeSet<(NodeId, NodeId)>,
    profiles: BTreeMap<NodeId, Profile>,
    attrs: BTreeMap<NodeId, BTreeMap<String, String>>,
}

impl GraphBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, id: NodeId) -> &mut Self {
        self.nodes.insert(id);
        self
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.nodes.contains(&id)
    }

    /// Returns `Ok(false)` when the edge was already present.
    pub fn add_edge(&mut self, u: NodeId, v: NodeId) -> Result<bool, GraphError> {
        if u == v {
            return Err(GraphError::SelfLoop { id: u, line: None });
        }
        self.nodes.insert(u);
        self.nodes.insert(v);
        Ok(self.edges.insert((u.min(v), u.max(v))))
    }

    /// Adds (or replaces) the profile of a node, declaring the node if needed.
    pub fn add_profile(&mut self, profile: Profile) -> Result<&mut Self, GraphError> {
        profile.validate()?;
        self.nodes.insert(profile.id);
        self.profiles.insert(profile.id, profile);
        Ok(self)
    }

    pub fn set_attr(&mut self, id: NodeId, key: impl Into<String>, value: impl Into<String>) {
        self.nodes.insert(id);
        self.attrs
            .entry(id)
            .or_default()
            .insert(key.into(), value.into());
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn build(self) -> SocialGraph {
        let ids: Vec<NodeId> = self.nodes.into_iter().collect();
        let index: HashMap<NodeId, usize> =
            ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for &(u, v) in &self.edges {
            let (a, b) = (index[&u], index[&v]);
            adj[a].push(b);
            adj[b].push(a);
        }
        for nbrs in &mut adj {
            nbrs.sort_unstable();
        }
        SocialGraph {
            ids,
            index,
            adj,
            edge_count: self.edges.len(),
            profiles: self.profiles,
            attrs: self.attrs,
        }
    }
}

/// Builds a graph on ids `0..n` from index pairs. Handy for tests and
/// generators.
pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<SocialGraph, GraphError> {
    let mut b = GraphBuilder::new();
    for i in 0..n {
        b.add_node(NodeId(i as u64));
    }
    for &(u, v) in edges {
        b.add_edge(NodeId(u as u64), NodeId(v as u64))?;
    }
    Ok(b.build())
}
