//! Disjoint community detection by greedy modularity agglomeration, and role
//! inference from member profiles.

mod roles;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::graph::{NodeId, SocialGraph};
use crate::scalar::{Ordered, Scalar};

pub use roles::{
    community_report, infer_roles, report_csv, Category, CategoryMap, CommunityRole, ReportRow,
    RoleConfig, Vote,
};

#[derive(Debug, Error)]
pub enum CommunityError {
    #[error("node {0} is not assigned to any community")]
    Uncovered(NodeId),
    #[error("partition assigns node {0}, which is not in the graph")]
    UnknownNode(NodeId),
    #[error("partition line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid category map: {0}")]
    Categories(String),
}

/// One agglomeration step: `absorbed` was merged into `kept`. Community ids
/// are the dense index of their smallest member at the time of the merge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeStep<T> {
    pub kept: usize,
    pub absorbed: usize,
    pub delta_q: T,
    pub q_after: T,
    /// Another pair offered the same gain, so the id tie-break chose this one
    /// and the result may depend on node numbering.
    pub tied: bool,
}

/// Disjoint cover of a graph's nodes. Community ids are dense, numbered in
/// order of each community's smallest node id.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    assignment: BTreeMap<NodeId, usize>,
    modularity: T,
    merges: Vec<MergeStep<T>>,
}

impl<T: Scalar> Partition<T> {
    /// Builds a partition of `g` from an arbitrary labelling, renumbering
    /// communities canonically and computing its modularity.
    pub fn from_assignment(
        g: &SocialGraph,
        assignment: &BTreeMap<NodeId, usize>,
    ) -> Result<Self, CommunityError> {
        let labels = dense_labels(g, assignment)?;
        Ok(Self::from_labels(g, &labels))
    }

    fn from_labels(g: &SocialGraph, labels: &[usize]) -> Self {
        let labels = canonical(labels);
        let modularity = modularity_of_labels(g, &labels);
        Partition {
            assignment: g.node_ids().iter().copied().zip(labels).collect(),
            modularity,
            merges: Vec::new(),
        }
    }

    pub fn assignment(&self) -> &BTreeMap<NodeId, usize> {
        &self.assignment
    }

    pub fn community_of(&self, id: NodeId) -> Option<usize> {
        self.assignment.get(&id).copied()
    }

    pub fn modularity(&self) -> T {
        self.modularity
    }

    pub fn merges(&self) -> &[MergeStep<T>] {
        &self.merges
    }

    pub fn community_count(&self) -> usize {
        self.assignment.values().max().map_or(0, |m| m + 1)
    }

    /// Members of each community, in ascending id order.
    pub fn communities(&self) -> Vec<Vec<NodeId>> {
        let mut out = vec![Vec::new(); self.community_count()];
        for (&id, &c) in &self.assignment {
            out[c].push(id);
        }
        out
    }

    /// `node,community` with a header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,community\n");
        for (id, c) in &self.assignment {
            out.push_str(&format!("{id},{c}\n"));
        }
        out
    }

    /// Reads `node,community` rows and evaluates them against `g`.
    pub fn from_csv(g: &SocialGraph, text: &str) -> Result<Self, CommunityError> {
        let mut assignment = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("node")) {
                continue;
            }
            let perr = |msg: String| CommunityError::Parse { line: i + 1, msg };
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| perr("expected `node,community`".into()))?;
            let id: u64 = a
                .trim()
                .parse()
                .map_err(|_| perr(format!("bad node id `{a}`")))?;
            let c: usize = b
                .trim()
                .parse()
                .map_err(|_| perr(format!("bad community `{b}`")))?;
            assignment.insert(NodeId(id), c);
        }
        Self::from_assignment(g, &assignment)
    }
}

fn dense_labels(
    g: &SocialGraph,
    assignment: &BTreeMap<NodeId, usize>,
) -> Result<Vec<usize>, CommunityError> {
    if let Some(id) = assignment.keys().find(|id| !g.contains(**id)) {
        return Err(CommunityError::UnknownNode(*id));
    }
    g.node_ids()
        .iter()
        .map(|id| {
            assignment
                .get(id)
                .copied()
                .ok_or(CommunityError::Uncovered(*id))
        })
        .collect()
}

/// Renumbers labels by first appearance.
fn canonical(labels: &[usize]) -> Vec<usize> {
    let mut map = BTreeMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

fn modularity_of_labels<T: Scalar>(g: &SocialGraph, labels: &[usize]) -> T {
    let m = g.edge_count();
    if m == 0 {
        return T::zero();
    }
    let k = labels.iter().max().map_or(0, |x| x + 1);
    let mut internal = vec![0usize; k];
    let mut degree = vec![0usize; k];
    for v in 0..g.node_count() {
        degree[labels[v]] += g.degree(v);
    }
    for (u, v) in g.index_edges() {
        if labels[u] == labels[v] {
            internal[labels[u]] += 1;
        }
    }
    let mt = T::from_count(m);
    let two_m = T::from_count(2 * m);
    internal.iter().zip(&degree).fold(T::zero(), |q, (&l, &d)| {
        let a = T::from_count(d) / two_m;
        q + T::from_count(l) / mt - a * a
    })
}

/// `Q = sum_c (e_cc - a_c^2)`, with `e_cc` the fraction of edges inside `c`
/// and `a_c` the fraction of edge endpoints in `c`. Zero on an edgeless
/// graph.
pub fn modularity<T: Scalar>(
    g: &SocialGraph,
    assignment: &BTreeMap<NodeId, usize>,
) -> Result<T, CommunityError> {
    Ok(modularity_of_labels(g, &dense_labels(g, assignment)?))
}

/// Greedy agglomerative modularity maximization. Starts from singletons and
/// repeatedly merges the adjacent pair with the largest gain while the gain
/// is positive. Ties go to the smallest `(i, j)` id pair and the smaller id
/// survives. Isolated nodes stay singletons; an edgeless graph yields all
/// singletons with `Q = 0`.
pub fn detect_communities<T: Scalar>(g: &SocialGraph) -> Partition<T> {
    let n = g.node_count();
    let m = g.edge_count();
    if m == 0 {
        return Partition::from_labels(g, &(0..n).collect::<Vec<_>>());
    }
    let two_m = T::from_count(2 * m);
    let half_edge = T::one() / two_m;
    let two = T::lit(2.0);
    let mut a: Vec<T> = (0..n).map(|v| T::from_count(g.degree(v)) / two_m).collect();
    // e[i][j]: half the fraction of edges running between communities i and j.
    let mut e: Vec<BTreeMap<usize, T>> = (0..n)
        .map(|v| g.neighbors(v).iter().map(|&w| (w, half_edge)).collect())
        .collect();
    let gain = |eij: T, ai: T, aj: T| two * (eij - ai * aj);
    let mut heap: BTreeSet<(Reverse<Ordered<T>>, usize, usize)> = BTreeSet::new();
    for (i, row) in e.iter().enumerate() {
        for (&j, &eij) in row.range(i + 1..) {
            heap.insert((Reverse(Ordered(gain(eij, a[i], a[j]))), i, j));
        }
    }
    let mut q = a.iter().fold(T::zero(), |acc, &x| acc - x * x);
    let mut parent: Vec<usize> = (0..n).collect();
    let mut merges = Vec::new();
    while let Some(&(Reverse(Ordered(dq)), i, j)) = heap.first() {
        if dq <= T::zero() {
            break;
        }
        let tied = heap
            .iter()
            .nth(1)
            .is_some_and(|&(Reverse(Ordered(next)), _, _)| next == dq);
        // Drop stale pairs touching either side.
        for (&k, &eik) in &e[i] {
            let (x, y) = (i.min(k), i.max(k));
            heap.remove(&(Reverse(Ordered(gain(eik, a[x], a[y]))), x, y));
        }
        for (&k, &ejk) in &e[j] {
            let (x, y) = (j.min(k), j.max(k));
            heap.remove(&(Reverse(Ordered(gain(ejk, a[x], a[y]))), x, y));
        }
        let row_j = std::mem::take(&mut e[j]);
        for (&k, &ejk) in &row_j {
            if k == i {
                continue;
            }
            let entry = e[i].entry(k).or_insert(T::zero());
            *entry = *entry + ejk;
            let eik = *entry;
            let row_k = &mut e[k];
            row_k.remove(&j);
            row_k.insert(i, eik);
        }
        e[i].remove(&j);
        a[i] = a[i] + a[j];
        a[j] = T::zero();
        for (&k, &eik) in &e[i] {
            let (x, y) = (i.min(k), i.max(k));
            heap.insert((Reverse(Ordered(gain(eik, a[x], a[y]))), x, y));
        }
        q = q + dq;
        parent[j] = i;
        merges.push(MergeStep {
            kept: i,
            absorbed: j,
            delta_q: dq,
            q_after: q,
            tied,
        });
    }
    let root = |mut v: usize| {
        while parent[v] != v {
            v = parent[v];
        }
        v
    };
    let labels: Vec<usize> = (0..n).map(root).collect();
    let mut p = Partition::from_labels(g, &labels);
    p.merges = merges;
    p
}

/// Adjusted Rand index between two labellings of the same items. Returns 1
/// when both are identical even in the degenerate case where the index is
/// otherwise undefined.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labellings must cover the same items");
    let n = a.len();
    let c2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut rows: BTreeMap<usize, usize> = BTreeMap::new();
    let mut cols: BTreeMap<usize, usize> = BTreeMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&v| c2(v)).sum();
    let sa: f64 = rows.values().map(|&v| c2(v)).sum();
    let sb: f64 = cols.values().map(|&v| c2(v)).sum();
    let total = c2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sa * sb / total;
    let max = (sa + sb) / 2.0;
    if max == expected {
        return if canonical(a) == canonical(b) {
            1.0
        } else {
            0.0
        };
    }
    (index - expected) / (max - expected)
}
