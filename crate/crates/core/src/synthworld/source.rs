use std::collections::BTreeSet;
use std::sync::atomic::{AtomicU64, Ordering};

use thiserror::Error;

use crate::graph::{NodeId, Profile, SocialGraph};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FetchedPage {
    pub profile: Profile,
    pub friends: Vec<NodeId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FetchError {
    /// Unknown, deleted or private account.
    #[error("profile {0} not found")]
    NotFound(NodeId),
}

/// Where a crawler downloads profile pages from.
pub trait FetchSource: Sync {
    /// Profile and friend list of `id`. Repeated calls return the same page.
    fn fetch_profile(&self, id: NodeId) -> Result<FetchedPage, FetchError>;

    /// Number of fetch requests served so far, failed ones included.
    fn fetch_count(&self) -> u64;

    /// Identifies the underlying network, so saved crawl state cannot be
    /// resumed against a different one.
    fn fingerprint(&self) -> String;
}

/// Serves pages straight from an in-memory graph.
#[derive(Debug)]
pub struct GraphSource<'g> {
    graph: &'g SocialGraph,
    fingerprint: String,
    unavailable: BTreeSet<NodeId>,
    counter: AtomicU64,
}

impl<'g> GraphSource<'g> {
    pub fn new(graph: &'g SocialGraph, fingerprint: impl Into<String>) -> Self {
        GraphSource {
            graph,
            fingerprint: fingerprint.into(),
            unavailable: BTreeSet::new(),
            counter: AtomicU64::new(0),
        }
    }

    /// Marks accounts that answer with not-found, as deleted or private
    /// profiles would.
    pub fn with_unavailable(mut self, ids: impl IntoIterator<Item = NodeId>) -> Self {
        self.unavailable.extend(ids);
        self
    }

    pub fn graph(&self) -> &SocialGraph {
        self.graph
    }
}

impl FetchSource for GraphSource<'_> {
    fn fetch_profile(&self, id: NodeId) -> Result<FetchedPage, FetchError> {
        self.counter.fetch_add(1, Ordering::SeqCst);
        if self.unavailable.contains(&id) || !self.graph.contains(id) {
            return Err(FetchError::NotFound(id));
        }
        let profile = self
            .graph
            .profile(id)
            .cloned()
            .unwrap_or_else(|| Profile::new(id));
        Ok(FetchedPage {
            profile,
            friends: self.graph.neighbor_ids(id),
        })
    }

    fn fetch_count(&self) -> u64 {
        self.counter.load(Ordering::SeqCst)
    }

    fn fingerprint(&self) -> String {
        self.fingerprint.clone()
    }
}
