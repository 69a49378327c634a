//! Homophily-guided organization crawler.
//!
//! The frontier is ordered by the number of already-confirmed organization
//! members adjacent to each candidate. A fetched profile that matches one of
//! the organization keywords is confirmed and its friends are expanded;
//! anything else is dropped without expansion.
//!
//! Two stopping rules exist: [`CrawlVersion::V1`] runs until the frontier is
//! empty; [`CrawlVersion::V2`] also stops once every queued candidate has at
//! most one confirmed friend and none of the last `window_size` fetches was a
//! member. A plain FIFO frontier ([`bfs_crawl`]) serves as the baseline.

mod frontier;
mod state;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{NodeId, Profile, SocialGraph};
use crate::synthworld::FetchSource;

pub use frontier::{Frontier, FrontierMode};
pub use state::{resume, save_state, CrawlState, STATE_FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum CrawlError {
    #[error("invalid crawl config: {0}")]
    Config(String),
    #[error("crawl state file is corrupt: {0}")]
    Corrupt(String),
    #[error("crawl state format version {found} is not supported (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("crawl state belongs to network {expected}, but the source is {found}")]
    SourceMismatch { expected: String, found: String },
    #[error("cannot access {path}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CrawlVersion {
    V1,
    V2,
}

impl std::str::FromStr for CrawlVersion {
    type Err = CrawlError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(CrawlVersion::V1),
            "v2" | "2" => Ok(CrawlVersion::V2),
            other => Err(CrawlError::Config(format!(
                "unknown crawler version `{other}`"
            ))),
        }
    }
}

fn default_window() -> usize {
    1000
}

fn default_width() -> usize {
    1
}

fn default_seed_priority() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrawlConfig {
    pub seeds: Vec<NodeId>,
    pub keywords: Vec<String>,
    pub version: CrawlVersion,
    #[serde(default = "default_window")]
    pub window_size: usize,
    #[serde(default)]
    pub max_fetches: Option<u64>,
    #[serde(default = "default_width")]
    pub concurrency_width: usize,
    /// Initial priority of seeds. The reference pseudocode enqueues seeds at
    /// 1; set 0 for the variant where seeds start at zero.
    #[serde(default = "default_seed_priority")]
    pub seed_priority: u32,
}

impl CrawlConfig {
    pub fn new(seeds: Vec<NodeId>, keywords: Vec<String>, version: CrawlVersion) -> Self {
        CrawlConfig {
            seeds,
            keywords,
            version,
            window_size: default_window(),
            max_fetches: None,
            concurrency_width: 1,
            seed_priority: 1,
        }
    }

    pub fn validate(&self) -> Result<(), CrawlError> {
        if self.seeds.is_empty() {
            return Err(CrawlError::Config("at least one seed is required".into()));
        }
        if self.keywords.iter().all(|k| normalize(k).is_empty()) {
            return Err(CrawlError::Config(
                "at least one non-blank keyword is required".into(),
            ));
        }
        if self.window_size == 0 {
            return Err(CrawlError::Config("window size must be at least 1".into()));
        }
        if self.concurrency_width == 0 {
            return Err(CrawlError::Config(
                "concurrency width must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Lower-cases and collapses runs of whitespace to one space.
pub fn normalize(s: &str) -> String {
    s.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

/// True iff some normalized keyword is a substring of a normalized employer,
/// position or name field.
pub fn keyword_match(profile: &Profile, keywords: &[String]) -> bool {
    let fields: Vec<String> = profile
        .employers
        .iter()
        .chain(profile.position.iter())
        .chain(profile.name.iter())
        .map(|f| normalize(f))
        .collect();
    keywords
        .iter()
        .map(|k| normalize(k))
        .filter(|k| !k.is_empty())
        .any(|k| fields.iter().any(|f| f.contains(&k)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    QueueEmpty,
    /// Stricter stopping rule of [`CrawlVersion::V2`].
    StaleFrontier,
    Budget,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlStats {
    pub fetched: u64,
    pub confirmed: u64,
    pub not_found: u64,
    pub precision: f64,
    pub truncated: bool,
    pub stop_reason: Option<StopReason>,
    pub queued_remaining: usize,
}

impl StopReason {
    pub fn as_str(self) -> &'static str {
        match self {
            StopReason::QueueEmpty => "queue_empty",
            StopReason::StaleFrontier => "stale_frontier",
            StopReason::Budget => "budget",
        }
    }
}

impl CrawlStats {
    /// One-row table with a header. Recall is reported when the true
    /// organization size is known.
    pub fn to_csv(&self, org_size: Option<usize>) -> String {
        let mut out = String::from(
            "fetched,confirmed,not_found,precision,truncated,stop_reason,queued_remaining",
        );
        if org_size.is_some() {
            out.push_str(",org_size,recall");
        }
        out.push('\n');
        out.push_str(&format!(
            "{},{},{},{:.6},{},{},{}",
            self.fetched,
            self.confirmed,
            self.not_found,
            self.precision,
            self.truncated,
            self.stop_reason.map_or("none", StopReason::as_str),
            self.queued_remaining
        ));
        if let Some(n) = org_size {
            out.push_str(&format!(
                ",{n},{:.6}",
                self.confirmed as f64 / n.max(1) as f64
            ));
        }
        out.push('\n');
        out
    }
}

#[derive(Debug, Clone)]
pub struct CrawlOutcome {
    /// Confirmed members and the friendships among them.
    pub graph: SocialGraph,
    pub stats: CrawlStats,
    pub state: CrawlState,
}

/// Runs the homophily crawl to completion.
pub fn crawl<S: FetchSource + ?Sized>(
    src: &S,
    cfg: &CrawlConfig,
) -> Result<CrawlOutcome, CrawlError> {
    let mut state = CrawlState::new(cfg.clone(), FrontierMode::Priority, src.fingerprint())?;
    state.run(src, None)?;
    Ok(state.into_outcome())
}

/// Same bookkeeping as [`crawl`] with a FIFO frontier.
pub fn bfs_crawl<S: FetchSource + ?Sized>(
    src: &S,
    cfg: &CrawlConfig,
) -> Result<CrawlOutcome, CrawlError> {
    let mut state = CrawlState::new(cfg.clone(), FrontierMode::Fifo, src.fingerprint())?;
    state.run(src, None)?;
    Ok(state.into_outcome())
}

/// Collects the ids of seeds, deduplicated in first-seen order.
pub(crate) fn dedup_seeds(seeds: &[NodeId]) -> Vec<NodeId> {
    let mut seen = BTreeSet::new();
    seeds.iter().copied().filter(|s| seen.insert(*s)).collect()
}
