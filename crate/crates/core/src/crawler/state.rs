use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::path::Path;
use std::sync::mpsc;

use serde::{Deserialize, Serialize};

use super::{
    dedup_seeds, keyword_match, CrawlConfig, CrawlError, CrawlOutcome, CrawlStats, CrawlVersion,
    Frontier, FrontierMode, StopReason,
};
use crate::graph::{GraphBuilder, NodeId, Profile, SocialGraph};
use crate::synthworld::{FetchError, FetchSource, FetchedPage};
use crate::util::sha256_hex;

pub const STATE_FORMAT_VERSION: u32 = 1;
const STATE_MAGIC: &str = "orgmine-crawl-state";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct ConfirmedPage {
    profile: Profile,
    friends: Vec<NodeId>,
}

/// Everything needed to continue a crawl: frontier, crawled set, confirmed
/// pages, the recent-outcome window and counters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrawlState {
    config: CrawlConfig,
    source_fingerprint: String,
    frontier: Frontier,
    crawled: BTreeSet<NodeId>,
    confirmed: BTreeMap<NodeId, ConfirmedPage>,
    /// Member / non-member outcome of the most recent fetches, oldest first.
    window: VecDeque<bool>,
    window_hits: usize,
    fetch_order: Vec<NodeId>,
    not_found: u64,
    stop: Option<StopReason>,
}

impl CrawlState {
    pub fn new(
        config: CrawlConfig,
        mode: FrontierMode,
        source_fingerprint: String,
    ) -> Result<Self, CrawlError> {
        config.validate()?;
        let mut frontier = Frontier::new(mode);
        for s in dedup_seeds(&config.seeds) {
            frontier.push(s, config.seed_priority);
        }
        Ok(CrawlState {
            config,
            source_fingerprint,
            frontier,
            crawled: BTreeSet::new(),
            confirmed: BTreeMap::new(),
            window: VecDeque::new(),
            window_hits: 0,
            fetch_order: Vec::new(),
            not_found: 0,
            stop: None,
        })
    }

    pub fn config(&self) -> &CrawlConfig {
        &self.config
    }

    pub fn frontier(&self) -> &Frontier {
        &self.frontier
    }

    pub fn crawled(&self) -> &BTreeSet<NodeId> {
        &self.crawled
    }

    pub fn confirmed(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.confirmed.keys().copied()
    }

    pub fn is_confirmed(&self, id: NodeId) -> bool {
        self.confirmed.contains_key(&id)
    }

    /// Ids in the order they were dequeued for fetching.
    pub fn fetch_order(&self) -> &[NodeId] {
        &self.fetch_order
    }

    pub fn fetch_count(&self) -> u64 {
        self.fetch_order.len() as u64
    }

    pub fn is_finished(&self) -> bool {
        self.stop.is_some()
    }

    pub fn source_fingerprint(&self) -> &str {
        &self.source_fingerprint
    }

    /// Dequeues the next candidate and marks it crawled, or records why the
    /// crawl is over.
    fn next_candidate(&mut self) -> Option<NodeId> {
        if self.stop.is_some() {
            return None;
        }
        if self.frontier.is_empty() {
            self.stop = Some(StopReason::QueueEmpty);
            return None;
        }
        if let Some(budget) = self.config.max_fetches {
            if self.fetch_count() >= budget {
                self.stop = Some(StopReason::Budget);
                return None;
            }
        }
        let (id, _) = self.frontier.pop()?;
        self.crawled.insert(id);
        self.fetch_order.push(id);
        Some(id)
    }

    fn apply(&mut self, result: Result<FetchedPage, FetchError>) {
        let member = match result {
            Err(FetchError::NotFound(_)) => {
                self.not_found += 1;
                false
            }
            Ok(page) => {
                if keyword_match(&page.profile, &self.config.keywords) {
                    for &f in &page.friends {
                        if self.crawled.contains(&f) {
                            continue;
                        }
                        if !self.frontier.increase(f) {
                            self.frontier.push(f, 1);
                        }
                    }
                    let id = page.profile.id;
                    self.confirmed.insert(
                        id,
                        ConfirmedPage {
                            profile: page.profile,
                            friends: page.friends,
                        },
                    );
                    true
                } else {
                    false
                }
            }
        };
        self.window.push_back(member);
        if member {
            self.window_hits += 1;
        }
        if self.window.len() > self.config.window_size {
            if self.window.pop_front() == Some(true) {
                self.window_hits -= 1;
            }
        }
        self.check_stop();
    }

    fn check_stop(&mut self) {
        if self.stop.is_some() {
            return;
        }
        if self.frontier.is_empty() {
            self.stop = Some(StopReason::QueueEmpty);
        } else if self.config.version == CrawlVersion::V2
            && self.window.len() >= self.config.window_size
            && self.window_hits == 0
            && self.frontier.max_priority().unwrap_or(0) <= 1
        {
            self.stop = Some(StopReason::StaleFrontier);
        }
    }

    /// Fetches and processes one candidate. Returns `false` once the crawl
    /// has stopped.
    pub fn step<S: FetchSource + ?Sized>(&mut self, src: &S) -> bool {
        match self.next_candidate() {
            Some(id) => {
                let res = src.fetch_profile(id);
                self.apply(res);
                true
            }
            None => false,
        }
    }

    /// Runs until the crawl stops, or until `max_steps` more fetches have been
    /// made. With `concurrency_width > 1`, up to that many fetches are in
    /// flight at once and results are applied in completion order.
    pub fn run<S: FetchSource + ?Sized>(
        &mut self,
        src: &S,
        max_steps: Option<u64>,
    ) -> Result<(), CrawlError> {
        let mut remaining = max_steps.unwrap_or(u64::MAX);
        let width = self.config.concurrency_width;
        while remaining > 0 && self.stop.is_none() {
            if width == 1 {
                if !self.step(src) {
                    break;
                }
                remaining -= 1;
                continue;
            }
            let mut batch = Vec::with_capacity(width);
            while (batch.len() as u64) < remaining.min(width as u64) {
                match self.next_candidate() {
                    Some(id) => batch.push(id),
                    None => break,
                }
            }
            if batch.is_empty() {
                break;
            }
            // Budget or empty-queue stops seen while filling the batch are
            // re-evaluated by `next_candidate` once the batch is applied.
            self.stop = None;
            remaining -= batch.len() as u64;
            let (tx, rx) = mpsc::channel();
            std::thread::scope(|scope| {
                for id in batch {
                    let tx = tx.clone();
                    scope.spawn(move || {
                        let _ = tx.send(src.fetch_profile(id));
                    });
                }
                drop(tx);
                for res in rx {
                    self.apply(res);
                }
            });
            if self.stop == Some(StopReason::QueueEmpty) && !self.frontier.is_empty() {
                self.stop = None;
            }
        }
        Ok(())
    }

    pub fn stats(&self) -> CrawlStats {
        let fetched = self.fetch_count();
        let confirmed = self.confirmed.len() as u64;
        CrawlStats {
            fetched,
            confirmed,
            not_found: self.not_found,
            precision: if fetched == 0 {
                0.0
            } else {
                confirmed as f64 / fetched as f64
            },
            truncated: self.stop == Some(StopReason::Budget),
            stop_reason: self.stop,
            queued_remaining: self.frontier.len(),
        }
    }

    /// Confirmed members and every edge that one of them reported to another.
    pub fn collected_graph(&self) -> SocialGraph {
        let mut b = GraphBuilder::new();
        for page in self.confirmed.values() {
            b.add_profile(page.profile.clone())
                .expect("fetched profiles satisfy invariants");
        }
        for (id, page) in &self.confirmed {
            for f in &page.friends {
                if self.confirmed.contains_key(f) {
                    b.add_edge(*id, *f).expect("friend lists exclude self");
                }
            }
        }
        b.build()
    }

    pub fn into_outcome(self) -> CrawlOutcome {
        CrawlOutcome {
            graph: self.collected_graph(),
            stats: self.stats(),
            state: self,
        }
    }

    /// Snapshot text: one header line with format tag, version and payload
    /// digest, followed by the JSON payload.
    pub fn to_snapshot(&self) -> String {
        let payload = serde_json::to_string(self).expect("crawl state serializes");
        format!(
            "{STATE_MAGIC} v{STATE_FORMAT_VERSION} sha256={}\n{payload}\n",
            sha256_hex(payload.as_bytes())
        )
    }

    pub fn from_snapshot(text: &str) -> Result<Self, CrawlError> {
        let (header, rest) = text
            .split_once('\n')
            .ok_or_else(|| CrawlError::Corrupt("missing header line".into()))?;
        let mut parts = header.split(' ');
        if parts.next() != Some(STATE_MAGIC) {
            return Err(CrawlError::Corrupt("not a crawl state file".into()));
        }
        let version: u32 = parts
            .next()
            .and_then(|v| v.strip_prefix('v'))
            .and_then(|v| v.parse().ok())
            .ok_or_else(|| CrawlError::Corrupt("unreadable version".into()))?;
        if version != STATE_FORMAT_VERSION {
            return Err(CrawlError::Version {
                found: version,
                expected: STATE_FORMAT_VERSION,
            });
        }
        let digest = parts
            .next()
            .and_then(|d| d.strip_prefix("sha256="))
            .ok_or_else(|| CrawlError::Corrupt("missing digest".into()))?;
        let payload = rest.strip_suffix('\n').unwrap_or(rest);
        if sha256_hex(payload.as_bytes()) != digest {
            return Err(CrawlError::Corrupt("payload digest mismatch".into()));
        }
        let state: CrawlState =
            serde_json::from_str(payload).map_err(|e| CrawlError::Corrupt(e.to_string()))?;
        state.config.validate()?;
        Ok(state)
    }
}

pub fn save_state(state: &CrawlState, path: &Path) -> Result<(), CrawlError> {
    std::fs::write(path, state.to_snapshot()).map_err(|source| CrawlError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Loads a saved crawl and checks it belongs to `src`.
pub fn resume<S: FetchSource + ?Sized>(path: &Path, src: &S) -> Result<CrawlState, CrawlError> {
    let text = std::fs::read_to_string(path).map_err(|source| CrawlError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let state = CrawlState::from_snapshot(&text)?;
    let found = src.fingerprint();
    if state.source_fingerprint != found {
        return Err(CrawlError::SourceMismatch {
            expected: state.source_fingerprint,
            found,
        });
    }
    Ok(state)
}
