use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::graph::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrontierMode {
    /// Highest priority first, FIFO among equal priorities.
    Priority,
    /// Plain FIFO; priorities are tracked but ignored for ordering.
    Fifo,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Entry {
    priority: u32,
    seq: u64,
}

/// Crawl frontier with increase-key. Each candidate appears at most once.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "FrontierRepr", into = "FrontierRepr")]
pub struct Frontier {
    mode: FrontierMode,
    entries: BTreeMap<NodeId, Entry>,
    order: BTreeSet<(Reverse<u32>, u64, NodeId)>,
    next_seq: u64,
}

#[derive(Serialize, Deserialize)]
struct FrontierRepr {
    mode: FrontierMode,
    next_seq: u64,
    /// `(candidate, priority, enqueue sequence)`, sorted by candidate.
    queue: Vec<(NodeId, u32, u64)>,
}

impl From<FrontierRepr> for Frontier {
    fn from(r: FrontierRepr) -> Self {
        let mut f = Frontier::new(r.mode);
        f.next_seq = r.next_seq;
        for (id, priority, seq) in r.queue {
            f.entries.insert(id, Entry { priority, seq });
            f.order.insert(f.key(priority, seq, id));
        }
        f
    }
}

impl From<Frontier> for FrontierRepr {
    fn from(f: Frontier) -> Self {
        FrontierRepr {
            mode: f.mode,
            next_seq: f.next_seq,
            queue: f
                .entries
                .iter()
                .map(|(id, e)| (*id, e.priority, e.seq))
                .collect(),
        }
    }
}

impl Frontier {
    pub fn new(mode: FrontierMode) -> Self {
        Frontier {
            mode,
            entries: BTreeMap::new(),
            order: BTreeSet::new(),
            next_seq: 0,
        }
    }

    fn key(&self, priority: u32, seq: u64, id: NodeId) -> (Reverse<u32>, u64, NodeId) {
        match self.mode {
            FrontierMode::Priority => (Reverse(priority), seq, id),
            FrontierMode::Fifo => (Reverse(0), seq, id),
        }
    }

    pub fn mode(&self) -> FrontierMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, id: NodeId) -> bool {
        self.entries.contains_key(&id)
    }

    pub fn priority(&self, id: NodeId) -> Option<u32> {
        self.entries.get(&id).map(|e| e.priority)
    }

    /// Enqueues `id` unless already present. Returns whether it was added.
    pub fn push(&mut self, id: NodeId, priority: u32) -> bool {
        if self.entries.contains_key(&id) {
            return false;
        }
        let seq = self.next_seq;
        self.next_seq += 1;
        self.entries.insert(id, Entry { priority, seq });
        self.order.insert(self.key(priority, seq, id));
        true
    }

    /// Adds one to the priority of a queued candidate, keeping its original
    /// enqueue position for tie-breaking.
    pub fn increase(&mut self, id: NodeId) -> bool {
        let Some(e) = self.entries.get(&id).copied() else {
            return false;
        };
        self.order.remove(&self.key(e.priority, e.seq, id));
        let bumped = Entry {
            priority: e.priority + 1,
            seq: e.seq,
        };
        self.entries.insert(id, bumped);
        self.order.insert(self.key(bumped.priority, bumped.seq, id));
        true
    }

    pub fn pop(&mut self) -> Option<(NodeId, u32)> {
        let (_, _, id) = self.order.pop_first()?;
        let e = self.entries.remove(&id).expect("order and entries agree");
        Some((id, e.priority))
    }

    pub fn max_priority(&self) -> Option<u32> {
        self.entries.values().map(|e| e.priority).max()
    }

    /// Queued candidates with their priorities, in ascending id order.
    pub fn iter(&self) -> impl Iterator<Item = (NodeId, u32)> + '_ {
        self.entries.iter().map(|(id, e)| (*id, e.priority))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn max_priority_then_fifo() {
        let mut f = Frontier::new(FrontierMode::Priority);
        f.push(NodeId(5), 1);
        f.push(NodeId(3), 1);
        f.push(NodeId(9), 1);
        f.increase(NodeId(9));
        assert!(!f.push(NodeId(3), 4));
        assert_eq!(f.pop(), Some((NodeId(9), 2)));
        assert_eq!(f.pop(), Some((NodeId(5), 1)));
        assert_eq!(f.pop(), Some((NodeId(3), 1)));
        assert_eq!(f.pop(), None);
    }

    #[test]
    fn fifo_ignores_priority() {
        let mut f = Frontier::new(FrontierMode::Fifo);
        f.push(NodeId(1), 1);
        f.push(NodeId(2), 1);
        f.increase(NodeId(2));
        f.increase(NodeId(2));
        assert_eq!(f.priority(NodeId(2)), Some(3));
        assert_eq!(f.pop().unwrap().0, NodeId(1));
    }

    #[test]
    fn serde_round_trip_preserves_order() {
        let mut f = Frontier::new(FrontierMode::Priority);
        for i in 0..10 {
            f.push(NodeId(i * 7 % 10), 1);
        }
        f.increase(NodeId(4));
        let json = serde_json::to_string(&f).unwrap();
        let mut g: Frontier = serde_json::from_str(&json).unwrap();
        assert_eq!(f, g);
        let mut a = f.clone();
        while let Some(x) = a.pop() {
            assert_eq!(Some(x), g.pop());
        }
    }
}
