//! The request-history table (PreReq): a per-node, capacity-bounded record
//! of previously observed data requests, used as location hints.
//!
//! Entries are kept in insertion order; when the table is full a new
//! record overwrites the oldest one. Hop distances stored alongside holder
//! ids are those observed at record time and may go stale; a failed fetch
//! against a stale hint removes exactly that holder.

use alloc::vec::Vec;

use crate::model::{DataId, NodeId};

/// One table row.
#[derive(Clone, PartialEq, Debug)]
pub struct PreReqEntry {
    pub data_id: DataId,
    /// Present (with the item's size) while this node holds a local copy.
    pub locally_cached: Option<u32>,
    /// Nodes known to have cached the item, with hop distance as observed.
    /// No duplicate node ids; order of first sighting.
    pub cached_nodes: Vec<(NodeId, u32)>,
    /// How many times the item was requested by others while this node
    /// cached it.
    pub popularity: u32,
    /// Expiry deadline of the local copy, when known.
    pub ttl: Option<u64>,
    pub recorded_at: u64,
}

/// Effect of a record operation, for tracing.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum RecordEffect {
    Created,
    Updated,
    /// Created by overwriting the oldest entry.
    CreatedEvicting(DataId),
}

/// Effect of an invalidation, for tracing.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum InvalidateEffect {
    RemovedHolder,
    EntryDropped,
    Noop,
}

/// Insertion-ordered, capacity-bounded map from data id to entry.
#[derive(Clone, PartialEq, Debug)]
pub struct PreReqTable {
    capacity: usize,
    entries: Vec<PreReqEntry>,
}

impl PreReqTable {
    pub fn new(capacity: u32) -> Self {
        PreReqTable {
            capacity: capacity as usize,
            entries: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn get(&self, d: DataId) -> Option<&PreReqEntry> {
        self.entries.iter().find(|e| e.data_id == d)
    }

    /// Entries in insertion order, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &PreReqEntry> {
        self.entries.iter()
    }

    /// Sum of all popularity counters; the node-popularity input of the
    /// head election.
    pub fn total_popularity(&self) -> u32 {
        self.entries.iter().map(|e| e.popularity).sum()
    }

    /// Index of the entry for `d`, creating it (and overwriting the oldest
    /// record when full) if absent. The effect reports what happened.
    fn entry_mut_or_insert(&mut self, d: DataId, now: u64) -> (usize, RecordEffect) {
        if let Some(i) = self.entries.iter().position(|e| e.data_id == d) {
            return (i, RecordEffect::Updated);
        }
        let mut effect = RecordEffect::Created;
        if self.entries.len() >= self.capacity {
            effect = RecordEffect::CreatedEvicting(self.entries.remove(0).data_id);
        }
        self.entries.push(PreReqEntry {
            data_id: d,
            locally_cached: None,
            cached_nodes: Vec::new(),
            popularity: 0,
            ttl: None,
            recorded_at: now,
        });
        (self.entries.len() - 1, effect)
    }

    fn merge_holder(entry: &mut PreReqEntry, holder: (NodeId, u32)) {
        if let Some(existing) = entry.cached_nodes.iter_mut().find(|(n, _)| *n == holder.0) {
            existing.1 = holder.1;
        } else {
            entry.cached_nodes.push(holder);
        }
    }

    /// Record an observed request for `d`, optionally merging a holder
    /// hint. Popularity increments when this node currently caches the
    /// item, since that means a neighbour asked for something we hold.
    pub fn record(&mut self, d: DataId, holder: Option<(NodeId, u32)>, now: u64) -> RecordEffect {
        let (i, effect) = self.entry_mut_or_insert(d, now);
        let entry = &mut self.entries[i];
        entry.recorded_at = now;
        if entry.locally_cached.is_some() {
            entry.popularity += 1;
        }
        if let Some(h) = holder {
            Self::merge_holder(entry, h);
        }
        effect
    }

    /// Holder hints for `d`: the recorded cached-node list, unless the
    /// entry's TTL deadline has passed. Absent entries yield no hints.
    pub fn lookup(&self, d: DataId, now: u64) -> Vec<(NodeId, u32)> {
        match self.get(d) {
            Some(e) => {
                if let Some(deadline) = e.ttl {
                    if now >= deadline {
                        return Vec::new();
                    }
                }
                e.cached_nodes.clone()
            }
            None => Vec::new(),
        }
    }

    /// Remove `holder` from the entry for `d`. The whole entry goes away
    /// once it has no holders left and no local copy.
    pub fn invalidate(&mut self, d: DataId, holder: NodeId) -> InvalidateEffect {
        let Some(i) = self.entries.iter().position(|e| e.data_id == d) else {
            return InvalidateEffect::Noop;
        };
        let entry = &mut self.entries[i];
        let before = entry.cached_nodes.len();
        entry.cached_nodes.retain(|(n, _)| *n != holder);
        if entry.cached_nodes.len() == before {
            return InvalidateEffect::Noop;
        }
        if entry.cached_nodes.is_empty() && entry.locally_cached.is_none() {
            self.entries.remove(i);
            InvalidateEffect::EntryDropped
        } else {
            InvalidateEffect::RemovedHolder
        }
    }

    /// Note that this node now caches `d` itself (after a successful
    /// fetch), optionally remembering which node served it. Does not touch
    /// popularity: that counts only requests from others.
    pub fn note_fetched(
        &mut self,
        d: DataId,
        served_by: Option<(NodeId, u32)>,
        size: u32,
        deadline: u64,
        now: u64,
    ) {
        let (i, _effect) = self.entry_mut_or_insert(d, now);
        let entry = &mut self.entries[i];
        entry.locally_cached = Some(size);
        entry.ttl = Some(deadline);
        entry.recorded_at = now;
        if let Some(h) = served_by {
            Self::merge_holder(entry, h);
        }
    }

    /// Merge a holder hint learned from a passing data reply. Unlike
    /// [`PreReqTable::record`] this does not count toward popularity: the
    /// reply is not a request addressed at this node.
    pub fn merge_hint(&mut self, d: DataId, holder: (NodeId, u32), now: u64) -> RecordEffect {
        let (i, effect) = self.entry_mut_or_insert(d, now);
        Self::merge_holder(&mut self.entries[i], holder);
        effect
    }

    /// The local copy of `d` is gone (evicted). Hints about other holders
    /// survive; an entry with nothing left is dropped.
    pub fn clear_local_copy(&mut self, d: DataId) {
        if let Some(i) = self.entries.iter().position(|e| e.data_id == d) {
            let entry = &mut self.entries[i];
            entry.locally_cached = None;
            entry.ttl = None;
            if entry.cached_nodes.is_empty() {
                self.entries.remove(i);
            }
        }
    }
}

/// Target of a hint-based fetch.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum FetchTarget {
    Target(NodeId),
    Server,
}

/// Choose between the hinted holders and the origin server: the minimal
/// hop count wins, holder ties break toward the smaller id, and a tie with
/// the server goes to the holder to keep load off the server.
pub fn choose_target(candidates: &[(NodeId, u32)], server_hops: u32) -> FetchTarget {
    let best = candidates
        .iter()
        .min_by_key(|(n, hops)| (*hops, *n))
        .copied();
    match best {
        Some((n, hops)) if hops <= server_hops => FetchTarget::Target(n),
        _ => FetchTarget::Server,
    }
}
