//! Per-node local cache: TTL validity, capacity accounting and LRU
//! replacement. Expired entries linger until an insert needs their space;
//! they never satisfy a lookup and their space counts as free.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;
use core::fmt;

use crate::model::{DataId, DataItem};

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct CacheEntry {
    pub item: DataItem,
    pub cached_at: u64,
    pub expires_at: u64,
    pub last_access: u64,
}

impl CacheEntry {
    /// Valid strictly before the expiry tick.
    pub fn is_valid(&self, now: u64) -> bool {
        now < self.expires_at
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct OversizeItem {
    pub id: DataId,
    pub size: u32,
    pub capacity: u32,
}

impl fmt::Display for OversizeItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "item {} of size {} exceeds cache capacity {}",
            self.id.0, self.size, self.capacity
        )
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum LookupResult {
    Hit(DataItem),
    Miss,
}

impl LookupResult {
    pub fn is_hit(&self) -> bool {
        matches!(self, LookupResult::Hit(_))
    }
}

/// Capacity-bounded cache of data items keyed by id.
#[derive(Clone, PartialEq, Debug)]
pub struct LocalCache {
    capacity: u32,
    entries: BTreeMap<DataId, CacheEntry>,
    used: u32,
}

impl LocalCache {
    pub fn new(capacity: u32) -> Self {
        LocalCache {
            capacity,
            entries: BTreeMap::new(),
            used: 0,
        }
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Space occupied by all entries, expired ones included.
    pub fn used(&self) -> u32 {
        self.used
    }

    pub fn entries(&self) -> impl Iterator<Item = (&DataId, &CacheEntry)> {
        self.entries.iter()
    }

    pub fn get(&self, id: DataId) -> Option<&CacheEntry> {
        self.entries.get(&id)
    }

    /// Hit only for a present, unexpired entry. A hit refreshes the
    /// entry's last access time.
    pub fn lookup(&mut self, id: DataId, now: u64) -> LookupResult {
        match self.entries.get_mut(&id) {
            Some(e) if e.is_valid(now) => {
                e.last_access = now;
                LookupResult::Hit(e.item)
            }
            _ => LookupResult::Miss,
        }
    }

    /// Non-mutating validity check.
    pub fn has_valid(&self, id: DataId, now: u64) -> bool {
        self.entries.get(&id).is_some_and(|e| e.is_valid(now))
    }

    /// Capacity minus the space of unexpired entries.
    pub fn free_capacity(&self, now: u64) -> u32 {
        let live: u32 = self
            .entries
            .values()
            .filter(|e| e.is_valid(now))
            .map(|e| e.item.size)
            .sum();
        self.capacity - live
    }

    /// Insert `item`, evicting until it fits: expired entries first (by
    /// ascending id), then valid entries in least-recently-used order.
    /// Returns the evicted ids in eviction order. An item larger than the
    /// whole cache is refused and the cache is left untouched.
    pub fn insert(&mut self, item: DataItem, now: u64) -> Result<Vec<DataId>, OversizeItem> {
        if item.size > self.capacity {
            return Err(OversizeItem {
                id: item.id,
                size: item.size,
                capacity: self.capacity,
            });
        }

        // Re-inserting an id replaces its entry.
        if let Some(old) = self.entries.remove(&item.id) {
            self.used -= old.item.size;
        }

        let mut evicted = Vec::new();
        while self.used + item.size > self.capacity {
            let victim = self.pick_victim(now).expect("used > 0 implies a victim");
            let gone = self.entries.remove(&victim).unwrap();
            self.used -= gone.item.size;
            evicted.push(victim);
        }

        self.used += item.size;
        self.entries.insert(
            item.id,
            CacheEntry {
                item,
                cached_at: now,
                expires_at: now + item.ttl,
                last_access: now,
            },
        );
        Ok(evicted)
    }

    /// Remove an entry outright (used when rescued data moves between
    /// nodes or a report needs rebuilding).
    pub fn remove(&mut self, id: DataId) -> Option<CacheEntry> {
        let e = self.entries.remove(&id)?;
        self.used -= e.item.size;
        Some(e)
    }

    /// Ids and expiry deadlines of all currently valid entries, for cache
    /// state reports to the cluster head.
    pub fn report(&self, now: u64) -> Vec<(DataId, u64)> {
        self.entries
            .iter()
            .filter(|(_, e)| e.is_valid(now))
            .map(|(id, e)| (*id, e.expires_at))
            .collect()
    }

    fn pick_victim(&self, now: u64) -> Option<DataId> {
        // Expired first, ascending id.
        if let Some((id, _)) = self.entries.iter().find(|(_, e)| !e.is_valid(now)) {
            return Some(*id);
        }
        self.entries
            .iter()
            .min_by_key(|(id, e)| (e.last_access, **id))
            .map(|(id, _)| *id)
    }
}
