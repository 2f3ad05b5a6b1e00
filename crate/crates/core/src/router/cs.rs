use std::collections::{BTreeSet, HashMap, VecDeque};
use std::ops::Bound;

use super::matches;
use crate::ndn::{DataPacket, Digest32, Interest, Name};
use crate::simnet::{Provenance, SimTime};

pub const INITIAL_TRUST: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct CsEntry {
    pub data: DataPacket,
    pub provenance: Provenance,
    pub trust: f64,
    pub verified: bool,
    /// A verification job for this entry is queued or running.
    pub verifying: bool,
    pub last_access: SimTime,
    pub seq: u64,
    /// Arrival times of recent negative consumer feedback.
    pub negatives: VecDeque<SimTime>,
}

impl CsEntry {
    fn eviction_key(&self) -> (f64, SimTime, u64) {
        (self.trust, self.last_access, self.seq)
    }
}

/// Content cache keyed by content hash, with a name index for prefix lookups.
#[derive(Debug, Clone)]
pub struct ContentStore {
    capacity: usize,
    entries: HashMap<Digest32, CsEntry>,
    index: BTreeSet<(Name, Digest32)>,
    seq: u64,
}

impl ContentStore {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: HashMap::new(),
            index: BTreeSet::new(),
            seq: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, hash: &Digest32) -> bool {
        self.entries.contains_key(hash)
    }

    pub fn get(&self, hash: &Digest32) -> Option<&CsEntry> {
        self.entries.get(hash)
    }

    pub fn get_mut(&mut self, hash: &Digest32) -> Option<&mut CsEntry> {
        self.entries.get_mut(hash)
    }

    /// Cached hashes in ascending order.
    pub fn hashes(&self) -> Vec<Digest32> {
        let mut v: Vec<_> = self.entries.keys().copied().collect();
        v.sort_unstable();
        v
    }

    /// Inserts `data`, evicting the entry with the lowest (trust, last access)
    /// when full. Returns the evicted entry, if any. Re-inserting cached
    /// content only refreshes its access time.
    pub fn insert(&mut self, data: DataPacket, provenance: Provenance, now: SimTime) -> Option<CsEntry> {
        if self.capacity == 0 {
            return None;
        }
        let hash = data.content_hash();
        if let Some(e) = self.entries.get_mut(&hash) {
            e.last_access = now;
            return None;
        }
        let evicted = if self.entries.len() >= self.capacity {
            self.victim().and_then(|h| self.remove(&h))
        } else {
            None
        };
        self.seq += 1;
        self.index.insert((data.name().clone(), hash));
        self.entries.insert(
            hash,
            CsEntry {
                data,
                provenance,
                trust: INITIAL_TRUST,
                verified: false,
                verifying: false,
                last_access: now,
                seq: self.seq,
                negatives: VecDeque::new(),
            },
        );
        evicted
    }

    fn victim(&self) -> Option<Digest32> {
        self.entries
            .iter()
            .min_by(|(_, a), (_, b)| {
                let (ta, la, sa) = a.eviction_key();
                let (tb, lb, sb) = b.eviction_key();
                ta.total_cmp(&tb).then(la.cmp(&lb)).then(sa.cmp(&sb))
            })
            .map(|(h, _)| *h)
    }

    pub fn remove(&mut self, hash: &Digest32) -> Option<CsEntry> {
        let e = self.entries.remove(hash)?;
        self.index.remove(&(e.data.name().clone(), *hash));
        Some(e)
    }

    /// The matching entry with the lowest content hash. `enforce_scid`
    /// controls whether key-digest and hash-component constraints apply.
    pub fn lookup(&self, interest: &Interest, enforce_scid: bool) -> Option<Digest32> {
        if enforce_scid {
            if let Some(h) = interest.name.trailing_digest() {
                return self
                    .entries
                    .get(&h)
                    .filter(|e| matches(&e.data, interest, true))
                    .map(|_| h);
            }
        }
        let base = interest.name.without_digest();
        self.index
            .range((Bound::Included((base.clone(), [0u8; 32])), Bound::Unbounded))
            .take_while(|(n, _)| base.is_prefix_of(n))
            .filter(|(_, h)| matches(&self.entries[h].data, interest, enforce_scid))
            .map(|(_, h)| *h)
            .min()
    }

    pub fn touch(&mut self, hash: &Digest32, now: SimTime) {
        if let Some(e) = self.entries.get_mut(hash) {
            e.last_access = now;
        }
    }
}
