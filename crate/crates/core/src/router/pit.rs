use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::defense::flooding::Admission;
use crate::ndn::{Component, DataPacket, Digest32, Interest, Name};
use crate::simnet::{FaceId, SimTime};

pub type PitKey = (Name, Digest32);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InRecord {
    pub face: FaceId,
    pub at: SimTime,
    pub nonce: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PitEntry {
    pub id: u64,
    /// The first interest that created the entry; later ones only add faces.
    pub interest: Interest,
    pub fingerprint: Digest32,
    pub incoming: Vec<InRecord>,
    pub outgoing: Vec<(FaceId, SimTime)>,
    pub created: SimTime,
    pub expiry: SimTime,
    pub nonces: Vec<u64>,
    /// Ground truth: the creating interest came from an attacker.
    pub attack: bool,
    pub fib_prefix: Option<Name>,
    pub admission: Option<Admission>,
}

impl PitEntry {
    pub fn new(interest: Interest, face: FaceId, now: SimTime, attack: bool) -> Self {
        let expiry = now + crate::simnet::SimDuration::from_ms(interest.lifetime_ms as u64);
        Self {
            id: 0,
            fingerprint: interest.option_fingerprint(),
            incoming: vec![InRecord {
                face,
                at: now,
                nonce: interest.nonce,
            }],
            outgoing: Vec::new(),
            created: now,
            expiry,
            nonces: vec![interest.nonce],
            attack,
            fib_prefix: None,
            admission: None,
            interest,
        }
    }

    pub fn key(&self) -> PitKey {
        (self.interest.name.clone(), self.fingerprint)
    }

    pub fn has_incoming(&self, face: FaceId) -> bool {
        self.incoming.iter().any(|r| r.face == face)
    }

    pub fn has_outgoing(&self, face: FaceId) -> bool {
        self.outgoing.iter().any(|(f, _)| *f == face)
    }

    pub fn outgoing_at(&self, face: FaceId) -> Option<SimTime> {
        self.outgoing.iter().find(|(f, _)| *f == face).map(|(_, t)| *t)
    }
}

/// Exact time integral of an integer-valued step function.
#[derive(Debug, Clone, Copy, Default)]
pub struct TimeAverage {
    integral: u128,
    value: u64,
    last: SimTime,
}

impl TimeAverage {
    pub fn set(&mut self, now: SimTime, value: u64) {
        self.integral += self.value as u128 * now.saturating_sub(self.last).as_micros() as u128;
        self.last = now.max(self.last);
        self.value = value;
    }

    /// Mean value over [0, now].
    pub fn mean(&self, now: SimTime) -> f64 {
        if now.0 == 0 {
            return self.value as f64;
        }
        let total = self.integral + self.value as u128 * now.saturating_sub(self.last).as_micros() as u128;
        total as f64 / now.0 as f64
    }
}

#[derive(Debug, Clone, Default)]
pub struct Pit {
    entries: BTreeMap<u64, PitEntry>,
    by_key: HashMap<PitKey, u64>,
    by_name: HashMap<Name, Vec<u64>>,
    // Entries whose name pins a digest, keyed by the name without it.
    by_stem: HashMap<Name, Vec<u64>>,
    by_expiry: BTreeSet<(SimTime, u64)>,
    next_id: u64,
    attack: usize,
    size_avg: TimeAverage,
    attack_avg: TimeAverage,
    peak: usize,
}

impl Pit {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries created by attack interests.
    pub fn attack_len(&self) -> usize {
        self.attack
    }

    pub fn peak(&self) -> usize {
        self.peak
    }

    pub fn time_average(&self, now: SimTime) -> f64 {
        self.size_avg.mean(now)
    }

    pub fn attack_time_average(&self, now: SimTime) -> f64 {
        self.attack_avg.mean(now)
    }

    pub fn find(&self, name: &Name, fingerprint: &Digest32) -> Option<u64> {
        self.by_key.get(&(name.clone(), *fingerprint)).copied()
    }

    pub fn get(&self, id: u64) -> Option<&PitEntry> {
        self.entries.get(&id)
    }

    pub fn get_mut(&mut self, id: u64) -> Option<&mut PitEntry> {
        self.entries.get_mut(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &PitEntry> {
        self.entries.values()
    }

    fn touch(&mut self, now: SimTime) {
        self.size_avg.set(now, self.entries.len() as u64);
        self.attack_avg.set(now, self.attack as u64);
        self.peak = self.peak.max(self.entries.len());
    }

    pub fn insert(&mut self, mut entry: PitEntry, now: SimTime) -> u64 {
        self.next_id += 1;
        let id = self.next_id;
        entry.id = id;
        let key = entry.key();
        debug_assert!(!self.by_key.contains_key(&key), "duplicate PIT key");
        self.by_name.entry(key.0.clone()).or_default().push(id);
        if key.0.trailing_digest().is_some() {
            self.by_stem.entry(key.0.without_digest()).or_default().push(id);
        }
        self.by_key.insert(key, id);
        self.by_expiry.insert((entry.expiry, id));
        if entry.attack {
            self.attack += 1;
        }
        self.entries.insert(id, entry);
        self.touch(now);
        id
    }

    pub fn remove(&mut self, id: u64, now: SimTime) -> Option<PitEntry> {
        let entry = self.entries.remove(&id)?;
        let key = entry.key();
        self.by_key.remove(&key);
        if let Some(ids) = self.by_name.get_mut(&key.0) {
            ids.retain(|&i| i != id);
            if ids.is_empty() {
                self.by_name.remove(&key.0);
            }
        }
        if key.0.trailing_digest().is_some() {
            let stem = key.0.without_digest();
            if let Some(ids) = self.by_stem.get_mut(&stem) {
                ids.retain(|&i| i != id);
                if ids.is_empty() {
                    self.by_stem.remove(&stem);
                }
            }
        }
        self.by_expiry.remove(&(entry.expiry, id));
        if entry.attack {
            self.attack -= 1;
        }
        self.touch(now);
        Some(entry)
    }

    /// Removes and returns every entry whose expiry is at or before `now`.
    pub fn expire(&mut self, now: SimTime) -> Vec<PitEntry> {
        let due: Vec<u64> = self
            .by_expiry
            .iter()
            .take_while(|(t, _)| *t <= now)
            .map(|(_, id)| *id)
            .collect();
        due.into_iter().filter_map(|id| self.remove(id, now)).collect()
    }

    /// Ids of entries whose name could be satisfied by `data`: every prefix of
    /// its name, with or without the data's own digest appended. Ascending.
    pub fn candidates(&self, data: &DataPacket) -> Vec<u64> {
        let base = data.name().without_digest();
        let digest = Component::digest(data.content_hash());
        let mut out = Vec::new();
        for k in 0..=base.len() {
            let p = base.prefix(k);
            if let Some(ids) = self.by_name.get(&p) {
                out.extend_from_slice(ids);
            }
            if let Ok(full) = p.child(digest.clone()) {
                if let Some(ids) = self.by_name.get(&full) {
                    out.extend_from_slice(ids);
                }
            }
        }
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Entries that name `data` exactly but pin a different digest.
    pub fn digest_mismatches(&self, data: &DataPacket) -> Vec<u64> {
        let h = data.content_hash();
        let mut out: Vec<u64> = self
            .by_stem
            .get(&data.name().without_digest())
            .map(|ids| {
                ids.iter()
                    .copied()
                    .filter(|id| self.entries[id].interest.name.trailing_digest() != Some(h))
                    .collect()
            })
            .unwrap_or_default();
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::{DataParts, KeyLocator};

    fn interest(name: &str, nonce: u64) -> Interest {
        Interest::new(Name::parse(name).unwrap(), nonce)
    }

    #[test]
    fn expiry_boundary() {
        let mut pit = Pit::new();
        let id = pit.insert(
            PitEntry::new(interest("/a", 1), FaceId(0), SimTime::ZERO, false),
            SimTime::ZERO,
        );
        assert!(pit.expire(SimTime::from_ms(3999)).is_empty());
        let gone = pit.expire(SimTime::from_ms(4001));
        assert_eq!(gone.len(), 1);
        assert_eq!(gone[0].id, id);
        assert!(pit.is_empty());
    }

    #[test]
    fn removed_entry_never_expires() {
        let mut pit = Pit::new();
        let id = pit.insert(
            PitEntry::new(interest("/a", 1), FaceId(0), SimTime::ZERO, false),
            SimTime::ZERO,
        );
        assert!(pit.remove(id, SimTime::from_ms(10)).is_some());
        assert!(pit.remove(id, SimTime::from_ms(10)).is_none());
        assert!(pit.expire(SimTime::from_ms(10_000)).is_empty());
    }

    #[test]
    fn candidates_cover_prefixes_and_full_name() {
        let mut pit = Pit::new();
        let data = DataParts::unsigned(
            Name::parse("/a/b").unwrap(),
            vec![1],
            KeyLocator::EmbeddedKey(vec![]),
            [0; 32],
        )
        .build();
        let full = data.full_name();
        let a = pit.insert(
            PitEntry::new(interest("/a", 1), FaceId(0), SimTime::ZERO, false),
            SimTime::ZERO,
        );
        let f = pit.insert(
            PitEntry::new(Interest::new(full, 2), FaceId(0), SimTime::ZERO, false),
            SimTime::ZERO,
        );
        pit.insert(
            PitEntry::new(interest("/c", 3), FaceId(0), SimTime::ZERO, false),
            SimTime::ZERO,
        );
        assert_eq!(pit.candidates(&data), vec![a, f]);
    }

    #[test]
    fn time_average_is_exact() {
        let mut avg = TimeAverage::default();
        avg.set(SimTime::ZERO, 10);
        avg.set(SimTime::from_ms(1000), 0);
        assert!((avg.mean(SimTime::from_ms(2000)) - 5.0).abs() < 1e-12);
    }
}
