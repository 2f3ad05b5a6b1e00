//! The honest consumer: windowed fetching with signature verification,
//! Exclude-based re-requests and negative feedback to the first hop.

use std::collections::{BTreeMap, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{fragment_name, link_hashes};
use crate::attacks::NameSet;
use crate::defense::control::{self, Control};
use crate::ndn::crypto::sha256;
use crate::ndn::{Component, DataPacket, Digest32, ExcludeFilter, Interest, KeyLocator, Name, Packet};
use crate::simnet::{Ctx, FaceId, Frame, Provenance, SimDuration, SimTime};

/// Longest explicit Exclude a retry chain may build before giving up.
pub const MAX_EXCLUDE: usize = 16;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FetchMode {
    #[default]
    Plain,
    /// Interests carry the expected content hash as a final component.
    SScid,
    /// Interests carry the trusted publisher key digest.
    DScid,
    Combined,
}

impl FetchMode {
    fn uses_hash(self) -> bool {
        matches!(self, FetchMode::SScid | FetchMode::Combined)
    }

    fn uses_key_digest(self) -> bool {
        matches!(self, FetchMode::DScid | FetchMode::Combined)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "type")]
pub enum Workload {
    /// Fragments `prefix/1..=count` of a linked collection.
    Collection {
        prefix: Name,
        count: usize,
    },
    Names {
        names: Vec<Name>,
        #[serde(default)]
        repeat: bool,
    },
    Set(NameSet),
    /// Unbounded fresh names `prefix/0`, `prefix/1`, ...
    Sequence {
        prefix: Name,
    },
    /// `prefix/offset`, `prefix/offset+1`, ... modulo `count`, forever.
    Cycle {
        prefix: Name,
        count: usize,
        #[serde(default)]
        offset: usize,
    },
}

fn one() -> usize {
    1
}

fn three() -> u32 {
    3
}

fn default_verify_us() -> u64 {
    100
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsumerConfig {
    pub workload: Workload,
    /// Maximum concurrently pending items.
    #[serde(default = "one")]
    pub window: usize,
    /// New items per second; window-limited when absent.
    #[serde(default)]
    pub rate: Option<f64>,
    #[serde(default)]
    pub start_ms: u64,
    #[serde(default)]
    pub stop_ms: Option<u64>,
    #[serde(default)]
    pub mode: FetchMode,
    /// Producer whose key digest is trusted, resolved by the scenario loader.
    #[serde(default)]
    pub trusted_producer: Option<String>,
    /// Trusted key digest as hex.
    #[serde(default)]
    pub trusted_key_digest: Option<String>,
    #[serde(default = "three")]
    pub max_retries: u32,
    #[serde(default)]
    pub lifetime_ms: Option<u32>,
    #[serde(default = "default_verify_us")]
    pub verify_us: u64,
    /// Send negative feedback for invalid packets.
    #[serde(default = "yes")]
    pub feedback: bool,
}

impl ConsumerConfig {
    pub fn new(workload: Workload) -> Self {
        Self {
            workload,
            window: 1,
            rate: None,
            start_ms: 0,
            stop_ms: None,
            mode: FetchMode::Plain,
            trusted_producer: None,
            trusted_key_digest: None,
            max_retries: 3,
            lifetime_ms: None,
            verify_us: default_verify_us(),
            feedback: true,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConsumerStats {
    pub issued: u64,
    pub interests_sent: u64,
    pub retransmissions: u64,
    pub completed: u64,
    pub failed: u64,
    pub valid_received: u64,
    pub invalid_received: u64,
    /// Poisoned packets that reached this consumer, caught or not.
    pub poisoned_received: u64,
    /// Poisoned packets that passed verification.
    pub accepted_poisoned: u64,
    pub duplicates: u64,
    pub feedback_sent: u64,
    pub key_interests: u64,
    pub key_failures: u64,
    pub latency_us: u64,
    pub copies_per_face: Vec<u64>,
    /// Poisoned packets received, by name.
    pub poisoned_by_name: BTreeMap<Name, u64>,
}

impl ConsumerStats {
    /// Completed over resolved items; 1 before anything resolves.
    pub fn satisfaction(&self) -> f64 {
        let done = self.completed + self.failed;
        if done == 0 {
            1.0
        } else {
            self.completed as f64 / done as f64
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    /// Position in the workload, used for collection links.
    index: usize,
    hash: Option<Digest32>,
    first_sent: SimTime,
    retries: u32,
    exclude: Option<ExcludeFilter>,
    attempt: u64,
}

#[derive(Debug, Clone)]
struct KeyFetch {
    attempt: u64,
    waiting: Vec<(DataPacket, Provenance, FaceId)>,
}

const KIND_SHIFT: u32 = 56;
const T_START: u64 = 1;
const T_PACE: u64 = 2;
const T_TIMEOUT: u64 = 3;
const T_KEY_TIMEOUT: u64 = 4;

fn token(kind: u64, id: u64) -> u64 {
    (kind << KIND_SHIFT) | id
}

#[derive(Debug, Clone)]
pub struct Consumer {
    cfg: ConsumerConfig,
    trusted: Option<Digest32>,
    link_keys: Vec<Digest32>,
    next: usize,
    hashes: HashMap<usize, Digest32>,
    pending: BTreeMap<Name, Pending>,
    attempts: HashMap<u64, Name>,
    keys: HashMap<Name, Vec<u8>>,
    key_fetches: BTreeMap<Name, KeyFetch>,
    next_attempt: u64,
    cpu_busy: SimTime,
    pub stats: ConsumerStats,
}

impl Consumer {
    pub fn new(cfg: ConsumerConfig, trusted: Option<Digest32>, link_keys: Vec<Digest32>) -> Self {
        let faces = link_keys.len();
        Self {
            cfg,
            trusted,
            link_keys,
            next: 0,
            hashes: HashMap::new(),
            pending: BTreeMap::new(),
            attempts: HashMap::new(),
            keys: HashMap::new(),
            key_fetches: BTreeMap::new(),
            next_attempt: 0,
            cpu_busy: SimTime::ZERO,
            stats: ConsumerStats {
                copies_per_face: vec![0; faces],
                ..Default::default()
            },
        }
    }

    pub fn config(&self) -> &ConsumerConfig {
        &self.cfg
    }

    pub fn pending_len(&self) -> usize {
        self.pending.len()
    }

    /// True once a finite workload has been fully resolved.
    pub fn finished(&self) -> bool {
        let total = match &self.cfg.workload {
            Workload::Collection { count, .. } => *count,
            Workload::Names { names, repeat: false } => names.len(),
            Workload::Set(s) => s.count,
            _ => return false,
        };
        self.next >= total && self.pending.is_empty()
    }

    fn stopped(&self, now: SimTime) -> bool {
        self.cfg.stop_ms.is_some_and(|s| now >= SimTime::from_ms(s))
    }

    /// The next workload item, if one can be issued now.
    fn peek_item(&self) -> Option<(Name, Option<Digest32>)> {
        let k = self.next;
        match &self.cfg.workload {
            Workload::Collection { prefix, count } => {
                if k >= *count {
                    return None;
                }
                let hash = self.hashes.get(&k).copied();
                if self.cfg.mode.uses_hash() && k > 0 && hash.is_none() {
                    return None;
                }
                Some((fragment_name(prefix, k + 1), hash))
            }
            Workload::Names { names, repeat } => {
                if names.is_empty() || (!repeat && k >= names.len()) {
                    return None;
                }
                Some((names[k % names.len()].clone(), None))
            }
            Workload::Set(s) => {
                (k < s.count).then(|| (s.prefix.child_str(&(s.first + k).to_string()).expect("numeric"), None))
            }
            Workload::Sequence { prefix } => Some((prefix.child_str(&k.to_string()).expect("numeric"), None)),
            Workload::Cycle { prefix, count, offset } => (*count > 0).then(|| {
                (
                    prefix.child_str(&((offset + k) % count).to_string()).expect("numeric"),
                    None,
                )
            }),
        }
    }

    fn build_interest(&self, name: &Name, p: &Pending, nonce: u64) -> Interest {
        let full = match p.hash {
            Some(h) if self.cfg.mode.uses_hash() => name.child(Component::digest(h)).expect("room for digest"),
            _ => name.clone(),
        };
        let mut i = Interest::new(full, nonce);
        if self.cfg.mode.uses_key_digest() {
            if let Some(d) = self.trusted {
                i = i.with_key_digest(d);
            }
        }
        if let Some(ex) = &p.exclude {
            i = i.with_exclude(ex.clone());
        }
        if let Some(ms) = self.cfg.lifetime_ms {
            i = i.with_lifetime(ms);
        }
        i
    }

    fn lifetime(&self) -> SimDuration {
        SimDuration::from_ms(self.cfg.lifetime_ms.unwrap_or(crate::ndn::packet::DEFAULT_LIFETIME_MS) as u64)
    }

    fn transmit(&mut self, ctx: &mut Ctx<'_>, name: &Name, delay: SimDuration) {
        self.next_attempt += 1;
        let attempt = self.next_attempt;
        let nonce = ctx.rng.gen();
        let p = self.pending.get_mut(name).expect("pending item");
        let old = std::mem::replace(&mut p.attempt, attempt);
        self.attempts.remove(&old);
        self.attempts.insert(attempt, name.clone());
        let p = &self.pending[name];
        let interest = self.build_interest(name, p, nonce);
        for f in 0..ctx.face_count() {
            ctx.send_after(
                delay,
                FaceId(f as u32),
                Frame::new(Packet::Interest(interest.clone()), Provenance::Honest),
            );
            self.stats.interests_sent += 1;
        }
        ctx.schedule(ctx.now + delay + self.lifetime(), token(T_TIMEOUT, attempt));
    }

    fn issue_one(&mut self, ctx: &mut Ctx<'_>, delay: SimDuration) -> bool {
        if self.pending.len() >= self.cfg.window.max(1) || self.stopped(ctx.now) {
            return false;
        }
        let Some((name, hash)) = self.peek_item() else {
            return false;
        };
        if self.pending.contains_key(&name) {
            return false;
        }
        let index = self.next;
        self.next += 1;
        self.stats.issued += 1;
        self.pending.insert(
            name.clone(),
            Pending {
                index,
                hash,
                first_sent: ctx.now + delay,
                retries: 0,
                exclude: None,
                attempt: 0,
            },
        );
        self.transmit(ctx, &name, delay);
        true
    }

    fn fill(&mut self, ctx: &mut Ctx<'_>, delay: SimDuration) {
        if self.cfg.rate.is_some() || ctx.now < SimTime::from_ms(self.cfg.start_ms) {
            return;
        }
        while self.issue_one(ctx, delay) {}
    }

    fn pace_interval(&self) -> Option<SimDuration> {
        self.cfg
            .rate
            .filter(|r| *r > 0.0)
            .map(|r| SimDuration::from_secs_f64(1.0 / r).max(SimDuration::from_micros(1)))
    }

    fn finish(&mut self, name: &Name, ok: bool, now: SimTime) {
        if let Some(p) = self.pending.remove(name) {
            self.attempts.remove(&p.attempt);
            if ok {
                self.stats.completed += 1;
                self.stats.latency_us += now.saturating_sub(p.first_sent).as_micros();
            } else {
                self.stats.failed += 1;
            }
        }
    }

    fn verify_cost(&mut self, now: SimTime) -> SimDuration {
        self.cpu_busy = self.cpu_busy.max(now) + SimDuration::from_micros(self.cfg.verify_us);
        self.cpu_busy - now
    }

    fn on_data(&mut self, ctx: &mut Ctx<'_>, face: FaceId, data: DataPacket, prov: Provenance) {
        if let Some(c) = self.stats.copies_per_face.get_mut(face.0 as usize) {
            *c += 1;
        }
        let name = data.name().without_digest();
        if prov.is_poisoned() {
            self.stats.poisoned_received += 1;
            *self.stats.poisoned_by_name.entry(name.clone()).or_default() += 1;
        }
        if self.key_fetches.contains_key(&name) {
            self.on_key(ctx, &name, data);
            return;
        }
        let Some(p) = self.pending.get(&name) else {
            self.stats.duplicates += 1;
            return;
        };
        if p.exclude
            .as_ref()
            .is_some_and(|ex| ex.excludes(&data.component_after(name.len())))
        {
            self.stats.duplicates += 1;
            return;
        }
        match data.key_locator() {
            KeyLocator::KeyName(k) if !self.keys.contains_key(k) => {
                let k = k.clone();
                self.park_for_key(ctx, k, data, prov, face);
            }
            _ => {
                let delay = self.verify_cost(ctx.now);
                let valid = self.check(&name, &data);
                self.conclude(ctx, face, &name, data, prov, valid, delay);
            }
        }
    }

    fn check(&self, name: &Name, data: &DataPacket) -> bool {
        let p = &self.pending[name];
        if p.hash.is_some_and(|h| h != data.content_hash()) {
            return false;
        }
        if self.trusted.is_some_and(|t| t != data.publisher_key_digest()) {
            return false;
        }
        match data.key_locator() {
            KeyLocator::EmbeddedKey(_) => data.verify_embedded() == Some(true),
            KeyLocator::KeyName(k) => self
                .keys
                .get(k)
                .is_some_and(|key| sha256(key) == data.publisher_key_digest() && data.verify_with(key)),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn conclude(
        &mut self,
        ctx: &mut Ctx<'_>,
        face: FaceId,
        name: &Name,
        data: DataPacket,
        prov: Provenance,
        valid: bool,
        delay: SimDuration,
    ) {
        if valid {
            self.stats.valid_received += 1;
            if prov.is_poisoned() {
                self.stats.accepted_poisoned += 1;
            }
            let index = self.pending[name].index;
            if matches!(self.cfg.workload, Workload::Collection { .. }) {
                for (j, h) in link_hashes(data.payload()).into_iter().enumerate() {
                    self.hashes.entry(index + 1 + j).or_insert(h);
                }
            }
            self.finish(name, true, ctx.now + delay);
            self.fill(ctx, delay);
            return;
        }
        self.stats.invalid_received += 1;
        if self.cfg.feedback {
            if let Some(key) = self.link_keys.get(face.0 as usize) {
                let nonce = ctx.rng.gen();
                let fb = control::encode(&Control::Feedback(data.content_hash()), key, nonce);
                ctx.send_after(delay, face, Frame::new(Packet::Interest(fb), Provenance::Honest));
                self.stats.feedback_sent += 1;
            }
        }
        let p = self.pending.get_mut(name).expect("pending item");
        let ex = p.exclude.get_or_insert_with(|| ExcludeFilter::explicit([]));
        if ex.len() >= MAX_EXCLUDE {
            // Out of room: saturate and abandon the item.
            p.exclude = Some(ExcludeFilter::all_ones());
            self.finish(name, false, ctx.now);
            self.fill(ctx, delay);
            return;
        }
        ex.insert(data.component_after(name.len()));
        p.retries += 1;
        if p.retries > self.cfg.max_retries {
            self.finish(name, false, ctx.now);
            self.fill(ctx, delay);
            return;
        }
        self.stats.retransmissions += 1;
        self.transmit(ctx, name, delay);
    }

    fn park_for_key(&mut self, ctx: &mut Ctx<'_>, key: Name, data: DataPacket, prov: Provenance, face: FaceId) {
        if let Some(f) = self.key_fetches.get_mut(&key) {
            f.waiting.push((data, prov, face));
            return;
        }
        self.next_attempt += 1;
        let attempt = self.next_attempt;
        let mut i = Interest::new(key.clone(), ctx.rng.gen());
        if let Some(ms) = self.cfg.lifetime_ms {
            i = i.with_lifetime(ms);
        }
        for f in 0..ctx.face_count() {
            ctx.send(
                FaceId(f as u32),
                Frame::new(Packet::Interest(i.clone()), Provenance::Honest),
            );
        }
        self.stats.key_interests += 1;
        self.key_fetches.insert(
            key.clone(),
            KeyFetch {
                attempt,
                waiting: vec![(data, prov, face)],
            },
        );
        self.attempts.insert(attempt, key);
        ctx.schedule(ctx.now + self.lifetime(), token(T_KEY_TIMEOUT, attempt));
    }

    fn on_key(&mut self, ctx: &mut Ctx<'_>, key_name: &Name, key_pkt: DataPacket) {
        let fetch = self.key_fetches.remove(key_name).expect("key fetch present");
        self.attempts.remove(&fetch.attempt);
        self.keys.insert(key_name.clone(), key_pkt.payload().to_vec());
        for (data, prov, face) in fetch.waiting {
            let name = data.name().without_digest();
            if self.pending.contains_key(&name) {
                let delay = self.verify_cost(ctx.now);
                let valid = self.check(&name, &data);
                self.conclude(ctx, face, &name, data, prov, valid, delay);
            }
        }
    }

    fn on_timeout(&mut self, ctx: &mut Ctx<'_>, attempt: u64) {
        let Some(name) = self.attempts.get(&attempt).cloned() else {
            return;
        };
        if let Some(fetch) = self.key_fetches.remove(&name) {
            self.attempts.remove(&attempt);
            self.stats.key_failures += 1;
            for (data, _, _) in fetch.waiting {
                self.finish(&data.name().without_digest(), false, ctx.now);
            }
            self.fill(ctx, SimDuration::ZERO);
            return;
        }
        let Some(p) = self.pending.get_mut(&name) else {
            return;
        };
        if p.attempt != attempt {
            return;
        }
        if p.retries >= self.cfg.max_retries {
            self.finish(&name, false, ctx.now);
            self.fill(ctx, SimDuration::ZERO);
            return;
        }
        p.retries += 1;
        self.stats.retransmissions += 1;
        self.transmit(ctx, &name, SimDuration::ZERO);
    }

    pub fn start(&mut self, ctx: &mut Ctx<'_>) {
        ctx.schedule(SimTime::from_ms(self.cfg.start_ms), token(T_START, 0));
    }

    pub fn on_frame(&mut self, ctx: &mut Ctx<'_>, face: FaceId, frame: Frame) {
        if let Packet::Data(d) = frame.packet {
            self.on_data(ctx, face, d, frame.provenance);
        }
    }

    pub fn on_timer(&mut self, ctx: &mut Ctx<'_>, tok: u64) {
        let id = tok & ((1 << KIND_SHIFT) - 1);
        match tok >> KIND_SHIFT {
            T_START => match self.pace_interval() {
                Some(_) => ctx.schedule(ctx.now, token(T_PACE, 0)),
                None => self.fill(ctx, SimDuration::ZERO),
            },
            T_PACE => {
                if self.stopped(ctx.now) {
                    return;
                }
                self.issue_one(ctx, SimDuration::ZERO);
                if let Some(dt) = self.pace_interval() {
                    ctx.schedule(ctx.now + dt, token(T_PACE, 0));
                }
            }
            T_TIMEOUT | T_KEY_TIMEOUT => self.on_timeout(ctx, id),
            _ => log::warn!("consumer ignoring unknown timer {tok:#x}"),
        }
    }
}
