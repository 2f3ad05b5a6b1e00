use std::collections::{BTreeMap, BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::cs::ContentStore;
use super::fib::Fib;
use super::matches;
use super::pit::{InRecord, Pit, PitEntry};
use super::strategy::strategy_choose;
use crate::defense::control::{self, Control, ControlError, PushbackMsg};
use crate::defense::flooding::{FloodGuard, FloodingConfig, Rejection};
use crate::defense::poisoning::{
    select_for_verification, trust_after_hit, trust_after_negative, PoisoningConfig, Selector,
};
use crate::ndn::crypto::sha256;
use crate::ndn::{AnswerOriginKind, DataPacket, Digest32, Interest, KeyLocator, Name, Packet};
use crate::nodes::compromised::Compromise;
use crate::simnet::{FaceId, FaceInfo, Frame, LinkKind, Provenance, SimDuration, SimRng, SimTime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RouterConfig {
    pub cs_capacity: usize,
    /// Hard PIT size limit, modelling router memory. Unlimited when absent.
    pub pit_capacity: Option<usize>,
    pub overhear_suppression: bool,
    pub scid_enforce: bool,
    pub flooding: FloodingConfig,
    pub poisoning: PoisoningConfig,
}

impl Default for RouterConfig {
    fn default() -> Self {
        Self {
            cs_capacity: 1000,
            pit_capacity: None,
            overhear_suppression: true,
            scid_enforce: true,
            flooding: FloodingConfig::default(),
            poisoning: PoisoningConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DropReason {
    DuplicateNonce,
    NoRoute,
    ScopeLimit,
    PitFull,
    EgressQuota,
    IngressLimit,
    NamespaceQuota,
    Throttle,
    RateCap,
    Unsolicited,
    ScidMismatch,
    ForgedControl,
    MalformedControl,
}

impl DropReason {
    pub const ALL: [DropReason; 13] = [
        DropReason::DuplicateNonce,
        DropReason::NoRoute,
        DropReason::ScopeLimit,
        DropReason::PitFull,
        DropReason::EgressQuota,
        DropReason::IngressLimit,
        DropReason::NamespaceQuota,
        DropReason::Throttle,
        DropReason::RateCap,
        DropReason::Unsolicited,
        DropReason::ScidMismatch,
        DropReason::ForgedControl,
        DropReason::MalformedControl,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::DuplicateNonce => "duplicate_nonce",
            DropReason::NoRoute => "no_route",
            DropReason::ScopeLimit => "scope_limit",
            DropReason::PitFull => "pit_full",
            DropReason::EgressQuota => "egress_quota",
            DropReason::IngressLimit => "ingress_limit",
            DropReason::NamespaceQuota => "namespace_quota",
            DropReason::Throttle => "throttle",
            DropReason::RateCap => "rate_cap",
            DropReason::Unsolicited => "unsolicited",
            DropReason::ScidMismatch => "scid_mismatch",
            DropReason::ForgedControl => "forged_control",
            DropReason::MalformedControl => "malformed_control",
        }
    }
}

impl From<Rejection> for DropReason {
    fn from(r: Rejection) -> Self {
        match r {
            Rejection::EgressQuota => DropReason::EgressQuota,
            Rejection::IngressLimit => DropReason::IngressLimit,
            Rejection::NamespaceQuota => DropReason::NamespaceQuota,
            Rejection::Throttle => DropReason::Throttle,
            Rejection::RateCap => DropReason::RateCap,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Action {
    Send {
        face: FaceId,
        frame: Frame,
        delay: SimDuration,
    },
    Timer {
        at: SimTime,
        token: u64,
    },
    Drop(DropReason),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct RouterStats {
    pub interests_in: u64,
    pub attack_interests_in: u64,
    pub forwarded: u64,
    pub collapsed: u64,
    pub expired: u64,
    pub satisfied: u64,
    pub cs_hits: u64,
    pub cs_misses: u64,
    pub data_in: u64,
    pub data_sent: u64,
    pub drops: BTreeMap<DropReason, u64>,
    pub dscid_rejects: u64,
    pub sscid_rejects: u64,
    pub overheard_flushes: u64,
    pub poisoned_cached: u64,
    pub fake_cached: u64,
    pub poisoned_forwarded: u64,
    pub fake_forwarded: u64,
    pub poison_injected: u64,
    pub verifications: u64,
    pub purged_invalid: u64,
    pub first_purge: Option<SimTime>,
    pub last_purge: Option<SimTime>,
    pub warnings_sent: u64,
    pub warnings_received: u64,
    pub feedback_received: u64,
    pub pushback_sent: u64,
    pub pushback_received: u64,
    pub forged_dropped: u64,
}

impl RouterStats {
    pub fn dropped(&self, r: DropReason) -> u64 {
        self.drops.get(&r).copied().unwrap_or(0)
    }
}

const KIND_SHIFT: u32 = 56;
const TIMER_EXPIRE: u64 = 1;
const TIMER_VERIFY: u64 = 2;
const TIMER_SWEEP: u64 = 3;

fn token(kind: u64, id: u64) -> u64 {
    (kind << KIND_SHIFT) | (id & ((1 << KIND_SHIFT) - 1))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VerifyCause {
    Sampling,
    Warning(FaceId),
    Feedback,
}

#[derive(Debug, Clone, Copy)]
struct VerifyJob {
    hash: Digest32,
    cause: VerifyCause,
}

/// One router's complete state. Event handlers return the actions the
/// hosting node should perform.
#[derive(Debug, Clone)]
pub struct Router {
    cfg: RouterConfig,
    faces: Vec<FaceInfo>,
    link_keys: Vec<Digest32>,
    pub fib: Fib,
    pub pit: Pit,
    pub cs: ContentStore,
    flood: Option<FloodGuard>,
    selector: Selector,
    compromise: Option<Compromise>,
    jobs: BTreeMap<u64, VerifyJob>,
    next_job: u64,
    cpu_busy: SimTime,
    suppressed: HashMap<(Digest32, FaceId), SimTime>,
    control_nonce: u64,
    pub stats: RouterStats,
}

impl Router {
    pub fn new(cfg: RouterConfig, faces: Vec<FaceInfo>, link_keys: Vec<Digest32>, selector: Selector) -> Self {
        assert_eq!(faces.len(), link_keys.len(), "one link key per face");
        let flood = cfg
            .flooding
            .enabled()
            .then(|| FloodGuard::new(cfg.flooding.clone(), &faces));
        Self {
            cs: ContentStore::new(cfg.cs_capacity),
            cfg,
            faces,
            link_keys,
            fib: Fib::new(),
            pit: Pit::new(),
            flood,
            selector,
            compromise: None,
            jobs: BTreeMap::new(),
            next_job: 0,
            cpu_busy: SimTime::ZERO,
            suppressed: HashMap::new(),
            control_nonce: 0,
            stats: RouterStats::default(),
        }
    }

    pub fn with_compromise(mut self, c: Compromise) -> Self {
        self.compromise = Some(c);
        self
    }

    pub fn config(&self) -> &RouterConfig {
        &self.cfg
    }

    pub fn faces(&self) -> &[FaceInfo] {
        &self.faces
    }

    pub fn flood_guard(&self) -> Option<&FloodGuard> {
        self.flood.as_ref()
    }

    pub fn compromise(&self) -> Option<&Compromise> {
        self.compromise.as_ref()
    }

    pub fn add_route(&mut self, prefix: Name, face: FaceId) {
        self.fib.add_route(prefix, face);
    }

    fn drop(&mut self, out: &mut Vec<Action>, r: DropReason) {
        *self.stats.drops.entry(r).or_default() += 1;
        out.push(Action::Drop(r));
    }

    fn send_data(&mut self, out: &mut Vec<Action>, face: FaceId, data: DataPacket, prov: Provenance) {
        self.stats.data_sent += 1;
        if prov.is_poisoned() {
            self.stats.poisoned_forwarded += 1;
        }
        if prov == Provenance::Fake {
            self.stats.fake_forwarded += 1;
        }
        out.push(Action::Send {
            face,
            frame: Frame::new(Packet::Data(data), prov),
            delay: SimDuration::ZERO,
        });
    }

    fn send_control(&mut self, out: &mut Vec<Action>, face: FaceId, ctrl: &Control) {
        self.control_nonce += 1;
        let i = control::encode(ctrl, &self.link_keys[face.0 as usize], self.control_nonce);
        out.push(Action::Send {
            face,
            frame: Frame::new(Packet::Interest(i), Provenance::Honest),
            delay: SimDuration::ZERO,
        });
    }

    /// Timers the router needs from the start of the run.
    pub fn start(&mut self, now: SimTime) -> Vec<Action> {
        match self.cfg.poisoning.verification.sweep_interval_ms {
            Some(ms) if ms > 0 && self.selector != Selector::Off => vec![Action::Timer {
                at: now + SimDuration::from_ms(ms),
                token: token(TIMER_SWEEP, 0),
            }],
            _ => Vec::new(),
        }
    }

    pub fn on_interest(
        &mut self,
        face: FaceId,
        interest: Interest,
        prov: Provenance,
        now: SimTime,
        rng: &mut SimRng,
    ) -> Vec<Action> {
        let mut out = Vec::new();
        self.stats.interests_in += 1;
        if prov == Provenance::Attack {
            self.stats.attack_interests_in += 1;
        }
        if control::is_control(&interest.name) {
            self.on_control(face, &interest, now, rng, &mut out);
            return out;
        }
        if let Some(c) = self.compromise.as_mut() {
            if let Some(poison) = c.serve(&interest, now) {
                let p = match c.mode {
                    crate::nodes::compromised::PoisonMode::Corrupted => Provenance::Corrupted,
                    crate::nodes::compromised::PoisonMode::Fake => Provenance::Fake,
                };
                self.stats.poison_injected += 1;
                self.send_data(&mut out, face, poison, p);
            }
        }
        let fp = interest.option_fingerprint();
        let existing = self.pit.find(&interest.name, &fp);
        if let Some(id) = existing {
            if self.pit.get(id).is_some_and(|e| e.nonces.contains(&interest.nonce)) {
                self.drop(&mut out, DropReason::DuplicateNonce);
                return out;
            }
        }
        let enforce = self.cfg.scid_enforce;
        if interest.answer_origin_kind == AnswerOriginKind::Any {
            if let Some(h) = self.cs.lookup(&interest, enforce) {
                self.stats.cs_hits += 1;
                let fb = self.cfg.poisoning.consumer_feedback.clone();
                let e = self.cs.get_mut(&h).expect("looked-up entry present");
                e.last_access = now;
                if fb.enabled && !e.verified {
                    e.trust = trust_after_hit(e.trust, fb.alpha);
                }
                let (data, p) = (e.data.clone(), e.provenance);
                self.send_data(&mut out, face, data, p);
                return out;
            }
            self.stats.cs_misses += 1;
        }
        if let Some(id) = existing {
            let e = self.pit.get_mut(id).expect("found entry present");
            e.nonces.push(interest.nonce);
            if !e.has_incoming(face) {
                e.incoming.push(InRecord {
                    face,
                    at: now,
                    nonce: interest.nonce,
                });
            }
            self.stats.collapsed += 1;
            return out;
        }
        if matches!(interest.scope, Some(s) if s <= 2) {
            self.drop(&mut out, DropReason::ScopeLimit);
            return out;
        }
        if self.cfg.pit_capacity.is_some_and(|cap| self.pit.len() >= cap) {
            self.drop(&mut out, DropReason::PitFull);
            return out;
        }
        let Some(fib_entry) = self.fib.longest_prefix_match(&interest.name) else {
            self.drop(&mut out, DropReason::NoRoute);
            return out;
        };
        let fib_prefix = fib_entry.prefix.clone();
        let chosen = strategy_choose(fib_entry, &[face]);
        if chosen.is_empty() {
            self.drop(&mut out, DropReason::NoRoute);
            return out;
        }
        let mut admission = None;
        let mut egress = chosen;
        if let Some(g) = self.flood.as_mut() {
            let res = g.admit(face, &interest, &egress, now, rng);
            let pushbacks = g.take_outbox();
            for (f, msg) in pushbacks {
                self.stats.pushback_sent += 1;
                self.send_control(&mut out, f, &Control::Pushback(msg));
            }
            match res {
                Ok(a) => {
                    egress = a.egress.clone();
                    admission = Some(a);
                }
                Err(r) => {
                    self.drop(&mut out, r.into());
                    return out;
                }
            }
        }
        let mut entry = PitEntry::new(interest.clone(), face, now, prov == Provenance::Attack);
        entry.outgoing = egress.iter().map(|&f| (f, now)).collect();
        entry.fib_prefix = Some(fib_prefix.clone());
        entry.admission = admission;
        let expiry = entry.expiry;
        let id = self.pit.insert(entry, now);
        out.push(Action::Timer {
            at: expiry,
            token: token(TIMER_EXPIRE, id),
        });
        if let Some(fe) = self.fib.get_mut(&fib_prefix) {
            for f in &egress {
                if let Some(s) = fe.stats_mut(*f) {
                    s.forwarded += 1;
                }
            }
        }
        for f in egress {
            self.stats.forwarded += 1;
            out.push(Action::Send {
                face: f,
                frame: Frame::new(Packet::Interest(interest.clone()), prov),
                delay: SimDuration::ZERO,
            });
        }
        out
    }

    pub fn on_data(
        &mut self,
        face: FaceId,
        data: DataPacket,
        prov: Provenance,
        now: SimTime,
        rng: &mut SimRng,
    ) -> Vec<Action> {
        let mut out = Vec::new();
        self.stats.data_in += 1;
        let enforce = self.cfg.scid_enforce;
        let broadcast = self
            .faces
            .get(face.0 as usize)
            .is_some_and(|f| f.kind == LinkKind::Broadcast);
        let mut solicited = Vec::new();
        let mut overheard = Vec::new();
        let (mut dscid, mut sscid) = (false, false);
        let mut ids = self.pit.candidates(&data);
        ids.extend(self.pit.digest_mismatches(&data));
        for id in ids {
            let e = self.pit.get(id).expect("candidate present");
            if !matches(&data, &e.interest, false) {
                continue;
            }
            let full = !enforce || matches(&data, &e.interest, true);
            if e.has_outgoing(face) {
                if full {
                    solicited.push(id);
                } else {
                    if e.interest
                        .publisher_key_digest
                        .is_some_and(|d| d != data.publisher_key_digest())
                    {
                        dscid = true;
                    } else {
                        sscid = true;
                    }
                }
            } else if broadcast && self.cfg.overhear_suppression && e.has_incoming(face) && full {
                overheard.push(id);
            }
        }
        if solicited.is_empty() && overheard.is_empty() {
            if dscid || sscid {
                if dscid {
                    self.stats.dscid_rejects += 1;
                }
                if sscid {
                    self.stats.sscid_rejects += 1;
                }
                self.drop(&mut out, DropReason::ScidMismatch);
            } else {
                self.drop(&mut out, DropReason::Unsolicited);
            }
            return out;
        }
        let hash = data.content_hash();
        let fresh = !self.cs.contains(&hash);
        if self.cs.capacity() > 0 {
            self.cs.insert(data.clone(), prov, now);
            if fresh && self.cs.contains(&hash) {
                if prov.is_poisoned() {
                    self.stats.poisoned_cached += 1;
                }
                if prov == Provenance::Fake {
                    self.stats.fake_cached += 1;
                }
                let trust = self.feedback_trust(&hash);
                if select_for_verification(&self.selector, &hash, trust, rng) {
                    self.enqueue_verify(hash, VerifyCause::Sampling, now, &mut out);
                }
            }
        }
        let mut targets = BTreeSet::new();
        for &id in &solicited {
            let e = self.pit.remove(id, now).expect("solicited entry present");
            self.resolve(&e, Some(face), true, now);
            targets.extend(e.incoming.iter().map(|r| r.face));
        }
        for &id in &overheard {
            let e = self.pit.remove(id, now).expect("overheard entry present");
            self.stats.overheard_flushes += 1;
            self.resolve(&e, None, true, now);
            targets.extend(e.incoming.iter().map(|r| r.face));
        }
        targets.remove(&face);
        for f in targets {
            self.send_data(&mut out, f, data.clone(), prov);
        }
        out
    }

    fn feedback_trust(&self, hash: &Digest32) -> Option<f64> {
        if self.cfg.poisoning.consumer_feedback.enabled {
            self.cs.get(hash).map(|e| e.trust)
        } else {
            None
        }
    }

    /// Bookkeeping for a PIT entry leaving the table. `via` is the face the
    /// satisfying data came in on; an overheard satisfaction credits every
    /// outgoing face.
    fn resolve(&mut self, e: &PitEntry, via: Option<FaceId>, satisfied: bool, now: SimTime) {
        if satisfied {
            self.stats.satisfied += 1;
        } else {
            self.stats.expired += 1;
        }
        if let Some(fe) = e.fib_prefix.as_ref().and_then(|p| self.fib.get_mut(p)) {
            for &(f, sent) in &e.outgoing {
                let Some(s) = fe.stats_mut(f) else { continue };
                match (satisfied, via) {
                    (true, Some(v)) if v == f => {
                        s.satisfied += 1;
                        s.record_rtt(now.saturating_sub(sent));
                    }
                    (true, None) => s.satisfied += 1,
                    (false, _) => s.expired += 1,
                    _ => {}
                }
            }
        }
        if let (Some(g), Some(a)) = (self.flood.as_mut(), e.admission.as_ref()) {
            g.release(a, satisfied, now);
        }
    }

    /// Removes expired PIT entries, returning them.
    pub fn expire_pit(&mut self, now: SimTime) -> Vec<PitEntry> {
        let gone = self.pit.expire(now);
        for e in &gone {
            self.resolve(e, None, false, now);
        }
        gone
    }

    pub fn on_timer(&mut self, tok: u64, now: SimTime, rng: &mut SimRng) -> Vec<Action> {
        let mut out = Vec::new();
        let id = tok & ((1 << KIND_SHIFT) - 1);
        match tok >> KIND_SHIFT {
            TIMER_EXPIRE => {
                self.expire_pit(now);
            }
            TIMER_VERIFY => {
                if let Some(job) = self.jobs.remove(&id) {
                    self.finish_verify(job, now, &mut out);
                }
            }
            TIMER_SWEEP => {
                self.sweep(now, rng, &mut out);
                if let Some(ms) = self.cfg.poisoning.verification.sweep_interval_ms {
                    out.push(Action::Timer {
                        at: now + SimDuration::from_ms(ms),
                        token: token(TIMER_SWEEP, 0),
                    });
                }
            }
            _ => log::warn!("router ignoring unknown timer {tok:#x}"),
        }
        out
    }

    fn sweep(&mut self, now: SimTime, rng: &mut SimRng, out: &mut Vec<Action>) {
        for h in self.cs.hashes() {
            let e = self.cs.get(&h).expect("listed entry present");
            if e.verified || e.verifying {
                continue;
            }
            let trust = self.feedback_trust(&h);
            if select_for_verification(&self.selector, &h, trust, rng) {
                self.enqueue_verify(h, VerifyCause::Sampling, now, out);
            }
        }
    }

    fn enqueue_verify(&mut self, hash: Digest32, cause: VerifyCause, now: SimTime, out: &mut Vec<Action>) {
        let Some(e) = self.cs.get_mut(&hash) else { return };
        if e.verified || e.verifying {
            return;
        }
        e.verifying = true;
        let start = now.max(self.cpu_busy);
        let done = start + SimDuration::from_micros(self.cfg.poisoning.verification.verify_us);
        self.cpu_busy = done;
        self.next_job += 1;
        self.jobs.insert(self.next_job, VerifyJob { hash, cause });
        out.push(Action::Timer {
            at: done,
            token: token(TIMER_VERIFY, self.next_job),
        });
    }

    /// Checks a cached packet's signature: embedded keys directly, named keys
    /// if the key itself is cached. `None` when no key is at hand.
    fn check_signature(&self, data: &DataPacket) -> Option<bool> {
        match data.key_locator() {
            KeyLocator::EmbeddedKey(_) => data.verify_embedded(),
            KeyLocator::KeyName(kn) => {
                let h = self.cs.lookup(&Interest::new(kn.clone(), 0), false)?;
                let key = self.cs.get(&h)?.data.payload().to_vec();
                Some(sha256(&key) == data.publisher_key_digest() && data.verify_with(&key))
            }
        }
    }

    fn finish_verify(&mut self, job: VerifyJob, now: SimTime, out: &mut Vec<Action>) {
        let Some(e) = self.cs.get(&job.hash) else { return };
        self.stats.verifications += 1;
        let verdict = self.check_signature(&e.data);
        match verdict {
            None => {
                if let Some(e) = self.cs.get_mut(&job.hash) {
                    e.verifying = false;
                }
            }
            Some(true) => {
                let e = self.cs.get_mut(&job.hash).expect("entry present");
                e.verifying = false;
                e.verified = true;
                e.trust = 1.0;
                if let VerifyCause::Warning(f) = job.cause {
                    let until = now + SimDuration::from_ms(self.cfg.poisoning.neighbor.cooldown_ms);
                    self.suppressed.insert((job.hash, f), until);
                }
            }
            Some(false) => {
                self.cs.remove(&job.hash);
                self.stats.purged_invalid += 1;
                self.stats.first_purge.get_or_insert(now);
                self.stats.last_purge = Some(now);
                if self.cfg.poisoning.neighbor.enabled {
                    for f in 0..self.faces.len() {
                        self.stats.warnings_sent += 1;
                        self.send_control(out, FaceId(f as u32), &Control::Warning(job.hash));
                    }
                }
            }
        }
    }

    fn on_control(&mut self, face: FaceId, interest: &Interest, now: SimTime, rng: &mut SimRng, out: &mut Vec<Action>) {
        let key = self.link_keys[face.0 as usize];
        let ctrl = match control::decode(interest, &key) {
            Some(Ok(c)) => c,
            Some(Err(ControlError::BadMac)) => {
                self.stats.forged_dropped += 1;
                self.drop(out, DropReason::ForgedControl);
                return;
            }
            _ => {
                self.drop(out, DropReason::MalformedControl);
                return;
            }
        };
        match ctrl {
            Control::Warning(h) => {
                self.stats.warnings_received += 1;
                let nb = self.cfg.poisoning.neighbor.clone();
                if !nb.enabled {
                    return;
                }
                let Some(e) = self.cs.get(&h) else { return };
                if e.verified || e.verifying {
                    return;
                }
                if self.suppressed.get(&(h, face)).is_some_and(|&until| until > now) {
                    return;
                }
                if nb.p >= 1.0 || rng.gen::<f64>() < nb.p {
                    self.enqueue_verify(h, VerifyCause::Warning(face), now, out);
                }
            }
            Control::Feedback(h) => {
                self.stats.feedback_received += 1;
                let fb = self.cfg.poisoning.consumer_feedback.clone();
                if !fb.enabled {
                    return;
                }
                let Some(e) = self.cs.get_mut(&h) else { return };
                if e.verified {
                    return;
                }
                e.trust = trust_after_negative(e.trust, fb.beta);
                e.negatives.push_back(now);
                let window = SimDuration::from_ms(fb.window_ms);
                while e.negatives.front().is_some_and(|&t| now.saturating_sub(t) > window) {
                    e.negatives.pop_front();
                }
                if e.negatives.len() >= fb.threshold as usize {
                    self.enqueue_verify(h, VerifyCause::Feedback, now, out);
                }
            }
            Control::Pushback(msg) => {
                self.stats.pushback_received += 1;
                self.on_pushback(face, &msg, now, out);
            }
        }
    }

    fn on_pushback(&mut self, face: FaceId, msg: &PushbackMsg, now: SimTime, out: &mut Vec<Action>) {
        let Some(g) = self.flood.as_mut() else { return };
        if !g.config().pushback {
            return;
        }
        g.on_pushback(face, msg, now);
        for (f, m) in g.take_outbox() {
            self.stats.pushback_sent += 1;
            self.send_control(out, f, &Control::Pushback(m));
        }
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    /// Places content directly into the cache, as if it had been fetched earlier.
    pub fn preload(&mut self, data: DataPacket, prov: Provenance, now: SimTime) {
        let hash = data.content_hash();
        let fresh = !self.cs.contains(&hash);
        self.cs.insert(data, prov, now);
        if fresh && self.cs.contains(&hash) && prov.is_poisoned() {
            self.stats.poisoned_cached += 1;
            if prov == Provenance::Fake {
                self.stats.fake_cached += 1;
            }
        }
    }
}
