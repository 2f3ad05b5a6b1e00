//! Interest-flooding limiters: per-face egress quotas, per-face ingress
//! limits, per-namespace pending quotas with per-ingress throttling, and
//! hop-by-hop push-back rate caps.
//!
//! Admission checks run in this order: egress quota, ingress limit, namespace
//! quota, throttle, push-back cap.

use std::collections::{BTreeMap, VecDeque};

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::control::PushbackMsg;
use crate::ndn::{Interest, Name};
use crate::simnet::{FaceId, FaceInfo, SimDuration, SimRng, SimTime};

/// Largest number of interests worth keeping pending on a face: how many
/// data packets of `avg_content_bytes` the link can return before an interest
/// issued now would time out. Never less than one.
pub fn compute_outgoing_quota(bandwidth_bps: u64, avg_content_bytes: u32, timeout_secs: f64) -> u64 {
    let q = (bandwidth_bps as f64 * timeout_secs / (avg_content_bytes.max(1) as f64 * 8.0)).ceil();
    if q.is_finite() && q >= 1.0 {
        q as u64
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamespaceQuotaConfig {
    pub prefix: Name,
    pub max_pending: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FloodingConfig {
    pub egress_quota: bool,
    pub avg_content_bytes: u32,
    pub interest_timeout_ms: u64,
    pub ingress_limit: Option<u32>,
    pub namespaces: Vec<NamespaceQuotaConfig>,
    pub throttle: bool,
    pub window_ms: u64,
    pub min_fraction: f64,
    pub pushback: bool,
    pub cooldown_ms: u64,
    pub pushback_ttl: u8,
    pub fair_share_factor: f64,
    /// Fraction of the namespace turnover rate (quota / timeout) advised upstream.
    pub advised_headroom: f64,
    /// A router that delegates a cap further upstream keeps a local cap this
    /// many times looser as a backstop.
    pub backstop_factor: f64,
    pub contribution_window_ms: u64,
    pub cap_lifetime_ms: u64,
    pub min_cap_rate: f64,
}

impl Default for FloodingConfig {
    fn default() -> Self {
        Self {
            egress_quota: false,
            avg_content_bytes: 1500,
            interest_timeout_ms: 4000,
            ingress_limit: None,
            namespaces: Vec::new(),
            throttle: true,
            window_ms: 10_000,
            min_fraction: 0.05,
            pushback: false,
            cooldown_ms: 1000,
            pushback_ttl: 8,
            fair_share_factor: 2.0,
            advised_headroom: 0.5,
            backstop_factor: 2.0,
            contribution_window_ms: 2000,
            cap_lifetime_ms: 5000,
            min_cap_rate: 1.0,
        }
    }
}

impl FloodingConfig {
    pub fn enabled(&self) -> bool {
        self.egress_quota || self.ingress_limit.is_some() || !self.namespaces.is_empty() || self.pushback
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rejection {
    EgressQuota,
    IngressLimit,
    NamespaceQuota,
    Throttle,
    RateCap,
}

/// What an admitted interest holds against the counters; released exactly
/// once when its PIT entry is satisfied or expires.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Admission {
    pub egress: Vec<FaceId>,
    pub ingress: FaceId,
    pub namespace: Option<usize>,
}

#[derive(Debug, Clone)]
struct NamespaceState {
    prefix: Name,
    max_pending: u64,
    pending: u64,
    last_hit: Option<SimTime>,
    /// Per ingress face: (resolution time, satisfied?).
    outcomes: Vec<VecDeque<(SimTime, bool)>>,
}

#[derive(Debug, Clone)]
struct RateCap {
    rate: f64,
    burst: f64,
    tokens: f64,
    refilled: SimTime,
    expires: SimTime,
}

impl RateCap {
    fn new(rate: f64, now: SimTime, lifetime: SimDuration) -> Self {
        let burst = (rate * 0.5).max(1.0);
        Self {
            rate,
            burst,
            tokens: burst,
            refilled: now,
            expires: now + lifetime,
        }
    }

    fn take(&mut self, now: SimTime) -> bool {
        let dt = now.saturating_sub(self.refilled).as_secs();
        self.tokens = (self.tokens + dt * self.rate).min(self.burst);
        self.refilled = now;
        if self.tokens >= 1.0 {
            self.tokens -= 1.0;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FloodStats {
    pub rejected: BTreeMap<Rejection, u64>,
    pub pushback_sent: u64,
    pub pushback_received: u64,
    pub caps_installed: u64,
}

/// Per-router flooding defense state.
#[derive(Debug, Clone)]
pub struct FloodGuard {
    cfg: FloodingConfig,
    egress_quota: Vec<u64>,
    egress_pending: Vec<u64>,
    ingress_pending: Vec<u64>,
    namespaces: Vec<NamespaceState>,
    caps: BTreeMap<(Name, FaceId), RateCap>,
    arrivals: Vec<VecDeque<(SimTime, Name)>>,
    last_pushback: BTreeMap<(Name, FaceId), SimTime>,
    outbox: Vec<(FaceId, PushbackMsg)>,
    pub stats: FloodStats,
}

impl FloodGuard {
    pub fn new(cfg: FloodingConfig, faces: &[FaceInfo]) -> Self {
        let n = faces.len();
        let timeout = cfg.interest_timeout_ms as f64 / 1000.0;
        let egress_quota = faces
            .iter()
            .map(|f| compute_outgoing_quota(f.bandwidth_bps, cfg.avg_content_bytes, timeout))
            .collect();
        let namespaces = cfg
            .namespaces
            .iter()
            .map(|ns| NamespaceState {
                prefix: ns.prefix.clone(),
                max_pending: ns.max_pending as u64,
                pending: 0,
                last_hit: None,
                outcomes: vec![VecDeque::new(); n],
            })
            .collect();
        Self {
            cfg,
            egress_quota,
            egress_pending: vec![0; n],
            ingress_pending: vec![0; n],
            namespaces,
            caps: BTreeMap::new(),
            arrivals: vec![VecDeque::new(); n],
            last_pushback: BTreeMap::new(),
            outbox: Vec::new(),
            stats: FloodStats::default(),
        }
    }

    pub fn config(&self) -> &FloodingConfig {
        &self.cfg
    }

    pub fn egress_quota(&self, face: FaceId) -> u64 {
        self.egress_quota[face.0 as usize]
    }

    pub fn egress_pending(&self, face: FaceId) -> u64 {
        self.egress_pending[face.0 as usize]
    }

    pub fn ingress_pending(&self, face: FaceId) -> u64 {
        self.ingress_pending[face.0 as usize]
    }

    pub fn namespace_pending(&self, idx: usize) -> u64 {
        self.namespaces[idx].pending
    }

    /// Sum of all egress quotas: a bound on PIT size while quotas are on.
    pub fn total_egress_quota(&self) -> u64 {
        self.egress_quota.iter().sum()
    }

    fn namespace_of(&self, name: &Name) -> Option<usize> {
        self.namespaces
            .iter()
            .enumerate()
            .filter(|(_, ns)| ns.prefix.is_prefix_of(name))
            .max_by_key(|(_, ns)| ns.prefix.len())
            .map(|(i, _)| i)
    }

    fn window(&self) -> SimDuration {
        SimDuration::from_ms(self.cfg.window_ms)
    }

    fn trim_outcomes(q: &mut VecDeque<(SimTime, bool)>, now: SimTime, window: SimDuration) {
        while q.front().is_some_and(|(t, _)| now.saturating_sub(*t) > window) {
            q.pop_front();
        }
    }

    /// Admission probability for interests in namespace `ns` from `face`:
    /// the satisfied share of resolved interests over the window, floored at
    /// the minimum fraction, or 1 when nothing resolved recently.
    pub fn throttle_fraction(&mut self, ns: usize, face: FaceId, now: SimTime) -> f64 {
        let window = self.window();
        let q = &mut self.namespaces[ns].outcomes[face.0 as usize];
        Self::trim_outcomes(q, now, window);
        let sat = q.iter().filter(|(_, s)| *s).count();
        let total = q.len();
        if total == 0 {
            return 1.0;
        }
        (sat as f64 / total as f64).max(self.cfg.min_fraction).min(1.0)
    }

    fn record_arrival(&mut self, face: FaceId, name: &Name, now: SimTime) {
        let window = SimDuration::from_ms(self.cfg.contribution_window_ms);
        let q = &mut self.arrivals[face.0 as usize];
        q.push_back((now, name.clone()));
        while q.front().is_some_and(|(t, _)| now.saturating_sub(*t) > window) {
            q.pop_front();
        }
    }

    /// Recent offered rate (interests/s) under `prefix` arriving on `face`.
    pub fn offered_rate(&self, face: FaceId, prefix: &Name, now: SimTime) -> f64 {
        let window = SimDuration::from_ms(self.cfg.contribution_window_ms);
        let n = self.arrivals[face.0 as usize]
            .iter()
            .filter(|(t, name)| now.saturating_sub(*t) <= window && prefix.is_prefix_of(name))
            .count();
        n as f64 / window.as_secs().max(1e-9)
    }

    fn check_cap(&mut self, ingress: FaceId, name: &Name, now: SimTime) -> bool {
        let keys: Vec<(Name, FaceId)> = self
            .caps
            .keys()
            .filter(|(p, f)| *f == ingress && p.is_prefix_of(name))
            .cloned()
            .collect();
        let lifetime = SimDuration::from_ms(self.cfg.cap_lifetime_ms);
        let mut ok = true;
        for key in keys {
            let offered = self.offered_rate(key.1, &key.0, now);
            let cap = self.caps.get_mut(&key).expect("cap key present");
            if cap.expires <= now {
                if offered > cap.rate {
                    cap.expires = now + lifetime;
                } else {
                    self.caps.remove(&key);
                    continue;
                }
            }
            ok &= cap.take(now);
        }
        ok
    }

    /// Decides whether a new (non-collapsed) interest may enter the PIT.
    /// `egress` are the faces the strategy picked; faces at quota are
    /// dropped from the returned admission.
    pub fn admit(
        &mut self,
        ingress: FaceId,
        interest: &Interest,
        egress: &[FaceId],
        now: SimTime,
        rng: &mut SimRng,
    ) -> Result<Admission, Rejection> {
        self.record_arrival(ingress, &interest.name, now);
        let result = self.decide(ingress, interest, egress, now, rng);
        if let Err(r) = result {
            *self.stats.rejected.entry(r).or_default() += 1;
        }
        result
    }

    fn decide(
        &mut self,
        ingress: FaceId,
        interest: &Interest,
        egress: &[FaceId],
        now: SimTime,
        rng: &mut SimRng,
    ) -> Result<Admission, Rejection> {
        let egress: Vec<FaceId> = if self.cfg.egress_quota {
            egress
                .iter()
                .copied()
                .filter(|f| self.egress_pending[f.0 as usize] < self.egress_quota[f.0 as usize])
                .collect()
        } else {
            egress.to_vec()
        };
        if egress.is_empty() {
            return Err(Rejection::EgressQuota);
        }
        if let Some(limit) = self.cfg.ingress_limit {
            if self.ingress_pending[ingress.0 as usize] >= limit as u64 {
                return Err(Rejection::IngressLimit);
            }
        }
        let namespace = self.namespace_of(&interest.name);
        if let Some(ns) = namespace {
            if self.namespaces[ns].pending >= self.namespaces[ns].max_pending {
                self.namespaces[ns].last_hit = Some(now);
                self.on_quota_hit(ns, now);
                return Err(Rejection::NamespaceQuota);
            }
            if self.cfg.throttle {
                let fraction = self.throttle_fraction(ns, ingress, now);
                if fraction < 1.0 && rng.gen::<f64>() >= fraction {
                    return Err(Rejection::Throttle);
                }
            }
        }
        if !self.check_cap(ingress, &interest.name, now) {
            return Err(Rejection::RateCap);
        }
        for f in &egress {
            self.egress_pending[f.0 as usize] += 1;
        }
        self.ingress_pending[ingress.0 as usize] += 1;
        if let Some(ns) = namespace {
            self.namespaces[ns].pending += 1;
        }
        Ok(Admission {
            egress,
            ingress,
            namespace,
        })
    }

    /// Returns an admission's counters and records its outcome.
    pub fn release(&mut self, adm: &Admission, satisfied: bool, now: SimTime) {
        for f in &adm.egress {
            let c = &mut self.egress_pending[f.0 as usize];
            *c = c.saturating_sub(1);
        }
        let c = &mut self.ingress_pending[adm.ingress.0 as usize];
        *c = c.saturating_sub(1);
        if let Some(ns) = adm.namespace {
            let window = self.window();
            let st = &mut self.namespaces[ns];
            st.pending = st.pending.saturating_sub(1);
            let q = &mut st.outcomes[adm.ingress.0 as usize];
            q.push_back((now, satisfied));
            Self::trim_outcomes(q, now, window);
        }
    }

    fn cooled_down(&self, prefix: &Name, face: FaceId, now: SimTime) -> bool {
        match self.last_pushback.get(&(prefix.clone(), face)) {
            Some(&t) => now.saturating_sub(t) >= SimDuration::from_ms(self.cfg.cooldown_ms),
            None => true,
        }
    }

    fn on_quota_hit(&mut self, ns: usize, now: SimTime) {
        if !self.cfg.pushback {
            return;
        }
        let window = self.window();
        let prefix = self.namespaces[ns].prefix.clone();
        let mut offenders = Vec::new();
        for face in 0..self.namespaces[ns].outcomes.len() {
            let q = &mut self.namespaces[ns].outcomes[face];
            Self::trim_outcomes(q, now, window);
            let sat = q.iter().filter(|(_, s)| *s).count();
            if q.len() - sat > sat {
                offenders.push(FaceId(face as u32));
            }
        }
        if offenders.is_empty() {
            return;
        }
        let turnover = self.namespaces[ns].max_pending as f64 / (self.cfg.interest_timeout_ms as f64 / 1000.0);
        let share = (turnover * self.cfg.advised_headroom / offenders.len() as f64).max(self.cfg.min_cap_rate);
        for face in offenders {
            if self.cooled_down(&prefix, face, now) {
                self.last_pushback.insert((prefix.clone(), face), now);
                self.stats.pushback_sent += 1;
                self.outbox.push((
                    face,
                    PushbackMsg {
                        prefix: prefix.clone(),
                        rate: share,
                        ttl: self.cfg.pushback_ttl,
                    },
                ));
            }
        }
    }

    /// Handles an authenticated push-back that arrived on `from`: caps the
    /// ingress faces feeding that prefix and forwards advice towards the
    /// ones sending more than their fair share.
    pub fn on_pushback(&mut self, from: FaceId, msg: &PushbackMsg, now: SimTime) {
        self.stats.pushback_received += 1;
        if msg.ttl == 0 {
            return;
        }
        let faces: Vec<(FaceId, f64)> = (0..self.arrivals.len())
            .map(|i| FaceId(i as u32))
            .filter(|&f| f != from)
            .map(|f| (f, self.offered_rate(f, &msg.prefix, now)))
            .filter(|(_, r)| *r > 0.0)
            .collect();
        if faces.is_empty() {
            return;
        }
        let k = self.cfg.fair_share_factor;
        let offenders: Vec<FaceId> = if faces.len() == 1 {
            vec![faces[0].0]
        } else {
            faces
                .iter()
                .filter(|(f, r)| {
                    let others: Vec<f64> = faces.iter().filter(|(g, _)| g != f).map(|(_, r)| *r).collect();
                    let mean = others.iter().sum::<f64>() / others.len() as f64;
                    *r > k * mean
                })
                .map(|(f, _)| *f)
                .collect()
        };
        let lifetime = SimDuration::from_ms(self.cfg.cap_lifetime_ms);
        if offenders.is_empty() {
            // Nobody stands out: split the advice evenly and stop here.
            let each = (msg.rate / faces.len() as f64).max(self.cfg.min_cap_rate);
            for (f, _) in faces {
                self.caps
                    .insert((msg.prefix.clone(), f), RateCap::new(each, now, lifetime));
                self.stats.caps_installed += 1;
            }
            return;
        }
        let others: f64 = faces
            .iter()
            .filter(|(f, _)| !offenders.contains(f))
            .map(|(_, r)| *r)
            .sum();
        let share = ((msg.rate - others).max(self.cfg.min_cap_rate)) / offenders.len() as f64;
        let share = share.max(self.cfg.min_cap_rate);
        let propagate = msg.ttl > 1;
        for f in offenders {
            let local = if propagate {
                share * self.cfg.backstop_factor
            } else {
                share
            };
            self.caps
                .insert((msg.prefix.clone(), f), RateCap::new(local, now, lifetime));
            self.stats.caps_installed += 1;
            if propagate && self.cooled_down(&msg.prefix, f, now) {
                self.last_pushback.insert((msg.prefix.clone(), f), now);
                self.stats.pushback_sent += 1;
                self.outbox.push((
                    f,
                    PushbackMsg {
                        prefix: msg.prefix.clone(),
                        rate: share,
                        ttl: msg.ttl - 1,
                    },
                ));
            }
        }
    }

    /// Installed cap rate for (prefix, face), if any.
    pub fn cap(&self, prefix: &Name, face: FaceId) -> Option<f64> {
        self.caps.get(&(prefix.clone(), face)).map(|c| c.rate)
    }

    pub fn take_outbox(&mut self) -> Vec<(FaceId, PushbackMsg)> {
        std::mem::take(&mut self.outbox)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simnet::LinkId;
    use crate::simnet::LinkKind;
    use rand::SeedableRng;

    fn faces(n: usize, bw: u64) -> Vec<FaceInfo> {
        (0..n)
            .map(|i| FaceInfo {
                link: LinkId(i as u32),
                kind: LinkKind::P2p,
                bandwidth_bps: bw,
                delay: SimDuration::from_ms(1),
                peers: vec![],
            })
            .collect()
    }

    fn interest(name: &str, nonce: u64) -> Interest {
        Interest::new(Name::parse(name).unwrap(), nonce)
    }

    fn rng() -> SimRng {
        SimRng::seed_from_u64(7)
    }

    #[test]
    fn quota_formula() {
        assert_eq!(compute_outgoing_quota(12_000_000, 1500, 4.0), 4000);
        assert_eq!(compute_outgoing_quota(12_000_000, 1500, 1e-12), 1);
        assert_eq!(compute_outgoing_quota(24_000_000, 1500, 4.0), 8000);
        assert_eq!(compute_outgoing_quota(1_000_000, 1500, 0.3), 25);
    }

    #[test]
    fn egress_quota_is_per_face() {
        let cfg = FloodingConfig {
            egress_quota: true,
            interest_timeout_ms: 12,
            ..Default::default()
        };
        // 1 Mbit/s for 12 ms returns one 1500-byte packet.
        let mut g = FloodGuard::new(cfg, &faces(3, 1_000_000));
        let mut r = rng();
        let now = SimTime::ZERO;
        assert_eq!(g.egress_quota(FaceId(1)), 1);
        g.admit(FaceId(0), &interest("/a/1", 1), &[FaceId(1)], now, &mut r)
            .unwrap();
        assert_eq!(
            g.admit(FaceId(0), &interest("/a/2", 2), &[FaceId(1)], now, &mut r),
            Err(Rejection::EgressQuota)
        );
        assert!(g
            .admit(FaceId(0), &interest("/b/1", 3), &[FaceId(2)], now, &mut r)
            .is_ok());
    }

    #[test]
    fn counters_return_to_zero() {
        let cfg = FloodingConfig {
            egress_quota: true,
            ingress_limit: Some(10),
            namespaces: vec![NamespaceQuotaConfig {
                prefix: Name::parse("/a").unwrap(),
                max_pending: 10,
            }],
            ..Default::default()
        };
        let mut g = FloodGuard::new(cfg, &faces(2, 12_000_000));
        let mut r = rng();
        let adms: Vec<_> = (0..5)
            .map(|i| {
                g.admit(
                    FaceId(0),
                    &interest(&format!("/a/{i}"), i),
                    &[FaceId(1)],
                    SimTime::ZERO,
                    &mut r,
                )
                .unwrap()
            })
            .collect();
        assert_eq!(g.egress_pending(FaceId(1)), 5);
        assert_eq!(g.namespace_pending(0), 5);
        for (i, a) in adms.iter().enumerate() {
            g.release(a, i % 2 == 0, SimTime::from_ms(1));
        }
        assert_eq!(g.egress_pending(FaceId(1)), 0);
        assert_eq!(g.ingress_pending(FaceId(0)), 0);
        assert_eq!(g.namespace_pending(0), 0);
    }

    #[test]
    fn all_zero_admits() {
        let mut g = FloodGuard::new(FloodingConfig::default(), &faces(2, 1_000_000));
        assert!(g
            .admit(FaceId(0), &interest("/x", 1), &[FaceId(1)], SimTime::ZERO, &mut rng())
            .is_ok());
    }

    #[test]
    fn ingress_limit_rejects() {
        let cfg = FloodingConfig {
            ingress_limit: Some(1),
            ..Default::default()
        };
        let mut g = FloodGuard::new(cfg, &faces(2, 1_000_000));
        let mut r = rng();
        g.admit(FaceId(0), &interest("/x/1", 1), &[FaceId(1)], SimTime::ZERO, &mut r)
            .unwrap();
        assert_eq!(
            g.admit(FaceId(0), &interest("/x/2", 2), &[FaceId(1)], SimTime::ZERO, &mut r),
            Err(Rejection::IngressLimit)
        );
    }

    fn ns_guard(max: u32) -> FloodGuard {
        let cfg = FloodingConfig {
            namespaces: vec![NamespaceQuotaConfig {
                prefix: Name::parse("/v").unwrap(),
                max_pending: max,
            }],
            ..Default::default()
        };
        FloodGuard::new(cfg, &faces(3, 12_000_000))
    }

    #[test]
    fn throttle_separates_attacker_from_honest() {
        let mut g = ns_guard(100_000);
        let mut r = rng();
        let now = SimTime::from_ms(100);
        // Synthetic streams: attacker ingress 95% expiry, honest 2%.
        let admitted: Vec<_> = (0..100u64)
            .map(|i| {
                let a = g
                    .admit(FaceId(0), &interest(&format!("/v/a{i}"), i), &[FaceId(2)], now, &mut r)
                    .unwrap();
                let h = g
                    .admit(FaceId(1), &interest(&format!("/v/h{i}"), i), &[FaceId(2)], now, &mut r)
                    .unwrap();
                (a, h)
            })
            .collect();
        for (i, (a, h)) in admitted.iter().enumerate() {
            g.release(a, i % 20 == 0, now);
            g.release(h, i % 50 != 0, now);
        }
        let fa = g.throttle_fraction(0, FaceId(0), now);
        let fh = g.throttle_fraction(0, FaceId(1), now);
        assert!((fa - 0.05).abs() < 1e-9, "{fa}");
        assert!((fh - 0.98).abs() < 1e-9, "{fh}");
        assert!(fa < fh);
    }

    #[test]
    fn throttle_floor_holds_under_total_expiry() {
        let mut g = ns_guard(100_000);
        let mut r = rng();
        let now = SimTime::from_ms(100);
        let admitted: Vec<_> = (0..200u64)
            .map(|i| {
                g.admit(FaceId(0), &interest(&format!("/v/{i}"), i), &[FaceId(2)], now, &mut r)
                    .unwrap()
            })
            .collect();
        for a in &admitted {
            g.release(a, false, now);
        }
        assert_eq!(g.throttle_fraction(0, FaceId(0), now), 0.05);
        // About 5% of further interests still get through.
        let admitted = (0..4000u64)
            .filter(|i| {
                g.admit(FaceId(0), &interest(&format!("/v/n{i}"), *i), &[FaceId(2)], now, &mut r)
                    .is_ok()
            })
            .count();
        assert!((120..=280).contains(&admitted), "{admitted}");
    }

    #[test]
    fn empty_window_means_no_throttle() {
        let mut g = ns_guard(10);
        assert_eq!(g.throttle_fraction(0, FaceId(0), SimTime::ZERO), 1.0);
    }

    #[test]
    fn pushback_once_per_cooldown_per_offender() {
        let cfg = FloodingConfig {
            namespaces: vec![NamespaceQuotaConfig {
                prefix: Name::parse("/v").unwrap(),
                max_pending: 4,
            }],
            throttle: false,
            pushback: true,
            ..Default::default()
        };
        let mut g = FloodGuard::new(cfg, &faces(3, 12_000_000));
        let mut r = rng();
        let t0 = SimTime::from_ms(10);
        // Face 0 gets a record of expiries, face 1 of successes.
        for i in 0..4u64 {
            let a = g
                .admit(FaceId(0), &interest(&format!("/v/a{i}"), i), &[FaceId(2)], t0, &mut r)
                .unwrap();
            g.release(&a, false, t0);
            let h = g
                .admit(FaceId(1), &interest(&format!("/v/h{i}"), i), &[FaceId(2)], t0, &mut r)
                .unwrap();
            g.release(&h, true, t0);
        }
        for i in 0..4u64 {
            g.admit(FaceId(0), &interest(&format!("/v/b{i}"), i), &[FaceId(2)], t0, &mut r)
                .unwrap();
        }
        for i in 0..50u64 {
            let t = t0 + SimDuration::from_ms(i * 10);
            assert_eq!(
                g.admit(FaceId(0), &interest(&format!("/v/c{i}"), i), &[FaceId(2)], t, &mut r),
                Err(Rejection::NamespaceQuota)
            );
        }
        let out = g.take_outbox();
        assert_eq!(out.len(), 1, "one message in the first cooldown period");
        assert_eq!(out[0].0, FaceId(0));
        // 4 pending over 4 s, halved, then raised to the 1/s floor.
        assert_eq!(out[0].1.rate, 1.0);
        let t = t0 + SimDuration::from_ms(1000);
        let _ = g.admit(FaceId(0), &interest("/v/d", 1), &[FaceId(2)], t, &mut r);
        assert_eq!(g.take_outbox().len(), 1);
    }

    #[test]
    fn pushback_caps_and_propagates_to_heavy_ingress() {
        let cfg = FloodingConfig {
            pushback: true,
            ..Default::default()
        };
        let mut g = FloodGuard::new(cfg, &faces(3, 12_000_000));
        let mut r = rng();
        let mut t = SimTime::ZERO;
        // Face 0: 100/s, face 1: 5/s, all towards face 2.
        for i in 0..200u64 {
            g.admit(FaceId(0), &interest(&format!("/v/z{i}"), i), &[FaceId(2)], t, &mut r)
                .unwrap();
            if i % 20 == 0 {
                g.admit(FaceId(1), &interest(&format!("/v/h{i}"), i), &[FaceId(2)], t, &mut r)
                    .unwrap();
            }
            t += SimDuration::from_ms(10);
        }
        let msg = PushbackMsg {
            prefix: Name::parse("/v").unwrap(),
            rate: 25.0,
            ttl: 8,
        };
        g.on_pushback(FaceId(2), &msg, t);
        let out = g.take_outbox();
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].0, FaceId(0));
        assert_eq!(out[0].1.ttl, 7);
        assert!((out[0].1.rate - 20.0).abs() < 1e-9, "{}", out[0].1.rate);
        assert!(g.cap(&msg.prefix, FaceId(1)).is_none());
        assert!((g.cap(&msg.prefix, FaceId(0)).unwrap() - 40.0).abs() < 1e-9);
        // Non-matching prefixes are untouched by the cap.
        let mut admitted_other = 0;
        for i in 0..100u64 {
            t += SimDuration::from_ms(1);
            if g.admit(FaceId(0), &interest(&format!("/w/{i}"), i), &[FaceId(2)], t, &mut r)
                .is_ok()
            {
                admitted_other += 1;
            }
        }
        assert_eq!(admitted_other, 100);
    }

    #[test]
    fn exhausted_ttl_stops_propagation() {
        let cfg = FloodingConfig {
            pushback: true,
            ..Default::default()
        };
        let mut g = FloodGuard::new(cfg, &faces(2, 12_000_000));
        let mut r = rng();
        for i in 0..10u64 {
            g.admit(
                FaceId(0),
                &interest(&format!("/v/{i}"), i),
                &[FaceId(1)],
                SimTime::ZERO,
                &mut r,
            )
            .unwrap();
        }
        let msg = PushbackMsg {
            prefix: Name::parse("/v").unwrap(),
            rate: 5.0,
            ttl: 1,
        };
        g.on_pushback(FaceId(1), &msg, SimTime::from_ms(1));
        assert!(g.take_outbox().is_empty());
        assert!(g.cap(&msg.prefix, FaceId(0)).is_some());
        g.on_pushback(FaceId(1), &PushbackMsg { ttl: 0, ..msg.clone() }, SimTime::from_ms(1));
        assert!(g.take_outbox().is_empty());
    }
}
