//! Content producers: a static catalog plus optional dynamic namespaces
//! whose packets are signed per request.

use serde::{Deserialize, Serialize};

use super::catalog::{self, Catalog};
use crate::error::CatalogError;
use crate::ndn::{interest_matches, DataPacket, DataParts, Interest, KeyLocator, KeyPair, Name};
use crate::simnet::{SimDuration, SimTime};

fn default_payload() -> usize {
    1000
}

fn default_sign_us() -> u64 {
    800
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CollectionSpec {
    pub prefix: Name,
    pub count: usize,
    /// Number of forward hash links per fragment.
    pub links: usize,
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ItemSetSpec {
    pub prefix: Name,
    pub count: usize,
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProducerConfig {
    /// Prefixes announced into routing.
    pub prefixes: Vec<Name>,
    #[serde(default)]
    pub collections: Vec<CollectionSpec>,
    #[serde(default)]
    pub items: Vec<ItemSetSpec>,
    /// Namespaces answered by signing a fresh packet for each request.
    #[serde(default)]
    pub dynamic: Vec<Name>,
    #[serde(default = "default_sign_us")]
    pub sign_us: u64,
    #[serde(default = "default_payload")]
    pub dynamic_payload_bytes: usize,
}

impl ProducerConfig {
    pub fn new(prefix: Name) -> Self {
        Self {
            prefixes: vec![prefix],
            collections: Vec::new(),
            items: Vec::new(),
            dynamic: Vec::new(),
            sign_us: default_sign_us(),
            dynamic_payload_bytes: default_payload(),
        }
    }
}

/// Name under which a producer publishes its public key.
pub fn key_name(prefix: &Name) -> Name {
    prefix.child_str("KEY").expect("static component")
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ProducerStats {
    pub interests_in: u64,
    pub attack_interests_in: u64,
    pub static_served: u64,
    pub dynamic_served: u64,
    pub ignored: u64,
    /// Total simulated CPU time spent signing, in microseconds.
    pub busy_us: u64,
}

#[derive(Debug, Clone)]
pub struct Producer {
    cfg: ProducerConfig,
    key: KeyPair,
    catalog: Catalog,
    cpu_busy: SimTime,
    pub stats: ProducerStats,
}

impl Producer {
    pub fn new(cfg: ProducerConfig, key: KeyPair) -> Result<Self, CatalogError> {
        let mut catalog = Catalog::new();
        for c in &cfg.collections {
            catalog.extend(catalog::build_collection(
                &c.prefix,
                c.count,
                c.links,
                &key,
                c.payload_bytes,
            )?);
        }
        for s in &cfg.items {
            catalog.extend(catalog::build_items(&s.prefix, s.count, &key, s.payload_bytes)?);
        }
        for p in &cfg.prefixes {
            catalog.insert(catalog::key_packet(key_name(p), &key)?);
        }
        Ok(Self {
            cfg,
            key,
            catalog,
            cpu_busy: SimTime::ZERO,
            stats: ProducerStats::default(),
        })
    }

    pub fn config(&self) -> &ProducerConfig {
        &self.cfg
    }

    pub fn key(&self) -> &KeyPair {
        &self.key
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn catalog_mut(&mut self) -> &mut Catalog {
        &mut self.catalog
    }

    /// Answers `interest`, returning the packet and the time until it is
    /// ready. Unsatisfiable interests are ignored.
    pub fn serve(&mut self, interest: &Interest, attack: bool, now: SimTime) -> Option<(DataPacket, SimDuration)> {
        self.stats.interests_in += 1;
        if attack {
            self.stats.attack_interests_in += 1;
        }
        if let Some(p) = self.catalog.lookup(interest) {
            self.stats.static_served += 1;
            return Some((p.clone(), SimDuration::ZERO));
        }
        let base = interest.name.without_digest();
        let dynamic = self
            .cfg
            .dynamic
            .iter()
            .any(|d| d.is_prefix_of(&base) && base.len() > d.len());
        let cheap_reject = interest.publisher_key_digest.is_some_and(|d| d != self.key.digest())
            || interest.exclude.as_ref().is_some_and(|e| e.is_saturated());
        if !dynamic || cheap_reject {
            self.stats.ignored += 1;
            return None;
        }
        let payload = catalog::filler(&base, self.cfg.dynamic_payload_bytes);
        let locator = KeyLocator::EmbeddedKey(self.key.public_key().to_vec());
        let pkt = DataParts::unsigned(base, payload, locator, self.key.digest())
            .sign(&self.key)
            .expect("producer key signs");
        let cost = SimDuration::from_micros(self.cfg.sign_us);
        self.cpu_busy = self.cpu_busy.max(now) + cost;
        self.stats.busy_us += self.cfg.sign_us;
        if !interest_matches(&pkt, interest) {
            self.stats.ignored += 1;
            return None;
        }
        self.stats.dynamic_served += 1;
        Some((pkt, self.cpu_busy - now))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::{ExcludeFilter, SignatureScheme};

    fn n(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    fn producer() -> Producer {
        let mut cfg = ProducerConfig::new(n("/p"));
        cfg.items.push(ItemSetSpec {
            prefix: n("/p/s"),
            count: 4,
            payload_bytes: 100,
        });
        cfg.dynamic.push(n("/p/search"));
        Producer::new(cfg, KeyPair::from_seed(SignatureScheme::Ed25519, 4).unwrap()).unwrap()
    }

    #[test]
    fn unsatisfiable_interests_ignored() {
        let mut p = producer();
        let t = SimTime::ZERO;
        assert!(p.serve(&Interest::new(n("/p/s/8f3a9c"), 1), true, t).is_none());
        assert!(p
            .serve(&Interest::new(n("/p/s/1"), 1).with_key_digest([9; 32]), true, t)
            .is_none());
        let ex = Interest::new(n("/p/search/q"), 1).with_exclude(ExcludeFilter::all_ones());
        assert!(p.serve(&ex, true, t).is_none());
        assert_eq!(p.stats.ignored, 3);
        assert_eq!(p.stats.busy_us, 0);
    }

    #[test]
    fn static_serving_is_deterministic() {
        let mut p = producer();
        let a = p.serve(&Interest::new(n("/p/s/2"), 1), false, SimTime::ZERO).unwrap();
        let b = p.serve(&Interest::new(n("/p/s/2"), 2), false, SimTime::ZERO).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.1, SimDuration::ZERO);
        assert_eq!(a.0.canonical_serialize(true), b.0.canonical_serialize(true));
    }

    #[test]
    fn dynamic_requests_pay_signing_cost() {
        let mut p = producer();
        let now = SimTime::from_ms(10);
        let (d, wait) = p.serve(&Interest::new(n("/p/search/a"), 1), false, now).unwrap();
        assert_eq!(d.verify_embedded(), Some(true));
        assert_eq!(wait, SimDuration::from_micros(800));
        let (_, wait) = p.serve(&Interest::new(n("/p/search/b"), 2), false, now).unwrap();
        assert_eq!(wait, SimDuration::from_micros(1600));
        assert_eq!(p.stats.dynamic_served, 2);
    }

    #[test]
    fn key_is_published() {
        let mut p = producer();
        let (k, _) = p
            .serve(&Interest::new(key_name(&n("/p")), 1), false, SimTime::ZERO)
            .unwrap();
        assert_eq!(k.payload(), p.key().public_key());
    }
}
