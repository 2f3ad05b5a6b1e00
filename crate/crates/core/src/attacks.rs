//! Attack descriptions and the interest generators zombies run.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CatalogError;
use crate::ndn::{DataPacket, DataParts, ExcludeFilter, Interest, KeyLocator, KeyPair, Name};
use crate::nodes::catalog::filler;
use crate::nodes::compromised::PoisonMode;
use crate::simnet::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AttackKind {
    FloodStatic,
    FloodDynamic,
    FloodUnsatNonce,
    FloodUnsatKeydigest,
    FloodUnsatExclude,
    KeylocatorAbuse,
    PoisonInject,
    PoisonAnticipate,
}

impl AttackKind {
    pub fn is_flood(self) -> bool {
        matches!(
            self,
            AttackKind::FloodStatic
                | AttackKind::FloodDynamic
                | AttackKind::FloodUnsatNonce
                | AttackKind::FloodUnsatKeydigest
                | AttackKind::FloodUnsatExclude
        )
    }

    /// Whether the attack's `zombies` list names interest-generating hosts.
    pub fn uses_zombies(self) -> bool {
        self.is_flood() || self == AttackKind::PoisonAnticipate
    }
}

/// `prefix/first` .. `prefix/(first+count-1)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NameSet {
    pub prefix: Name,
    pub count: usize,
    #[serde(default)]
    pub first: usize,
}

impl NameSet {
    pub fn names(&self) -> Vec<Name> {
        (self.first..self.first + self.count)
            .map(|k| self.prefix.child_str(&k.to_string()).expect("numeric component"))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Pacing {
    #[default]
    Constant,
    Poisson,
}

fn default_jitter() -> u64 {
    50
}

fn default_copies() -> u32 {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttackSpec {
    pub kind: AttackKind,
    /// Zombie hosts for floods and anticipation waves, compromised routers
    /// for injection, and the publishing producer for key-locator abuse.
    pub zombies: Vec<String>,
    pub target: Name,
    /// Interests per second per zombie.
    pub rate: f64,
    pub start_ms: u64,
    pub stop_ms: u64,
    /// Explicit content names (static floods, anticipation targets).
    #[serde(default)]
    pub names: Vec<Name>,
    #[serde(default)]
    pub name_set: Option<NameSet>,
    #[serde(default)]
    pub pacing: Pacing,
    /// Interest lifetime; the network default when absent.
    #[serde(default)]
    pub lifetime_ms: Option<u32>,
    /// Fake key names for key-locator abuse.
    #[serde(default)]
    pub pool: Option<usize>,
    /// Where key-locator abuse packets are published.
    #[serde(default)]
    pub content_prefix: Option<Name>,
    #[serde(default)]
    pub mode: Option<PoisonMode>,
    /// Window over which an anticipation wave is spread.
    #[serde(default = "default_jitter")]
    pub jitter_ms: u64,
    /// Interests per name per zombie in an anticipation wave.
    #[serde(default = "default_copies")]
    pub copies: u32,
}

impl AttackSpec {
    pub fn flood(kind: AttackKind, zombies: &[&str], target: Name, rate: f64, start_ms: u64, stop_ms: u64) -> Self {
        Self {
            kind,
            zombies: zombies.iter().map(|z| z.to_string()).collect(),
            target,
            rate,
            start_ms,
            stop_ms,
            names: Vec::new(),
            name_set: None,
            pacing: Pacing::Constant,
            lifetime_ms: None,
            pool: None,
            content_prefix: None,
            mode: None,
            jitter_ms: default_jitter(),
            copies: default_copies(),
        }
    }

    /// Explicit names followed by the name set.
    pub fn all_names(&self) -> Vec<Name> {
        let mut v = self.names.clone();
        if let Some(s) = &self.name_set {
            v.extend(s.names());
        }
        v
    }

    /// Problems with the attack description itself, independent of the scenario.
    pub fn problems(&self) -> Vec<String> {
        let mut p = Vec::new();
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            p.push(format!("rate must be positive, got {}", self.rate));
        }
        if self.start_ms >= self.stop_ms {
            p.push(format!(
                "start_ms {} must precede stop_ms {}",
                self.start_ms, self.stop_ms
            ));
        }
        if self.zombies.is_empty() && self.kind != AttackKind::PoisonAnticipate {
            p.push("zombies must not be empty".into());
        }
        match self.kind {
            AttackKind::FloodStatic | AttackKind::PoisonAnticipate if self.all_names().is_empty() => {
                p.push(format!("{:?} needs names or name_set", self.kind));
            }
            AttackKind::KeylocatorAbuse => {
                if self.pool.unwrap_or(0) == 0 {
                    p.push("keylocator-abuse needs pool >= 1".into());
                }
                if self.content_prefix.is_none() {
                    p.push("keylocator-abuse needs content_prefix".into());
                }
            }
            AttackKind::PoisonInject if self.mode.is_none() => {
                p.push("poison-inject needs mode".into());
            }
            _ => {}
        }
        p
    }
}

/// The `seq`-th flood interest of zombie `zombie`.
pub fn gen_flood_interest(spec: &AttackSpec, zombie: usize, seq: u64, rng: &mut SimRng) -> Interest {
    let nonce: u64 = rng.gen();
    let base = match spec.kind {
        AttackKind::FloodStatic => {
            let names = spec.all_names();
            Interest::new(names[(seq % names.len() as u64) as usize].clone(), nonce)
        }
        AttackKind::FloodDynamic => {
            let q = format!("z{zombie}q{seq}");
            Interest::new(spec.target.child_str(&q).expect("short component"), nonce)
        }
        AttackKind::FloodUnsatNonce => {
            let r: u64 = rng.gen();
            Interest::new(
                spec.target.child_str(&format!("{r:016x}")).expect("short component"),
                nonce,
            )
        }
        AttackKind::FloodUnsatKeydigest => {
            let names = spec.all_names();
            let name = if names.is_empty() {
                spec.target.clone()
            } else {
                names[(seq % names.len() as u64) as usize].clone()
            };
            Interest::new(name, nonce).with_key_digest(rng.gen())
        }
        AttackKind::FloodUnsatExclude => {
            Interest::new(spec.target.clone(), nonce).with_exclude(ExcludeFilter::all_ones())
        }
        k => panic!("{k:?} is not a flood"),
    };
    match spec.lifetime_ms {
        Some(ms) => base.with_lifetime(ms),
        None => base,
    }
}

/// Validly signed packets under `content_prefix`, each naming a distinct
/// key that does not exist under `victim`.
pub fn build_keylocator_abuse_content(
    victim: &Name,
    content_prefix: &Name,
    n_packets: usize,
    adversary: &KeyPair,
) -> Result<Vec<DataPacket>, CatalogError> {
    if n_packets == 0 {
        return Err(CatalogError::EmptyCollection);
    }
    (0..n_packets)
        .map(|j| {
            let name = content_prefix.child_str(&j.to_string())?;
            let key = victim.child_str("keys")?.child_str(&j.to_string())?;
            let payload = filler(&name, 500);
            Ok(DataParts::unsigned(name, payload, KeyLocator::KeyName(key), adversary.digest()).sign(adversary)?)
        })
        .collect()
}
