//! The compromised-router overlay: answers targeted interests with poisoned
//! content while still forwarding them as usual.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::ndn::crypto::sha256;
use crate::ndn::{DataPacket, DataParts, Interest, KeyLocator, KeyPair, Name};
use crate::simnet::SimTime;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoisonMode {
    /// Honest-looking key and digest, garbage signature.
    Corrupted,
    /// Validly signed under the adversary's own key.
    Fake,
}

pub const POISON_PAYLOAD_BYTES: usize = 1024;

fn garbage(seed: &[u8], len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut block = sha256(seed);
    while out.len() < len {
        out.extend_from_slice(&block);
        block = sha256(&block);
    }
    out.truncate(len);
    out
}

/// Builds a poisoned packet for `name`. Deterministic in its inputs.
pub fn make_poison(mode: PoisonMode, name: &Name, honest: &KeyPair, adversary: &KeyPair) -> DataPacket {
    let tag = format!("poison:{name}");
    let payload = garbage(tag.as_bytes(), POISON_PAYLOAD_BYTES);
    match mode {
        PoisonMode::Corrupted => {
            let mut parts = DataParts::unsigned(
                name.clone(),
                payload,
                KeyLocator::EmbeddedKey(honest.public_key().to_vec()),
                honest.digest(),
            );
            parts.signature = garbage(format!("sig:{name}").as_bytes(), honest.signature_len());
            parts.build()
        }
        PoisonMode::Fake => DataParts::unsigned(
            name.clone(),
            payload,
            KeyLocator::EmbeddedKey(adversary.public_key().to_vec()),
            adversary.digest(),
        )
        .sign(adversary)
        .expect("adversary key signs"),
    }
}

#[derive(Debug, Clone)]
pub struct Compromise {
    pub mode: PoisonMode,
    pub target: Name,
    pub start: SimTime,
    pub stop: SimTime,
    honest: KeyPair,
    adversary: KeyPair,
    made: HashMap<Name, DataPacket>,
    pub injected: u64,
}

impl Compromise {
    pub fn new(
        mode: PoisonMode,
        target: Name,
        start: SimTime,
        stop: SimTime,
        honest: KeyPair,
        adversary: KeyPair,
    ) -> Self {
        Self {
            mode,
            target,
            start,
            stop,
            honest,
            adversary,
            made: HashMap::new(),
            injected: 0,
        }
    }

    pub fn active(&self, now: SimTime) -> bool {
        self.start <= now && now <= self.stop
    }

    /// The poisoned answer to `interest`, if it is targeted and the overlay
    /// is active.
    pub fn serve(&mut self, interest: &Interest, now: SimTime) -> Option<DataPacket> {
        if !self.active(now) {
            return None;
        }
        let name = interest.name.without_digest();
        if !self.target.is_prefix_of(&name) {
            return None;
        }
        let (mode, honest, adversary) = (self.mode, &self.honest, &self.adversary);
        let pkt = self
            .made
            .entry(name.clone())
            .or_insert_with(|| make_poison(mode, &name, honest, adversary))
            .clone();
        self.injected += 1;
        Some(pkt)
    }
}
