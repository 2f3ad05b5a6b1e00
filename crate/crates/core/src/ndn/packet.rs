use std::collections::BTreeSet;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::crypto::{self, Digest32, KeyPair};
use super::name::{Component, ComponentKind, Name};
use super::wire;
use crate::error::CryptoError;

pub const DEFAULT_LIFETIME_MS: u32 = 4000;
pub const BLOOM_BITS: usize = 256;
pub const BLOOM_HASHES: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswerOriginKind {
    #[default]
    Any,
    ProducerOnly,
}

/// Describes components that must not follow the interest prefix in a
/// returned data packet's full name.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum ExcludeFilter {
    ExplicitSet(BTreeSet<Component>),
    Bloom(Box<[u8; BLOOM_BITS / 8]>),
}

impl ExcludeFilter {
    pub fn explicit(components: impl IntoIterator<Item = Component>) -> Self {
        Self::ExplicitSet(components.into_iter().collect())
    }

    pub fn empty_bloom() -> Self {
        Self::Bloom(Box::new([0; BLOOM_BITS / 8]))
    }

    /// The filter with every bit set: excludes every component.
    pub fn all_ones() -> Self {
        Self::Bloom(Box::new([0xff; BLOOM_BITS / 8]))
    }

    fn probes(component: &Component) -> [usize; BLOOM_HASHES] {
        let mut input = Vec::with_capacity(component.as_bytes().len() + 1);
        input.push(match component.kind() {
            ComponentKind::Generic => 0,
            ComponentKind::Digest => 1,
        });
        input.extend_from_slice(component.as_bytes());
        let h = crypto::sha256(&input);
        let mut out = [0; BLOOM_HASHES];
        for (j, slot) in out.iter_mut().enumerate() {
            *slot = h[j] as usize % BLOOM_BITS;
        }
        out
    }

    /// True for a Bloom filter with every bit set, which no component passes.
    pub fn is_saturated(&self) -> bool {
        matches!(self, Self::Bloom(bits) if bits.iter().all(|&b| b == 0xff))
    }

    pub fn insert(&mut self, component: Component) {
        match self {
            Self::ExplicitSet(set) => {
                set.insert(component);
            }
            Self::Bloom(bits) => {
                for p in Self::probes(&component) {
                    bits[p / 8] |= 1 << (p % 8);
                }
            }
        }
    }

    pub fn excludes(&self, component: &Component) -> bool {
        match self {
            Self::ExplicitSet(set) => set.contains(component),
            Self::Bloom(bits) => Self::probes(component)
                .iter()
                .all(|&p| bits[p / 8] & (1 << (p % 8)) != 0),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Self::ExplicitSet(set) => set.len(),
            Self::Bloom(bits) => bits.iter().map(|b| b.count_ones() as usize).sum(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Interest {
    pub name: Name,
    pub nonce: u64,
    pub publisher_key_digest: Option<Digest32>,
    pub exclude: Option<ExcludeFilter>,
    pub answer_origin_kind: AnswerOriginKind,
    /// `None` means unlimited.
    pub scope: Option<u8>,
    pub lifetime_ms: u32,
}

impl Interest {
    pub fn new(name: Name, nonce: u64) -> Self {
        Self {
            name,
            nonce,
            publisher_key_digest: None,
            exclude: None,
            answer_origin_kind: AnswerOriginKind::Any,
            scope: None,
            lifetime_ms: DEFAULT_LIFETIME_MS,
        }
    }

    pub fn with_key_digest(mut self, digest: Digest32) -> Self {
        self.publisher_key_digest = Some(digest);
        self
    }

    pub fn with_exclude(mut self, exclude: ExcludeFilter) -> Self {
        self.exclude = Some(exclude);
        self
    }

    pub fn with_scope(mut self, scope: u8) -> Self {
        self.scope = Some(scope);
        self
    }

    pub fn with_lifetime(mut self, ms: u32) -> Self {
        self.lifetime_ms = ms;
        self
    }

    pub fn with_answer_origin(mut self, kind: AnswerOriginKind) -> Self {
        self.answer_origin_kind = kind;
        self
    }

    /// Digest over the selector fields that decide which data can answer the
    /// interest (everything except name, nonce, scope and lifetime).
    pub fn option_fingerprint(&self) -> Digest32 {
        crypto::sha256(&wire::encode_selectors(self))
    }

    pub fn wire_len(&self) -> usize {
        wire::interest_len(self)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum KeyLocator {
    EmbeddedKey(Vec<u8>),
    KeyName(Name),
}

/// A named, signed content object. Immutable once built; the content hash is
/// computed lazily and memoised.
#[derive(Debug, Clone)]
pub struct DataPacket {
    name: Name,
    payload: Vec<u8>,
    signature: Vec<u8>,
    key_locator: KeyLocator,
    publisher_key_digest: Digest32,
    hash: OnceLock<Digest32>,
}

impl PartialEq for DataPacket {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.payload == other.payload
            && self.signature == other.signature
            && self.key_locator == other.key_locator
            && self.publisher_key_digest == other.publisher_key_digest
    }
}

impl Eq for DataPacket {}

/// Plain-field view of a data packet, for building or tampering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DataParts {
    pub name: Name,
    pub payload: Vec<u8>,
    pub signature: Vec<u8>,
    pub key_locator: KeyLocator,
    pub publisher_key_digest: Digest32,
}

impl DataParts {
    pub fn unsigned(name: Name, payload: Vec<u8>, key_locator: KeyLocator, digest: Digest32) -> Self {
        Self {
            name,
            payload,
            signature: Vec::new(),
            key_locator,
            publisher_key_digest: digest,
        }
    }

    pub fn build(self) -> DataPacket {
        DataPacket {
            name: self.name,
            payload: self.payload,
            signature: self.signature,
            key_locator: self.key_locator,
            publisher_key_digest: self.publisher_key_digest,
            hash: OnceLock::new(),
        }
    }

    /// Signs with `key`, stamping its digest into the packet first so the
    /// digest is covered by the signature.
    pub fn sign(mut self, key: &KeyPair) -> Result<DataPacket, CryptoError> {
        self.publisher_key_digest = key.digest();
        self.signature.clear();
        let unsigned = self.build();
        let signature = key.sign(&unsigned.signed_image())?;
        let mut parts = unsigned.into_parts();
        parts.signature = signature;
        Ok(parts.build())
    }
}

impl DataPacket {
    pub fn name(&self) -> &Name {
        &self.name
    }

    pub fn payload(&self) -> &[u8] {
        &self.payload
    }

    pub fn signature(&self) -> &[u8] {
        &self.signature
    }

    pub fn key_locator(&self) -> &KeyLocator {
        &self.key_locator
    }

    pub fn publisher_key_digest(&self) -> Digest32 {
        self.publisher_key_digest
    }

    pub fn into_parts(self) -> DataParts {
        DataParts {
            name: self.name,
            payload: self.payload,
            signature: self.signature,
            key_locator: self.key_locator,
            publisher_key_digest: self.publisher_key_digest,
        }
    }

    pub fn to_parts(&self) -> DataParts {
        self.clone().into_parts()
    }

    /// The bytes the signature covers.
    pub fn signed_image(&self) -> Vec<u8> {
        wire::serialize_data(self, true, false)
    }

    /// Full canonical encoding including the signature.
    pub fn canonical_serialize(&self, include_hash_component: bool) -> Vec<u8> {
        wire::serialize_data(self, include_hash_component, true)
    }

    /// SHA-256 over name (up to any trailing digest component), payload, key
    /// locator, publisher digest and signature.
    pub fn content_hash(&self) -> Digest32 {
        *self
            .hash
            .get_or_init(|| crypto::sha256(&self.canonical_serialize(false)))
    }

    /// The packet's full name: its name plus the implicit digest component.
    pub fn full_name(&self) -> Name {
        self.name
            .without_digest()
            .child(Component::digest(self.content_hash()))
            .unwrap_or_else(|_| self.name.clone())
    }

    /// The component that follows `prefix` in this packet's full name.
    pub fn component_after(&self, prefix_len: usize) -> Component {
        let base = self.name.without_digest();
        match base.get(prefix_len) {
            Some(c) => c.clone(),
            None => Component::digest(self.content_hash()),
        }
    }

    pub fn verify_with(&self, public_key: &[u8]) -> bool {
        crypto::verify_bytes(public_key, &self.signed_image(), &self.signature)
    }

    /// Verifies against the embedded key, also requiring that the key hashes
    /// to the stated publisher digest. Named keys cannot be checked here.
    pub fn verify_embedded(&self) -> Option<bool> {
        match &self.key_locator {
            KeyLocator::EmbeddedKey(k) => Some(crypto::sha256(k) == self.publisher_key_digest && self.verify_with(k)),
            KeyLocator::KeyName(_) => None,
        }
    }

    pub fn wire_len(&self) -> usize {
        wire::data_len(self)
    }
}

/// The interest/data matching predicate.
///
/// All of the following must hold: the interest name (less any trailing
/// digest component) is a prefix of the data name; a requested publisher key
/// digest equals the data's; the component after the interest prefix is not
/// excluded; and a trailing digest component equals the data's content hash.
pub fn interest_matches(data: &DataPacket, interest: &Interest) -> bool {
    let wanted_hash = interest.name.trailing_digest();
    let base = interest.name.without_digest();
    let data_base = data.name().without_digest();
    if !base.is_prefix_of(&data_base) {
        return false;
    }
    if let Some(d) = interest.publisher_key_digest {
        if d != data.publisher_key_digest() {
            return false;
        }
    }
    if let Some(ex) = &interest.exclude {
        if ex.excludes(&data.component_after(base.len())) {
            return false;
        }
    }
    if let Some(h) = wanted_hash {
        if h != data.content_hash() {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::crypto::SignatureScheme;
    use proptest::prelude::*;

    fn n(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    fn key(seed: u64) -> KeyPair {
        KeyPair::from_seed(SignatureScheme::Rsa1024, seed).unwrap()
    }

    fn signed(name: &str, payload: &[u8], k: &KeyPair) -> DataPacket {
        DataParts::unsigned(
            n(name),
            payload.to_vec(),
            KeyLocator::EmbeddedKey(k.public_key().to_vec()),
            [0; 32],
        )
        .sign(k)
        .unwrap()
    }

    #[test]
    fn sign_then_verify() {
        let a = key(1);
        let b = key(2);
        let p = signed("/ndn/cnn/news", b"story", &a);
        assert_eq!(p.publisher_key_digest(), a.digest());
        assert!(p.verify_with(a.public_key()));
        assert!(!p.verify_with(b.public_key()));
        assert_eq!(p.verify_embedded(), Some(true));
    }

    #[test]
    fn tampering_breaks_signature() {
        let a = key(1);
        let p = signed("/ndn/cnn/news", b"story", &a);

        let mut parts = p.to_parts();
        parts.payload[0] ^= 1;
        assert!(!parts.build().verify_with(a.public_key()));

        let mut parts = p.to_parts();
        parts.name = n("/ndn/cnn/sport");
        assert!(!parts.build().verify_with(a.public_key()));
    }

    #[test]
    fn content_hash_tracks_signature_bytes() {
        let a = key(1);
        let p = signed("/ndn/x", b"payload", &a);
        assert_eq!(p.content_hash(), p.clone().content_hash());
        let mut parts = p.to_parts();
        parts.signature[5] ^= 0x80;
        assert_ne!(parts.build().content_hash(), p.content_hash());
    }

    #[test]
    fn prefix_rule() {
        let a = key(1);
        let p = signed("/ndn/cnn/news/2012may20", b"x", &a);
        assert!(interest_matches(&p, &Interest::new(n("/ndn/cnn"), 1)));
        assert!(!interest_matches(&p, &Interest::new(n("/ndn/bbc"), 1)));
    }

    #[test]
    fn random_key_digest_matches_nothing() {
        let a = key(1);
        let p = signed("/ndn/prefix/item", b"x", &a);
        let i = Interest::new(n("/ndn/prefix"), 1).with_key_digest([0x5a; 32]);
        assert!(!interest_matches(&p, &i));
        let i = Interest::new(n("/ndn/prefix"), 1).with_key_digest(a.digest());
        assert!(interest_matches(&p, &i));
    }

    #[test]
    fn all_ones_bloom_excludes_everything() {
        let a = key(1);
        let ex = ExcludeFilter::all_ones();
        for suffix in ["x", "y", "video", "137"] {
            let p = signed(&format!("/ndn/prefix/{suffix}"), b"x", &a);
            let i = Interest::new(n("/ndn/prefix"), 1).with_exclude(ex.clone());
            assert!(!interest_matches(&p, &i));
        }
        let p = signed("/ndn/prefix", b"exact", &a);
        let i = Interest::new(n("/ndn/prefix"), 1).with_exclude(ex);
        assert!(!interest_matches(&p, &i), "implicit digest is excluded too");
    }

    #[test]
    fn explicit_exclude_on_next_component() {
        let a = key(1);
        let p = signed("/ndn/prefix/x/y", b"x", &a);
        let ex = ExcludeFilter::explicit([Component::try_from("x").unwrap()]);
        assert!(!interest_matches(
            &p,
            &Interest::new(n("/ndn/prefix"), 1).with_exclude(ex.clone())
        ));
        let ex2 = ExcludeFilter::explicit([Component::try_from("y").unwrap()]);
        assert!(interest_matches(
            &p,
            &Interest::new(n("/ndn/prefix"), 1).with_exclude(ex2)
        ));
    }

    #[test]
    fn exclude_by_implicit_digest_separates_copies() {
        let a = key(1);
        let good = signed("/ndn/item", b"good", &a);
        let mut parts = good.to_parts();
        parts.signature = vec![7; 128];
        let bad = parts.build();
        let ex = ExcludeFilter::explicit([Component::digest(bad.content_hash())]);
        let i = Interest::new(n("/ndn/item"), 1).with_exclude(ex);
        assert!(!interest_matches(&bad, &i));
        assert!(interest_matches(&good, &i));
    }

    #[test]
    fn trailing_hash_component() {
        let a = key(1);
        let p = signed("/ndn/coll/2", b"frag", &a);
        let good = n("/ndn/coll/2").child(Component::digest(p.content_hash())).unwrap();
        assert!(interest_matches(&p, &Interest::new(good, 1)));
        let bad = n("/ndn/coll/2").child(Component::digest([1; 32])).unwrap();
        assert!(!interest_matches(&p, &Interest::new(bad, 1)));
        assert_eq!(p.full_name().trailing_digest(), Some(p.content_hash()));
    }

    #[test]
    fn bloom_insert_and_check() {
        let mut f = ExcludeFilter::empty_bloom();
        let c = Component::try_from("abc").unwrap();
        assert!(!f.excludes(&c));
        f.insert(c.clone());
        assert!(f.excludes(&c));
        assert!(f.len() <= BLOOM_HASHES);
    }

    proptest! {
        #[test]
        fn removing_options_never_unmatches(
            with_digest in any::<bool>(),
            with_exclude in any::<bool>(),
            with_hash in any::<bool>(),
            wrong_digest in any::<bool>(),
            excl in "[a-c]",
            next in "[a-c]",
        ) {
            let a = key(1);
            let p = signed(&format!("/ndn/p/{next}"), b"v", &a);
            let base = if with_hash {
                n(&format!("/ndn/p/{next}")).child(Component::digest(p.content_hash())).unwrap()
            } else {
                n("/ndn/p")
            };
            let mut full = Interest::new(base.clone(), 3);
            if with_digest {
                full = full.with_key_digest(if wrong_digest { [9; 32] } else { a.digest() });
            }
            if with_exclude {
                full = full.with_exclude(ExcludeFilter::explicit([Component::try_from(excl.as_str()).unwrap()]));
            }
            if interest_matches(&p, &full) {
                let mut i1 = full.clone(); i1.publisher_key_digest = None;
                let mut i2 = full.clone(); i2.exclude = None;
                let mut i3 = full.clone(); i3.name = base.without_digest();
                prop_assert!(interest_matches(&p, &i1));
                prop_assert!(interest_matches(&p, &i2));
                prop_assert!(interest_matches(&p, &i3));
            }
        }
    }
}
