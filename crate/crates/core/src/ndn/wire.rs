//! Canonical byte encoding of names and packets.
//!
//! Counts and lengths are 32-bit big-endian, except name components whose
//! length (at most 255) is one byte after a one-byte type tag, so a digest
//! component occupies exactly 34 bytes.
//!
//! Data layout: component count, components, payload, key locator (tag then
//! body), 32-byte publisher key digest, then the signature (absent from the
//! to-be-signed image).

use super::crypto::Digest32;
use super::name::{Component, ComponentKind, Name};
use super::packet::{AnswerOriginKind, DataPacket, DataParts, ExcludeFilter, Interest, KeyLocator};
use crate::error::WireError;

pub const TAG_GENERIC: u8 = 0x00;
pub const TAG_DIGEST: u8 = 0x01;
pub const TAG_EMBEDDED_KEY: u8 = 0x01;
pub const TAG_KEY_NAME: u8 = 0x02;
pub const PACKET_INTEREST: u8 = 0x05;
pub const PACKET_DATA: u8 = 0x06;

const EXCLUDE_NONE: u8 = 0;
const EXCLUDE_SET: u8 = 1;
const EXCLUDE_BLOOM: u8 = 2;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_be_bytes());
}

fn put_component(out: &mut Vec<u8>, c: &Component) {
    out.push(match c.kind() {
        ComponentKind::Generic => TAG_GENERIC,
        ComponentKind::Digest => TAG_DIGEST,
    });
    out.push(c.as_bytes().len() as u8);
    out.extend_from_slice(c.as_bytes());
}

fn put_components(out: &mut Vec<u8>, cs: &[Component]) {
    put_u32(out, cs.len());
    for c in cs {
        put_component(out, c);
    }
}

pub fn encode_name(name: &Name) -> Vec<u8> {
    let mut out = Vec::new();
    put_components(&mut out, name.components());
    out
}

fn name_len(cs: &[Component]) -> usize {
    4 + cs.iter().map(|c| 2 + c.as_bytes().len()).sum::<usize>()
}

pub(crate) fn serialize_data(pkt: &DataPacket, include_hash_component: bool, with_signature: bool) -> Vec<u8> {
    let mut out = Vec::with_capacity(data_len(pkt));
    let comps = pkt.name().components();
    let comps = if !include_hash_component && pkt.name().trailing_digest().is_some() {
        &comps[..comps.len() - 1]
    } else {
        comps
    };
    put_components(&mut out, comps);
    put_u32(&mut out, pkt.payload().len());
    out.extend_from_slice(pkt.payload());
    match pkt.key_locator() {
        KeyLocator::EmbeddedKey(k) => {
            out.push(TAG_EMBEDDED_KEY);
            put_u32(&mut out, k.len());
            out.extend_from_slice(k);
        }
        KeyLocator::KeyName(n) => {
            out.push(TAG_KEY_NAME);
            put_components(&mut out, n.components());
        }
    }
    out.extend_from_slice(&pkt.publisher_key_digest());
    if with_signature {
        put_u32(&mut out, pkt.signature().len());
        out.extend_from_slice(pkt.signature());
    }
    out
}

pub(crate) fn data_len(pkt: &DataPacket) -> usize {
    let locator = match pkt.key_locator() {
        KeyLocator::EmbeddedKey(k) => 5 + k.len(),
        KeyLocator::KeyName(n) => 1 + name_len(n.components()),
    };
    name_len(pkt.name().components()) + 4 + pkt.payload().len() + locator + 32 + 4 + pkt.signature().len()
}

/// Selector fields: key digest, exclude, answer-origin kind.
pub(crate) fn encode_selectors(i: &Interest) -> Vec<u8> {
    let mut out = Vec::new();
    match i.publisher_key_digest {
        Some(d) => {
            out.push(1);
            out.extend_from_slice(&d);
        }
        None => out.push(0),
    }
    match &i.exclude {
        None => out.push(EXCLUDE_NONE),
        Some(ExcludeFilter::ExplicitSet(set)) => {
            out.push(EXCLUDE_SET);
            put_u32(&mut out, set.len());
            for c in set {
                put_component(&mut out, c);
            }
        }
        Some(ExcludeFilter::Bloom(bits)) => {
            out.push(EXCLUDE_BLOOM);
            out.extend_from_slice(&bits[..]);
        }
    }
    out.push(match i.answer_origin_kind {
        AnswerOriginKind::Any => 0,
        AnswerOriginKind::ProducerOnly => 1,
    });
    out
}

/// Interest layout: name, nonce (u64), selectors, scope flag + byte, lifetime (u32 ms).
pub fn encode_interest(i: &Interest) -> Vec<u8> {
    let mut out = encode_name(&i.name);
    out.extend_from_slice(&i.nonce.to_be_bytes());
    out.extend_from_slice(&encode_selectors(i));
    match i.scope {
        Some(s) => out.extend_from_slice(&[1, s]),
        None => out.extend_from_slice(&[0, 0]),
    }
    out.extend_from_slice(&i.lifetime_ms.to_be_bytes());
    out
}

pub(crate) fn interest_len(i: &Interest) -> usize {
    let digest = if i.publisher_key_digest.is_some() { 33 } else { 1 };
    let exclude = match &i.exclude {
        None => 1,
        Some(ExcludeFilter::ExplicitSet(set)) => 5 + set.iter().map(|c| 2 + c.as_bytes().len()).sum::<usize>(),
        Some(ExcludeFilter::Bloom(_)) => 1 + 32,
    };
    name_len(i.name.components()) + 8 + digest + exclude + 1 + 2 + 4
}

pub fn encode_data(pkt: &DataPacket) -> Vec<u8> {
    pkt.canonical_serialize(true)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Packet {
    Interest(Interest),
    Data(DataPacket),
}

impl Packet {
    pub fn wire_len(&self) -> usize {
        1 + match self {
            Packet::Interest(i) => i.wire_len(),
            Packet::Data(d) => d.wire_len(),
        }
    }
}

pub fn encode_packet(p: &Packet) -> Vec<u8> {
    match p {
        Packet::Interest(i) => {
            let mut out = vec![PACKET_INTEREST];
            out.extend_from_slice(&encode_interest(i));
            out
        }
        Packet::Data(d) => {
            let mut out = vec![PACKET_DATA];
            out.extend_from_slice(&encode_data(d));
            out
        }
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn new(buf: &'a [u8]) -> Self {
        Self { buf, at: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8], WireError> {
        let out = self.buf.get(self.at..self.at + n).ok_or(WireError::Truncated {
            offset: self.at,
            needed: n,
        })?;
        self.at += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8, WireError> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize, WireError> {
        Ok(u32::from_be_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64, WireError> {
        Ok(u64::from_be_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn digest(&mut self) -> Result<Digest32, WireError> {
        Ok(self.take(32)?.try_into().unwrap())
    }

    fn component(&mut self) -> Result<Component, WireError> {
        let kind = match self.u8()? {
            TAG_GENERIC => ComponentKind::Generic,
            TAG_DIGEST => ComponentKind::Digest,
            tag => return Err(WireError::BadTag { what: "component", tag }),
        };
        let len = self.u8()? as usize;
        Ok(Component::from_wire(kind, self.take(len)?.to_vec())?)
    }

    fn name(&mut self) -> Result<Name, WireError> {
        let count = self.u32()?;
        let mut cs = Vec::with_capacity(count.min(64));
        for _ in 0..count {
            cs.push(self.component()?);
        }
        Ok(Name::from_components(cs)?)
    }

    fn finish(&self) -> Result<(), WireError> {
        match self.buf.len() - self.at {
            0 => Ok(()),
            n => Err(WireError::Trailing(n)),
        }
    }
}

pub fn decode_interest(buf: &[u8]) -> Result<Interest, WireError> {
    let mut r = Reader::new(buf);
    let interest = read_interest(&mut r)?;
    r.finish()?;
    Ok(interest)
}

fn read_interest(r: &mut Reader<'_>) -> Result<Interest, WireError> {
    let name = r.name()?;
    let nonce = r.u64()?;
    let publisher_key_digest = match r.u8()? {
        0 => None,
        1 => Some(r.digest()?),
        tag => {
            return Err(WireError::BadTag {
                what: "key digest flag",
                tag,
            })
        }
    };
    let exclude = match r.u8()? {
        EXCLUDE_NONE => None,
        EXCLUDE_SET => {
            let n = r.u32()?;
            let mut set = std::collections::BTreeSet::new();
            for _ in 0..n {
                set.insert(r.component()?);
            }
            Some(ExcludeFilter::ExplicitSet(set))
        }
        EXCLUDE_BLOOM => Some(ExcludeFilter::Bloom(Box::new(r.take(32)?.try_into().unwrap()))),
        tag => return Err(WireError::BadTag { what: "exclude", tag }),
    };
    let answer_origin_kind = match r.u8()? {
        0 => AnswerOriginKind::Any,
        1 => AnswerOriginKind::ProducerOnly,
        tag => {
            return Err(WireError::BadTag {
                what: "answer origin",
                tag,
            })
        }
    };
    let scope = match (r.u8()?, r.u8()?) {
        (0, _) => None,
        (1, s) => Some(s),
        (tag, _) => {
            return Err(WireError::BadTag {
                what: "scope flag",
                tag,
            })
        }
    };
    let lifetime_ms = r.u32()? as u32;
    Ok(Interest {
        name,
        nonce,
        publisher_key_digest,
        exclude,
        answer_origin_kind,
        scope,
        lifetime_ms,
    })
}

pub fn decode_data(buf: &[u8]) -> Result<DataPacket, WireError> {
    let mut r = Reader::new(buf);
    let pkt = read_data(&mut r)?;
    r.finish()?;
    Ok(pkt)
}

fn read_data(r: &mut Reader<'_>) -> Result<DataPacket, WireError> {
    let name = r.name()?;
    let len = r.u32()?;
    let payload = r.take(len)?.to_vec();
    let key_locator = match r.u8()? {
        TAG_EMBEDDED_KEY => {
            let len = r.u32()?;
            KeyLocator::EmbeddedKey(r.take(len)?.to_vec())
        }
        TAG_KEY_NAME => KeyLocator::KeyName(r.name()?),
        tag => {
            return Err(WireError::BadTag {
                what: "key locator",
                tag,
            })
        }
    };
    let publisher_key_digest = r.digest()?;
    let len = r.u32()?;
    let signature = r.take(len)?.to_vec();
    Ok(DataParts {
        name,
        payload,
        signature,
        key_locator,
        publisher_key_digest,
    }
    .build())
}

pub fn decode_packet(buf: &[u8]) -> Result<Packet, WireError> {
    let mut r = Reader::new(buf);
    let p = match r.u8()? {
        PACKET_INTEREST => Packet::Interest(read_interest(&mut r)?),
        PACKET_DATA => Packet::Data(read_data(&mut r)?),
        tag => {
            return Err(WireError::BadTag {
                what: "packet type",
                tag,
            })
        }
    };
    r.finish()?;
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::crypto::{KeyPair, SignatureScheme};
    use crate::ndn::name::tests::arb_name;
    use proptest::prelude::*;

    fn sample(payload: &[u8]) -> DataPacket {
        let k = KeyPair::from_seed(SignatureScheme::Rsa1024, 1).unwrap();
        DataParts::unsigned(
            Name::parse("/ndn/a/b").unwrap(),
            payload.to_vec(),
            KeyLocator::KeyName(Name::parse("/ndn/a/KEY").unwrap()),
            [0; 32],
        )
        .sign(&k)
        .unwrap()
    }

    #[test]
    fn serialization_is_deterministic_and_sensitive() {
        let p = sample(b"hello");
        assert_eq!(p.canonical_serialize(true), p.clone().canonical_serialize(true));
        assert_ne!(p.canonical_serialize(true), sample(b"hellp").canonical_serialize(true));
        assert_eq!(p.wire_len(), p.canonical_serialize(true).len());
    }

    #[test]
    fn digest_component_is_34_wire_bytes() {
        let name = Name::from_components(vec![Component::digest([3; 32])]).unwrap();
        assert_eq!(encode_name(&name).len(), 4 + 34);
    }

    #[test]
    fn hash_component_omitted_only_when_digest_typed() {
        let p = sample(b"x");
        assert_eq!(p.canonical_serialize(false), p.canonical_serialize(true));
        let mut parts = p.to_parts();
        parts.name = parts.name.child(Component::digest([1; 32])).unwrap();
        let q = parts.build();
        assert_eq!(
            q.canonical_serialize(true).len(),
            q.canonical_serialize(false).len() + 34
        );
    }

    #[test]
    fn decode_rejects_garbage() {
        assert!(matches!(decode_packet(&[0x09]), Err(WireError::BadTag { .. })));
        assert!(matches!(decode_data(&[0, 0, 0, 1]), Err(WireError::Truncated { .. })));
        let mut bytes = encode_data(&sample(b"x"));
        bytes.push(0);
        assert!(matches!(decode_data(&bytes), Err(WireError::Trailing(1))));
    }

    fn arb_interest() -> impl Strategy<Value = Interest> {
        (
            arb_name(),
            any::<u64>(),
            proptest::option::of(any::<[u8; 32]>()),
            0u8..3,
            any::<bool>(),
            proptest::option::of(any::<u8>()),
            any::<u32>(),
        )
            .prop_map(|(name, nonce, kd, ex, po, scope, lifetime_ms)| Interest {
                name,
                nonce,
                publisher_key_digest: kd,
                exclude: match ex {
                    0 => None,
                    1 => Some(ExcludeFilter::explicit([Component::try_from("a").unwrap()])),
                    _ => Some(ExcludeFilter::all_ones()),
                },
                answer_origin_kind: if po {
                    AnswerOriginKind::ProducerOnly
                } else {
                    AnswerOriginKind::Any
                },
                scope,
                lifetime_ms,
            })
    }

    proptest! {
        #[test]
        fn interest_round_trip(i in arb_interest()) {
            let bytes = encode_packet(&Packet::Interest(i.clone()));
            prop_assert_eq!(bytes.len(), Packet::Interest(i.clone()).wire_len());
            prop_assert_eq!(decode_packet(&bytes).unwrap(), Packet::Interest(i));
        }

        #[test]
        fn data_round_trip(name in arb_name(), payload in proptest::collection::vec(any::<u8>(), 0..64),
                           sig in proptest::collection::vec(any::<u8>(), 0..130), embedded in any::<bool>()) {
            let locator = if embedded { KeyLocator::EmbeddedKey(vec![1, 2, 3]) } else { KeyLocator::KeyName(name.clone()) };
            let p = DataParts { name, payload, signature: sig, key_locator: locator, publisher_key_digest: [4; 32] }.build();
            let bytes = encode_packet(&Packet::Data(p.clone()));
            prop_assert_eq!(bytes.len(), Packet::Data(p.clone()).wire_len());
            prop_assert_eq!(decode_packet(&bytes).unwrap(), Packet::Data(p));
        }
    }
}
