//! Static content: fragment collections with forward hash links, plain
//! item sets, and the lookup structure producers serve from.

use std::collections::BTreeMap;

use crate::error::CatalogError;
use crate::ndn::crypto::sha256;
use crate::ndn::{DataPacket, DataParts, Digest32, Interest, KeyLocator, KeyPair, Name};

/// Deterministic filler bytes for `name`.
pub fn filler(name: &Name, len: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(len + 32);
    let mut block = sha256(name.to_string().as_bytes());
    while out.len() < len {
        out.extend_from_slice(&block);
        block = sha256(&block);
    }
    out.truncate(len);
    out
}

/// Payload layout: one count byte, that many 32-byte hashes, then filler.
pub fn link_payload(links: &[Digest32], name: &Name, payload_bytes: usize) -> Vec<u8> {
    assert!(links.len() <= u8::MAX as usize, "too many links in one fragment");
    let mut p = Vec::with_capacity(1 + 32 * links.len() + payload_bytes);
    p.push(links.len() as u8);
    for h in links {
        p.extend_from_slice(h);
    }
    let used = p.len();
    p.extend(filler(name, payload_bytes.saturating_sub(used)));
    p
}

/// The forward links embedded in a fragment payload. Malformed payloads
/// yield whatever complete hashes are present.
pub fn link_hashes(payload: &[u8]) -> Vec<Digest32> {
    let Some((&count, rest)) = payload.split_first() else {
        return Vec::new();
    };
    rest.chunks_exact(32)
        .take(count as usize)
        .map(|c| c.try_into().expect("32-byte chunk"))
        .collect()
}

fn embedded(key: &KeyPair) -> KeyLocator {
    KeyLocator::EmbeddedKey(key.public_key().to_vec())
}

/// Signs a set of packets whose payloads embed the content hashes of the
/// packets they link to. `links[i]` lists the indices packet `i` refers to.
/// Linked packets must be built first, so the link graph has to be acyclic.
pub fn build_linked(
    names: &[Name],
    links: &[Vec<usize>],
    key: &KeyPair,
    payload_bytes: usize,
) -> Result<Vec<DataPacket>, CatalogError> {
    let n = names.len();
    if n == 0 {
        return Err(CatalogError::EmptyCollection);
    }
    assert_eq!(links.len(), n, "one link list per name");
    for l in links.iter().flatten() {
        if *l >= n {
            return Err(CatalogError::LinkOutOfRange(*l, n));
        }
    }
    // Depth-first post-order; a grey node met again closes a cycle.
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        White,
        Grey,
        Black,
    }
    let mut mark = vec![Mark::White; n];
    let mut order = Vec::with_capacity(n);
    for root in 0..n {
        if mark[root] != Mark::White {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark[root] = Mark::Grey;
        while let Some(&mut (v, ref mut next)) = stack.last_mut() {
            if let Some(&w) = links[v].get(*next) {
                *next += 1;
                match mark[w] {
                    Mark::Grey => return Err(CatalogError::CyclicLinks(w)),
                    Mark::White => {
                        mark[w] = Mark::Grey;
                        stack.push((w, 0));
                    }
                    Mark::Black => {}
                }
            } else {
                mark[v] = Mark::Black;
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut built: Vec<Option<DataPacket>> = vec![None; n];
    for v in order {
        let hashes: Vec<Digest32> = links[v]
            .iter()
            .map(|&w| built[w].as_ref().expect("post-order").content_hash())
            .collect();
        let payload = link_payload(&hashes, &names[v], payload_bytes);
        let pkt = DataParts::unsigned(names[v].clone(), payload, embedded(key), key.digest()).sign(key)?;
        built[v] = Some(pkt);
    }
    Ok(built.into_iter().map(|p| p.expect("every node built")).collect())
}

/// Fragment `i` (1-based) of the collection under `prefix`.
pub fn fragment_name(prefix: &Name, i: usize) -> Name {
    prefix.child_str(&i.to_string()).expect("numeric component")
}

/// CO_1..CO_m where CO_i carries the hashes of CO_{i+1}..CO_{i+u}.
pub fn build_collection(
    prefix: &Name,
    m: usize,
    u: usize,
    key: &KeyPair,
    payload_bytes: usize,
) -> Result<Vec<DataPacket>, CatalogError> {
    let names: Vec<Name> = (1..=m).map(|i| fragment_name(prefix, i)).collect();
    let links: Vec<Vec<usize>> = (0..m).map(|i| (i + 1..(i + 1 + u).min(m)).collect()).collect();
    build_linked(&names, &links, key, payload_bytes)
}

/// Item `k` (0-based) of a plain item set.
pub fn item_name(prefix: &Name, k: usize) -> Name {
    prefix.child_str(&k.to_string()).expect("numeric component")
}

pub fn build_items(
    prefix: &Name,
    count: usize,
    key: &KeyPair,
    payload_bytes: usize,
) -> Result<Vec<DataPacket>, CatalogError> {
    (0..count)
        .map(|k| {
            let name = item_name(prefix, k);
            let payload = filler(&name, payload_bytes);
            Ok(DataParts::unsigned(name, payload, embedded(key), key.digest()).sign(key)?)
        })
        .collect()
}

/// The packet publishing `key` under `name`, for consumers resolving
/// named key locators.
pub fn key_packet(name: Name, key: &KeyPair) -> Result<DataPacket, CatalogError> {
    Ok(DataParts::unsigned(name, key.public_key().to_vec(), embedded(key), key.digest()).sign(key)?)
}

/// Static packets indexed by name.
#[derive(Debug, Clone, Default)]
pub struct Catalog {
    items: BTreeMap<Name, DataPacket>,
}

impl Catalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, pkt: DataPacket) {
        self.items.insert(pkt.name().clone(), pkt);
    }

    pub fn extend(&mut self, pkts: impl IntoIterator<Item = DataPacket>) {
        for p in pkts {
            self.insert(p);
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn get(&self, name: &Name) -> Option<&DataPacket> {
        self.items.get(name)
    }

    /// Exact name first, then the first item under the interest name that
    /// satisfies it.
    pub fn lookup(&self, interest: &Interest) -> Option<&DataPacket> {
        let base = interest.name.without_digest();
        if let Some(p) = self.items.get(&base) {
            if crate::ndn::interest_matches(p, interest) {
                return Some(p);
            }
        }
        self.items
            .range(base.clone()..)
            .take_while(|(n, _)| base.is_prefix_of(n))
            .map(|(_, p)| p)
            .find(|p| crate::ndn::interest_matches(p, interest))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::{ExcludeFilter, SignatureScheme};

    fn key() -> KeyPair {
        KeyPair::from_seed(SignatureScheme::Ed25519, 3).unwrap()
    }

    fn n(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    #[test]
    fn collection_links_match_recomputed_hashes() {
        let col = build_collection(&n("/p/col"), 10, 4, &key(), 200).unwrap();
        for (i, co) in col.iter().enumerate() {
            let want: Vec<Digest32> = col[i + 1..(i + 5).min(10)].iter().map(|p| p.content_hash()).collect();
            assert_eq!(link_hashes(co.payload()), want);
            assert_eq!(co.verify_embedded(), Some(true));
        }
        assert_eq!(col[0].name(), &n("/p/col/1"));
    }

    #[test]
    fn cyclic_links_rejected() {
        let names = vec![n("/a"), n("/b"), n("/c")];
        let links = vec![vec![1], vec![2], vec![0]];
        assert!(matches!(
            build_linked(&names, &links, &key(), 10),
            Err(CatalogError::CyclicLinks(_))
        ));
        assert!(matches!(
            build_linked(&names, &[vec![5], vec![], vec![]], &key(), 10),
            Err(CatalogError::LinkOutOfRange(5, 3))
        ));
        assert!(matches!(
            build_linked(&[], &[], &key(), 10),
            Err(CatalogError::EmptyCollection)
        ));
    }

    #[test]
    fn dag_links_accepted() {
        let names = vec![n("/a"), n("/b"), n("/c")];
        let links = vec![vec![1, 2], vec![2], vec![]];
        let p = build_linked(&names, &links, &key(), 10).unwrap();
        assert_eq!(
            link_hashes(p[0].payload()),
            vec![p[1].content_hash(), p[2].content_hash()]
        );
    }

    #[test]
    fn lookup_exact_then_prefix() {
        let mut c = Catalog::new();
        c.extend(build_items(&n("/p/s"), 3, &key(), 50).unwrap());
        let hit = c.lookup(&Interest::new(n("/p/s/1"), 1)).unwrap();
        assert_eq!(hit.name(), &n("/p/s/1"));
        let any = c.lookup(&Interest::new(n("/p/s"), 1)).unwrap();
        assert_eq!(any.name(), &n("/p/s/0"));
        let mut ex = ExcludeFilter::explicit([]);
        ex.insert(any.component_after(2));
        let next = c.lookup(&Interest::new(n("/p/s"), 1).with_exclude(ex)).unwrap();
        assert_eq!(next.name(), &n("/p/s/1"));
        assert!(c.lookup(&Interest::new(n("/p/s/nonce123"), 1)).is_none());
        assert!(c
            .lookup(&Interest::new(n("/p/s/1"), 1).with_key_digest([7; 32]))
            .is_none());
    }

    #[test]
    fn rebuild_is_deterministic() {
        let a = build_items(&n("/p/s"), 2, &key(), 50).unwrap();
        let b = build_items(&n("/p/s"), 2, &key(), 50).unwrap();
        assert_eq!(a, b);
    }
}
