//! Turns a validated scenario into a simulator instance.

use std::collections::{BTreeMap, VecDeque};

use crate::attacks::{build_keylocator_abuse_content, AttackKind};
use crate::defense::control::link_key;
use crate::defense::poisoning::{Selector, VerificationMode};
use crate::error::CatalogError;
use crate::ndn::crypto::sha256;
use crate::ndn::{Digest32, KeyPair, Name};
use crate::nodes::compromised::{make_poison, Compromise};
use crate::nodes::{Consumer, Producer, SimNode, Zombie};
use crate::router::Router;
use crate::simnet::{FaceId, NodeId, Provenance, Role, SimTime, Simulator, Topology};

use super::scenario::Scenario;

#[derive(Debug, thiserror::Error)]
pub enum BuildError {
    #[error("catalog for {node:?}: {source}")]
    Catalog { node: String, source: CatalogError },
    #[error("key generation: {0}")]
    Crypto(#[from] crate::error::CryptoError),
    #[error("preload of {name} at {node:?}: producer has no such content")]
    MissingContent { node: String, name: Name },
}

/// Key material derived from the scenario's key seed.
pub struct Keys {
    pub producers: BTreeMap<NodeId, KeyPair>,
    pub adversary: KeyPair,
}

fn derive_seed(base: u64, label: &str) -> u64 {
    let mut input = base.to_be_bytes().to_vec();
    input.extend_from_slice(label.as_bytes());
    let h = sha256(&input);
    u64::from_be_bytes(h[..8].try_into().expect("8 bytes"))
}

pub fn keys(scn: &Scenario) -> Result<Keys, BuildError> {
    let scheme = scn.doc.key_scheme;
    let mut producers = BTreeMap::new();
    for (i, n) in scn.doc.nodes.iter().enumerate() {
        if n.role == Role::Producer {
            producers.insert(
                NodeId(i as u32),
                KeyPair::from_seed(scheme, derive_seed(scn.doc.key_seed, &n.id))?,
            );
        }
    }
    let adversary = KeyPair::from_seed(scheme, derive_seed(scn.doc.key_seed, "\u{0}adversary"))?;
    Ok(Keys { producers, adversary })
}

/// The producer whose announced prefix most specifically covers `name`.
fn owner(scn: &Scenario, name: &Name) -> Option<NodeId> {
    scn.doc
        .nodes
        .iter()
        .enumerate()
        .filter_map(|(i, n)| {
            let best = n
                .producer
                .as_ref()?
                .prefixes
                .iter()
                .filter(|p| p.is_prefix_of(name))
                .map(|p| p.len())
                .max()?;
            Some((best, NodeId(i as u32)))
        })
        .max_by_key(|&(len, id)| (len, std::cmp::Reverse(id)))
        .map(|(_, id)| id)
}

/// Shortest-path next hops from every router towards the producers of
/// each announced prefix. Only forwarding nodes relay.
pub fn auto_routes(scn: &Scenario) -> Vec<(NodeId, Name, FaceId)> {
    let topo = &scn.topology;
    let mut prefixes: BTreeMap<Name, Vec<NodeId>> = BTreeMap::new();
    for (i, n) in scn.doc.nodes.iter().enumerate() {
        if let Some(p) = &n.producer {
            for pre in &p.prefixes {
                prefixes.entry(pre.clone()).or_default().push(NodeId(i as u32));
            }
        }
    }
    let mut out = Vec::new();
    for (prefix, sources) in prefixes {
        let dist = hop_distances(topo, &sources);
        for (i, spec) in topo.nodes().iter().enumerate() {
            let id = NodeId(i as u32);
            if !spec.role.forwards() {
                continue;
            }
            let Some(d) = dist[i] else { continue };
            let mut faces: Vec<FaceId> = topo
                .neighbors(id)
                .into_iter()
                .filter(|nb| d > 0 && dist[nb.0 as usize] == Some(d - 1))
                .filter(|nb| topo.node(*nb).role.forwards() || sources.contains(nb))
                .flat_map(|nb| topo.faces_towards(id, nb))
                .collect();
            faces.sort();
            faces.dedup();
            for f in faces {
                out.push((id, prefix.clone(), f));
            }
        }
    }
    out
}

/// Hop counts to the nearest source, relaying only through routers.
fn hop_distances(topo: &Topology, sources: &[NodeId]) -> Vec<Option<usize>> {
    let mut dist = vec![None; topo.node_count()];
    let mut q = VecDeque::new();
    for s in sources {
        dist[s.0 as usize] = Some(0);
        q.push_back(*s);
    }
    while let Some(v) = q.pop_front() {
        let d = dist[v.0 as usize].expect("queued nodes have distances");
        if d > 0 && !topo.node(v).role.forwards() {
            continue;
        }
        for nb in topo.neighbors(v) {
            if dist[nb.0 as usize].is_none() {
                dist[nb.0 as usize] = Some(d + 1);
                q.push_back(nb);
            }
        }
    }
    dist
}

fn selector(scn: &Scenario, id: NodeId) -> Selector {
    let Some(cfg) = scn.router_configs.get(&id) else {
        return Selector::Off;
    };
    let vc = &cfg.poisoning.verification;
    let label = &scn.doc.nodes[id.0 as usize].id;
    let pos = vc.group.iter().position(|g| g == label);
    match (vc.mode, pos) {
        (VerificationMode::Off, _) => Selector::Off,
        (VerificationMode::Independent, _) => Selector::Independent { v: vc.v },
        (VerificationMode::DisjointPlain, Some(i)) => Selector::DisjointPlain {
            v: vc.v,
            n: vc.group.len(),
            i,
        },
        (VerificationMode::DisjointHmac, Some(i)) => Selector::DisjointHmac {
            v: vc.v,
            n: vc.group.len(),
            i,
            key: hex::decode(vc.key.as_deref().unwrap_or_default()).unwrap_or_default(),
        },
        // Routers outside the group do not sample.
        (_, None) => Selector::Off,
    }
}

fn link_keys(scn: &Scenario, id: NodeId) -> Vec<Digest32> {
    scn.topology
        .faces_of(id)
        .iter()
        .map(|l| link_key(scn.doc.key_seed, l.0))
        .collect()
}

pub fn build(scn: &Scenario, seed: u64) -> Result<Simulator<SimNode>, BuildError> {
    let keys = keys(scn)?;
    let topo = &scn.topology;
    let mut nodes = Vec::with_capacity(topo.node_count());
    for (i, n) in scn.doc.nodes.iter().enumerate() {
        let id = NodeId(i as u32);
        let node = match n.role {
            Role::Router | Role::CompromisedRouter => {
                let cfg = scn.router_configs[&id].clone();
                let mut r = Router::new(cfg, topo.face_info(id), link_keys(scn, id), selector(scn, id));
                for a in scn
                    .doc
                    .attacks
                    .iter()
                    .filter(|a| a.kind == AttackKind::PoisonInject && a.zombies.contains(&n.id))
                {
                    let honest = owner(scn, &a.target)
                        .and_then(|o| keys.producers.get(&o).cloned())
                        .unwrap_or_else(|| keys.adversary.clone());
                    r = r.with_compromise(Compromise::new(
                        a.mode.expect("validated"),
                        a.target.clone(),
                        SimTime::from_ms(a.start_ms),
                        SimTime::from_ms(a.stop_ms),
                        honest,
                        keys.adversary.clone(),
                    ));
                }
                SimNode::Router(Box::new(r))
            }
            Role::Producer => {
                let cfg = n.producer.clone().expect("validated");
                let mut p = Producer::new(cfg, keys.producers[&id].clone()).map_err(|source| BuildError::Catalog {
                    node: n.id.clone(),
                    source,
                })?;
                for a in scn
                    .doc
                    .attacks
                    .iter()
                    .filter(|a| a.kind == AttackKind::KeylocatorAbuse && a.zombies.contains(&n.id))
                {
                    let content = build_keylocator_abuse_content(
                        &a.target,
                        a.content_prefix.as_ref().expect("validated"),
                        a.pool.expect("validated"),
                        &keys.adversary,
                    )
                    .map_err(|source| BuildError::Catalog {
                        node: n.id.clone(),
                        source,
                    })?;
                    p.catalog_mut().extend(content);
                }
                SimNode::Producer(Box::new(p))
            }
            Role::Consumer => {
                let cfg = n.consumer.clone().expect("validated");
                let trusted = match (&cfg.trusted_key_digest, &cfg.trusted_producer) {
                    (Some(h), _) => hex::decode(h).ok().and_then(|b| b.try_into().ok()),
                    (None, Some(p)) => scn.id(p).and_then(|p| keys.producers.get(&p)).map(|k| k.digest()),
                    (None, None) => None,
                };
                SimNode::Consumer(Box::new(Consumer::new(cfg, trusted, link_keys(scn, id))))
            }
            Role::Zombie => {
                let mut z = Zombie::new();
                for a in scn.doc.attacks.iter().filter(|a| a.kind.uses_zombies()) {
                    if let Some(rank) = a.zombies.iter().position(|x| *x == n.id) {
                        z.add_task(a.clone(), rank, a.zombies.len());
                    }
                }
                SimNode::Zombie(Box::new(z))
            }
        };
        nodes.push(node);
    }
    let mut routes: Vec<(NodeId, Name, FaceId)> = Vec::new();
    if scn.doc.auto_routes {
        routes.extend(auto_routes(scn));
    }
    for r in &scn.doc.routes {
        let (n, via) = (scn.id(&r.node).expect("validated"), scn.id(&r.via).expect("validated"));
        for f in topo.faces_towards(n, via) {
            routes.push((n, r.prefix.clone(), f));
        }
    }
    for (n, prefix, face) in routes {
        if let Some(r) = nodes[n.0 as usize].as_router_mut() {
            r.add_route(prefix, face);
        }
    }
    for p in &scn.doc.preload {
        let pid = scn.id(&p.producer).expect("validated");
        let honest = &keys.producers[&pid];
        let (pkt, prov) = match p.poison {
            Some(mode) => {
                let prov = match mode {
                    crate::nodes::compromised::PoisonMode::Corrupted => Provenance::Corrupted,
                    crate::nodes::compromised::PoisonMode::Fake => Provenance::Fake,
                };
                (make_poison(mode, &p.name, honest, &keys.adversary), prov)
            }
            None => {
                let pkt = nodes[pid.0 as usize]
                    .as_producer()
                    .and_then(|prod| prod.catalog().get(&p.name).cloned())
                    .ok_or_else(|| BuildError::MissingContent {
                        node: p.producer.clone(),
                        name: p.name.clone(),
                    })?;
                (pkt, Provenance::Honest)
            }
        };
        for label in &p.nodes {
            let id = scn.id(label).expect("validated");
            if let Some(r) = nodes[id.0 as usize].as_router_mut() {
                r.preload(pkt.clone(), prov, SimTime::ZERO);
            }
        }
    }
    Ok(Simulator::new(topo.clone(), nodes, seed))
}
