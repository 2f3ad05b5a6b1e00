use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::time::SimDuration;
use crate::error::TopologyError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

/// Interface index local to one node, in the order the node's links were declared.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FaceId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct LinkId(pub u32);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}

impl fmt::Display for FaceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "f{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Role {
    Consumer,
    Producer,
    Router,
    Zombie,
    CompromisedRouter,
}

impl Role {
    pub fn as_str(self) -> &'static str {
        match self {
            Role::Consumer => "consumer",
            Role::Producer => "producer",
            Role::Router => "router",
            Role::Zombie => "zombie",
            Role::CompromisedRouter => "compromised-router",
        }
    }

    pub fn forwards(self) -> bool {
        matches!(self, Role::Router | Role::CompromisedRouter)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    P2p,
    Broadcast,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LinkSpec {
    pub endpoints: Vec<NodeId>,
    pub bandwidth_bps: u64,
    pub delay: SimDuration,
    pub kind: LinkKind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeSpec {
    pub label: String,
    pub role: Role,
}

/// What a node knows about one of its interfaces.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceInfo {
    pub link: LinkId,
    pub kind: LinkKind,
    pub bandwidth_bps: u64,
    pub delay: SimDuration,
    /// The other endpoints on this link.
    pub peers: Vec<NodeId>,
}

#[derive(Debug, Clone, Default)]
pub struct Topology {
    nodes: Vec<NodeSpec>,
    links: Vec<LinkSpec>,
    faces: Vec<Vec<LinkId>>,
}

impl Topology {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_node(&mut self, label: impl Into<String>, role: Role) -> NodeId {
        self.nodes.push(NodeSpec {
            label: label.into(),
            role,
        });
        self.faces.push(Vec::new());
        NodeId(self.nodes.len() as u32 - 1)
    }

    /// Adds a link; each endpoint gains a face for it.
    pub fn add_link(&mut self, spec: LinkSpec) -> LinkId {
        let id = LinkId(self.links.len() as u32);
        for &n in &spec.endpoints {
            if let Some(f) = self.faces.get_mut(n.0 as usize) {
                f.push(id);
            }
        }
        self.links.push(spec);
        id
    }

    pub fn p2p(&mut self, a: NodeId, b: NodeId, bandwidth_bps: u64, delay: SimDuration) -> LinkId {
        self.add_link(LinkSpec {
            endpoints: vec![a, b],
            bandwidth_bps,
            delay,
            kind: LinkKind::P2p,
        })
    }

    pub fn validate(&self) -> Result<(), TopologyError> {
        let mut labels = HashSet::new();
        for n in &self.nodes {
            if !labels.insert(n.label.as_str()) {
                return Err(TopologyError::DuplicateNode(n.label.clone()));
            }
        }
        for (i, l) in self.links.iter().enumerate() {
            let distinct: HashSet<_> = l.endpoints.iter().collect();
            if distinct.len() != l.endpoints.len() {
                return Err(TopologyError::RepeatedEndpoint(i));
            }
            match l.kind {
                LinkKind::P2p if l.endpoints.len() != 2 => {
                    return Err(TopologyError::EndpointCount {
                        link: i,
                        kind: "p2p",
                        got: l.endpoints.len(),
                    })
                }
                LinkKind::Broadcast if l.endpoints.len() < 2 => {
                    return Err(TopologyError::EndpointCount {
                        link: i,
                        kind: "broadcast",
                        got: l.endpoints.len(),
                    })
                }
                _ => {}
            }
            if l.bandwidth_bps == 0 {
                return Err(TopologyError::ZeroBandwidth(i));
            }
            for e in &l.endpoints {
                if e.0 as usize >= self.nodes.len() {
                    return Err(TopologyError::UnknownEndpoint { link: i, node: e.0 });
                }
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[NodeSpec] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &NodeSpec {
        &self.nodes[id.0 as usize]
    }

    pub fn links(&self) -> &[LinkSpec] {
        &self.links
    }

    pub fn link(&self, id: LinkId) -> &LinkSpec {
        &self.links[id.0 as usize]
    }

    pub fn find(&self, label: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.label == label)
            .map(|i| NodeId(i as u32))
    }

    pub fn faces_of(&self, node: NodeId) -> &[LinkId] {
        &self.faces[node.0 as usize]
    }

    pub fn face_link(&self, node: NodeId, face: FaceId) -> Option<LinkId> {
        self.faces[node.0 as usize].get(face.0 as usize).copied()
    }

    pub fn face_on(&self, node: NodeId, link: LinkId) -> Option<FaceId> {
        self.faces[node.0 as usize]
            .iter()
            .position(|&l| l == link)
            .map(|i| FaceId(i as u32))
    }

    pub fn face_info(&self, node: NodeId) -> Vec<FaceInfo> {
        self.faces_of(node)
            .iter()
            .map(|&lid| {
                let l = self.link(lid);
                FaceInfo {
                    link: lid,
                    kind: l.kind,
                    bandwidth_bps: l.bandwidth_bps,
                    delay: l.delay,
                    peers: l.endpoints.iter().copied().filter(|&e| e != node).collect(),
                }
            })
            .collect()
    }

    /// Faces of `node` that lead to `neighbor` directly.
    pub fn faces_towards(&self, node: NodeId, neighbor: NodeId) -> Vec<FaceId> {
        self.faces_of(node)
            .iter()
            .enumerate()
            .filter(|(_, &l)| self.link(l).endpoints.contains(&neighbor))
            .map(|(i, _)| FaceId(i as u32))
            .collect()
    }

    pub fn neighbors(&self, node: NodeId) -> Vec<NodeId> {
        let mut out: Vec<NodeId> = self
            .faces_of(node)
            .iter()
            .flat_map(|&l| self.link(l).endpoints.iter().copied())
            .filter(|&e| e != node)
            .collect();
        out.sort();
        out.dedup();
        out
    }
}
