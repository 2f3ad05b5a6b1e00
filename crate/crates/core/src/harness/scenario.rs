//! Scenario documents: strict JSON schema, whole-document validation and
//! named arms expressed as merge patches.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::attacks::{AttackKind, AttackSpec};
use crate::defense::poisoning::VerificationMode;
use crate::ndn::{Name, SignatureScheme};
use crate::nodes::compromised::PoisonMode;
use crate::nodes::{ConsumerConfig, ProducerConfig};
use crate::router::RouterConfig;
use crate::simnet::{LinkKind, LinkSpec, NodeId, Role, SimDuration, Topology};

fn default_seed() -> u64 {
    1
}

fn default_tick() -> u64 {
    100
}

fn default_bandwidth() -> u64 {
    12_000_000
}

fn default_delay() -> f64 {
    1.0
}

fn default_kind() -> LinkKind {
    LinkKind::P2p
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default = "default_seed")]
    pub seed: u64,
    pub duration_ms: u64,
    #[serde(default = "default_tick")]
    pub tick_ms: u64,
    #[serde(default)]
    pub key_scheme: SignatureScheme,
    /// Seeds producer, adversary and link keys. Independent of the run seed
    /// so replicates share keys.
    #[serde(default)]
    pub key_seed: u64,
    pub nodes: Vec<NodeDoc>,
    pub links: Vec<LinkDoc>,
    #[serde(default)]
    pub routes: Vec<RouteDoc>,
    /// Install shortest-path routes to every producer prefix.
    #[serde(default = "yes")]
    pub auto_routes: bool,
    /// Router configuration shared by every router, patched per node.
    #[serde(default)]
    pub router_defaults: Option<Value>,
    /// Per-router patches keyed by node id, applied after the node's own
    /// `router` section. A map, so arms can patch single routers.
    #[serde(default)]
    pub router_overrides: BTreeMap<String, Value>,
    #[serde(default)]
    pub attacks: Vec<AttackSpec>,
    #[serde(default)]
    pub preload: Vec<PreloadDoc>,
    #[serde(default)]
    pub arms: Vec<ArmDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeDoc {
    pub id: String,
    pub role: Role,
    /// Merge patch over `router_defaults`.
    #[serde(default)]
    pub router: Option<Value>,
    #[serde(default)]
    pub consumer: Option<ConsumerConfig>,
    #[serde(default)]
    pub producer: Option<ProducerConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkDoc {
    pub endpoints: Vec<String>,
    #[serde(default = "default_kind")]
    pub kind: LinkKind,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bps: u64,
    #[serde(default = "default_delay")]
    pub delay_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RouteDoc {
    pub node: String,
    pub prefix: Name,
    pub via: String,
}

/// Content placed in router caches before the run starts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreloadDoc {
    pub nodes: Vec<String>,
    pub name: Name,
    /// Producer whose key the content is (or claims to be) signed with.
    pub producer: String,
    #[serde(default)]
    pub poison: Option<PoisonMode>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArmDoc {
    pub name: String,
    /// Merge patch applied to the whole document.
    pub patch: Value,
}

/// RFC 7396 merge patch.
pub fn merge_patch(target: &mut Value, patch: &Value) {
    match patch {
        Value::Object(p) => {
            if !target.is_object() {
                *target = Value::Object(Default::default());
            }
            let t = target.as_object_mut().expect("object");
            for (k, v) in p {
                if v.is_null() {
                    t.remove(k);
                } else {
                    merge_patch(t.entry(k.clone()).or_insert(Value::Null), v);
                }
            }
        }
        other => *target = other.clone(),
    }
}

/// A validated scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    raw: Value,
    pub topology: Topology,
    ids: HashMap<String, NodeId>,
    /// Resolved configuration for every forwarding node.
    pub router_configs: BTreeMap<NodeId, RouterConfig>,
}

impl Scenario {
    pub fn id(&self, label: &str) -> Option<NodeId> {
        self.ids.get(label).copied()
    }

    pub fn raw(&self) -> &Value {
        &self.raw
    }

    /// The base scenario followed by one scenario per arm, each named.
    /// Without arms, the single entry is named "base".
    pub fn arms(&self) -> Result<Vec<(String, Scenario)>, Vec<String>> {
        if self.doc.arms.is_empty() {
            return Ok(vec![("base".to_string(), self.clone())]);
        }
        self.doc
            .arms
            .iter()
            .map(|a| {
                let mut v = self.raw.clone();
                merge_patch(&mut v, &a.patch);
                if let Some(o) = v.as_object_mut() {
                    o.remove("arms");
                }
                let s = load_value(v).map_err(|errs| {
                    errs.into_iter()
                        .map(|e| format!("arm {:?}: {e}", a.name))
                        .collect::<Vec<_>>()
                })?;
                Ok((a.name.clone(), s))
            })
            .collect()
    }
}

pub fn load_scenario(text: &str) -> Result<Scenario, Vec<String>> {
    let v: Value = serde_json::from_str(text).map_err(|e| vec![format!("invalid JSON: {e}")])?;
    load_value(v)
}

pub fn load_value(raw: Value) -> Result<Scenario, Vec<String>> {
    let doc: ScenarioDoc = serde_json::from_value(raw.clone()).map_err(|e| vec![format!("schema: {e}")])?;
    let mut errs = Vec::new();
    let mut ids = HashMap::new();
    let mut topology = Topology::new();
    if doc.duration_ms == 0 {
        errs.push("duration_ms must be positive".to_string());
    }
    if doc.tick_ms == 0 {
        errs.push("tick_ms must be positive".to_string());
    }
    if doc.nodes.is_empty() {
        errs.push("scenario has no nodes".to_string());
    }
    for n in &doc.nodes {
        if ids.contains_key(&n.id) {
            errs.push(format!("duplicate node id {:?}", n.id));
            continue;
        }
        ids.insert(n.id.clone(), topology.add_node(n.id.clone(), n.role));
        let want = |field: &str, present: bool, needed: bool, errs: &mut Vec<String>| {
            if present && !needed {
                errs.push(format!(
                    "node {:?}: role {} takes no {field} section",
                    n.id,
                    n.role.as_str()
                ));
            }
            if !present && needed && field != "router" {
                errs.push(format!(
                    "node {:?}: role {} needs a {field} section",
                    n.id,
                    n.role.as_str()
                ));
            }
        };
        want("router", n.router.is_some(), n.role.forwards(), &mut errs);
        want("consumer", n.consumer.is_some(), n.role == Role::Consumer, &mut errs);
        want("producer", n.producer.is_some(), n.role == Role::Producer, &mut errs);
    }
    let node = |label: &str, ctx: &str, errs: &mut Vec<String>| -> Option<NodeId> {
        let id = ids.get(label).copied();
        if id.is_none() {
            errs.push(format!("{ctx}: unknown node {label:?}"));
        }
        id
    };
    let role_of = |id: NodeId| doc.nodes[id.0 as usize].role;

    for (i, l) in doc.links.iter().enumerate() {
        let ends: Vec<NodeId> = l
            .endpoints
            .iter()
            .filter_map(|e| node(e, &format!("link {i}"), &mut errs))
            .collect();
        if !(l.delay_ms >= 0.0 && l.delay_ms.is_finite()) {
            errs.push(format!("link {i}: delay_ms must be a non-negative number"));
        }
        if ends.len() == l.endpoints.len() {
            topology.add_link(LinkSpec {
                endpoints: ends,
                bandwidth_bps: l.bandwidth_bps,
                delay: SimDuration::from_secs_f64(l.delay_ms.max(0.0) / 1000.0),
                kind: l.kind,
            });
        }
    }
    if let Err(e) = topology.validate() {
        errs.push(format!("topology: {e}"));
    }

    let mut router_configs = BTreeMap::new();
    let base = serde_json::to_value(RouterConfig::default()).expect("config serializes");
    let mut defaults = base.clone();
    if let Some(d) = &doc.router_defaults {
        merge_patch(&mut defaults, d);
    }
    for n in doc.nodes.iter().filter(|n| n.role.forwards()) {
        let mut v = defaults.clone();
        if let Some(p) = &n.router {
            merge_patch(&mut v, p);
        }
        if let Some(p) = doc.router_overrides.get(&n.id) {
            merge_patch(&mut v, p);
        }
        match serde_json::from_value::<RouterConfig>(v) {
            Ok(c) => {
                if let Some(&id) = ids.get(&n.id) {
                    router_configs.insert(id, c);
                }
            }
            Err(e) => errs.push(format!("node {:?}: router config: {e}", n.id)),
        }
    }
    for label in doc.router_overrides.keys() {
        if let Some(id) = node(label, "router_overrides", &mut errs) {
            if !role_of(id).forwards() {
                errs.push(format!("router_overrides: {label:?} is not a router"));
            }
        }
    }
    for (id, cfg) in &router_configs {
        let label = &doc.nodes[id.0 as usize].id;
        let vc = &cfg.poisoning.verification;
        let grp = vc.group.len();
        match vc.mode {
            VerificationMode::Off => {}
            VerificationMode::Independent => {
                if vc.v.is_nan() || vc.v < 1.0 {
                    errs.push(format!(
                        "node {label:?}: independent verification needs v >= 1, got {}",
                        vc.v
                    ));
                }
            }
            VerificationMode::DisjointPlain | VerificationMode::DisjointHmac => {
                if grp == 0 {
                    errs.push(format!("node {label:?}: disjoint verification needs a group"));
                } else if vc.v.is_nan() || vc.v < grp as f64 {
                    errs.push(format!(
                        "node {label:?}: disjoint verification needs v >= group size {grp}, got {}",
                        vc.v
                    ));
                }
                let mut seen = HashSet::new();
                for g in &vc.group {
                    if !seen.insert(g) {
                        errs.push(format!("node {label:?}: group lists {g:?} twice"));
                    }
                    match ids.get(g) {
                        None => errs.push(format!("node {label:?}: group member {g:?} does not exist")),
                        Some(&m) if !role_of(m).forwards() => {
                            errs.push(format!("node {label:?}: group member {g:?} is not a router"))
                        }
                        Some(&m) => {
                            if router_configs.get(&m).is_some_and(|o| o.poisoning.verification != *vc) {
                                errs.push(format!(
                                    "node {label:?}: group member {g:?} has a different verification config"
                                ));
                            }
                        }
                    }
                }
                if vc.mode == VerificationMode::DisjointHmac {
                    match vc.key.as_deref().map(hex::decode) {
                        None => errs.push(format!("node {label:?}: disjoint-hmac verification needs a group key")),
                        Some(Err(_)) => errs.push(format!("node {label:?}: group key is not valid hex")),
                        Some(Ok(k)) if k.is_empty() => errs.push(format!("node {label:?}: group key is empty")),
                        _ => {}
                    }
                }
            }
        }
        let nb = &cfg.poisoning.neighbor;
        if !(0.0..=1.0).contains(&nb.p) {
            errs.push(format!("node {label:?}: neighbor p must lie in [0, 1]"));
        }
    }

    for r in &doc.routes {
        let ctx = format!("route {} at {}", r.prefix, r.node);
        let (Some(n), Some(via)) = (node(&r.node, &ctx, &mut errs), node(&r.via, &ctx, &mut errs)) else {
            continue;
        };
        if !role_of(n).forwards() {
            errs.push(format!("{ctx}: {:?} is not a router", r.node));
        } else if errs.iter().all(|e| !e.starts_with("topology")) && topology.faces_towards(n, via).is_empty() {
            errs.push(format!("{ctx}: {:?} is not a neighbor", r.via));
        }
    }

    for (i, a) in doc.attacks.iter().enumerate() {
        let ctx = format!(
            "attack {i} ({})",
            serde_json::to_value(a.kind).expect("kind").as_str().unwrap_or("?")
        );
        for p in a.problems() {
            errs.push(format!("{ctx}: {p}"));
        }
        for z in &a.zombies {
            let Some(id) = node(z, &ctx, &mut errs) else { continue };
            let role = role_of(id);
            let ok = match a.kind {
                k if k.uses_zombies() => role == Role::Zombie,
                AttackKind::PoisonInject => role == Role::CompromisedRouter,
                AttackKind::KeylocatorAbuse => role == Role::Producer,
                _ => true,
            };
            if !ok {
                errs.push(format!(
                    "{ctx}: node {z:?} has role {}, which cannot run this attack",
                    role.as_str()
                ));
            }
        }
    }
    for n in &doc.nodes {
        if n.role == Role::CompromisedRouter
            && !doc
                .attacks
                .iter()
                .any(|a| a.kind == AttackKind::PoisonInject && a.zombies.contains(&n.id))
        {
            errs.push(format!(
                "node {:?}: compromised router without a poison-inject attack",
                n.id
            ));
        }
        if let Some(c) = &n.consumer {
            if let Some(p) = &c.trusted_producer {
                match ids.get(p) {
                    None => errs.push(format!("node {:?}: trusted producer {p:?} does not exist", n.id)),
                    Some(&id) if role_of(id) != Role::Producer => {
                        errs.push(format!("node {:?}: trusted producer {p:?} is not a producer", n.id))
                    }
                    _ => {}
                }
            }
            if let Some(h) = &c.trusted_key_digest {
                if hex::decode(h).map(|b| b.len() != 32).unwrap_or(true) {
                    errs.push(format!("node {:?}: trusted_key_digest must be 64 hex digits", n.id));
                }
            }
            if c.window == 0 {
                errs.push(format!("node {:?}: window must be positive", n.id));
            }
            if c.rate.is_some_and(|r| !(r > 0.0 && r.is_finite())) {
                errs.push(format!("node {:?}: rate must be positive", n.id));
            }
        }
        if let Some(p) = &n.producer {
            if p.prefixes.is_empty() {
                errs.push(format!("node {:?}: producer announces no prefixes", n.id));
            }
        }
    }
    for (i, p) in doc.preload.iter().enumerate() {
        let ctx = format!("preload {i}");
        if let Some(id) = node(&p.producer, &ctx, &mut errs) {
            if role_of(id) != Role::Producer {
                errs.push(format!("{ctx}: {:?} is not a producer", p.producer));
            }
        }
        for n in &p.nodes {
            if let Some(id) = node(n, &ctx, &mut errs) {
                if !role_of(id).forwards() {
                    errs.push(format!("{ctx}: {n:?} is not a router"));
                }
            }
        }
    }
    let mut arm_names = HashSet::new();
    for a in &doc.arms {
        if !arm_names.insert(a.name.as_str()) {
            errs.push(format!("duplicate arm {:?}", a.name));
        }
    }

    if !errs.is_empty() {
        return Err(errs);
    }
    let scn = Scenario {
        doc,
        raw,
        topology,
        ids,
        router_configs,
    };
    if !scn.doc.arms.is_empty() {
        scn.arms()?;
    }
    Ok(scn)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn minimal() -> Value {
        json!({
            "name": "t",
            "duration_ms": 1000,
            "nodes": [
                {"id": "C", "role": "consumer", "consumer": {"workload": {"type": "names", "names": ["/p/0"]}}},
                {"id": "R", "role": "router"},
                {"id": "P", "role": "producer", "producer": {"prefixes": ["/p"]}}
            ],
            "links": [{"endpoints": ["C", "R"]}, {"endpoints": ["R", "P"]}]
        })
    }

    #[test]
    fn minimal_loads() {
        let s = load_value(minimal()).unwrap();
        assert_eq!(s.topology.node_count(), 3);
        assert_eq!(s.router_configs.len(), 1);
    }

    #[test]
    fn unknown_keys_rejected() {
        let mut v = minimal();
        v["bogus"] = json!(1);
        assert!(load_value(v).unwrap_err()[0].contains("bogus"));
        let mut v = minimal();
        v["router_defaults"] = json!({"cs_capacty": 5});
        assert!(load_value(v).unwrap_err()[0].contains("cs_capacty"));
    }

    #[test]
    fn all_problems_reported() {
        let mut v = minimal();
        v["links"] = json!([{"endpoints": ["C", "X"]}, {"endpoints": ["R", "Y"]}]);
        let errs = load_value(v).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("\"X\"")));
        assert!(errs.iter().any(|e| e.contains("\"Y\"")));
    }

    #[test]
    fn attack_with_missing_zombie_named() {
        let mut v = minimal();
        v["attacks"] = json!([{"kind": "flood-unsat-nonce", "zombies": ["Z9"], "target": "/p", "rate": 10, "start_ms": 0, "stop_ms": 100}]);
        let errs = load_value(v).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("Z9")), "{errs:?}");
    }

    #[test]
    fn hmac_needs_key() {
        let mut v = minimal();
        v["router_defaults"] =
            json!({"poisoning": {"verification": {"mode": "disjoint-hmac", "v": 2, "group": ["R"]}}});
        let errs = load_value(v).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("group key")), "{errs:?}");
    }

    #[test]
    fn disjoint_v_below_group_size_rejected() {
        let mut v = minimal();
        v["router_defaults"] =
            json!({"poisoning": {"verification": {"mode": "disjoint-plain", "v": 0.5, "group": ["R"]}}});
        assert!(load_value(v).unwrap_err().iter().any(|e| e.contains("v >= group size")));
    }

    #[test]
    fn arms_patch_the_document() {
        let mut v = minimal();
        v["arms"] = json!([
            {"name": "small", "patch": {"router_defaults": {"cs_capacity": 1}}},
            {"name": "plain", "patch": {}}
        ]);
        let s = load_value(v).unwrap();
        let arms = s.arms().unwrap();
        assert_eq!(arms.len(), 2);
        let r = s.id("R").unwrap();
        assert_eq!(arms[0].1.router_configs[&r].cs_capacity, 1);
        assert_eq!(arms[1].1.router_configs[&r].cs_capacity, 1000);
    }

    #[test]
    fn merge_patch_semantics() {
        let mut t = json!({"a": 1, "b": {"c": 2, "d": 3}});
        merge_patch(&mut t, &json!({"a": null, "b": {"c": 5}, "e": [1]}));
        assert_eq!(t, json!({"b": {"c": 5, "d": 3}, "e": [1]}));
    }
}
