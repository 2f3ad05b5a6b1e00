//! The canonical experiment suite. Each check has a scenario (or a pure
//! computation) and a measurement function; the command line applies the
//! pass thresholds here, the integration tests apply their own.

use std::collections::BTreeMap;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use serde_json::{json, Value};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::bench::{bench_crypto, BenchResult};
use super::experiment::{simulate, Run};
use super::scenario::{load_value, Scenario};
use crate::defense::poisoning::{coverage_probability, select_for_verification, CoverageMode, Selector};
use crate::ndn::{DataParts, Digest32, KeyLocator, Name};
use crate::nodes::{Consumer, Producer, SimNode};
use crate::router::Router;
use crate::simnet::SimRng;

pub struct Outcome {
    pub id: u8,
    pub title: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {}: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.detail
        )
    }
}

pub struct Check {
    pub id: u8,
    pub title: &'static str,
    pub run: fn() -> Outcome,
}

macro_rules! checks {
    ($($id:literal $title:literal $f:ident),* $(,)?) => {
        pub const CHECKS: &[Check] = &[$(Check { id: $id, title: $title, run: || outcome($id, $title, $f()) }),*];
    };
}

checks! {
    1 "interest collapsing" check_collapse,
    2 "reflection bound" check_reflection,
    3 "static flood absorption" check_absorption,
    4 "pit exhaustion" check_exhaustion,
    5 "pit gradient" check_gradient,
    6 "key-locator abuse bound" check_key_abuse,
    7 "push-back reach" check_pushback,
    8 "publisher digest matching" check_dscid,
    9 "chained hash fetch" check_chained,
    10 "coverage formula" check_coverage,
    11 "keyed partition" check_partition,
    12 "neighbor feedback" check_feedback,
    13 "crypto benchmark" check_bench,
    14 "determinism" check_determinism,
}

fn outcome(id: u8, title: &'static str, r: Result<(bool, String), String>) -> Outcome {
    let (pass, detail) = r.unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        title,
        pass,
        detail,
    }
}

// ---- plumbing ----

fn load(v: Value) -> Result<Scenario, String> {
    load_value(v).map_err(|e| e.join("; "))
}

/// Every arm of a scenario document, by name.
pub fn arms(v: Value) -> Result<BTreeMap<String, Scenario>, String> {
    let scn = load(v)?;
    Ok(scn.arms().map_err(|e| e.join("; "))?.into_iter().collect())
}

fn arm(all: &BTreeMap<String, Scenario>, name: &str) -> Result<Scenario, String> {
    all.get(name).cloned().ok_or_else(|| format!("no arm {name:?}"))
}

fn run(scn: &Scenario, seed: u64) -> Result<Run, String> {
    simulate(scn, seed).map_err(|e| e.to_string())
}

fn node<'a>(scn: &Scenario, run: &'a Run, label: &str) -> &'a SimNode {
    run.sim.node(scn.id(label).expect("label belongs to scenario"))
}

fn router<'a>(scn: &Scenario, run: &'a Run, label: &str) -> &'a Router {
    node(scn, run, label).as_router().expect("router node")
}

fn consumer<'a>(scn: &Scenario, run: &'a Run, label: &str) -> &'a Consumer {
    node(scn, run, label).as_consumer().expect("consumer node")
}

fn producer<'a>(scn: &Scenario, run: &'a Run, label: &str) -> &'a Producer {
    node(scn, run, label).as_producer().expect("producer node")
}

/// `col` for `node` in the first sampled row at or after `t_ms`.
fn value_at(run: &Run, node: &str, col: &str, t_ms: u64) -> f64 {
    run.series(node)
        .find(|r| r.time_ms >= t_ms)
        .or_else(|| run.series(node).last())
        .and_then(|r| r.get(col))
        .unwrap_or(0.0)
}

fn last(run: &Run, node: &str, col: &str) -> f64 {
    value_at(run, node, col, u64::MAX)
}

fn r(id: &str) -> Value {
    json!({"id": id, "role": "router"})
}

fn z(id: &str) -> Value {
    json!({"id": id, "role": "zombie"})
}

fn l(a: &str, b: &str, ms: f64) -> Value {
    json!({"endpoints": [a, b], "delay_ms": ms})
}

fn labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

// ---- 1: interest collapsing ----

pub const STAR_CONSUMERS: usize = 20;

/// Consumers around one router, all asking for the same name within a few
/// milliseconds of each other.
pub fn collapse_scenario() -> Value {
    let mut nodes = vec![
        r("R"),
        json!({"id": "P", "role": "producer", "producer": {"prefixes": ["/p"], "items": [{"prefix": "/p", "count": 1}]}}),
    ];
    let mut links = vec![l("R", "P", 5.0)];
    for (i, c) in labels("C", STAR_CONSUMERS).iter().enumerate() {
        nodes.push(json!({"id": c, "role": "consumer", "consumer": {
            "workload": {"type": "names", "names": ["/p/0"]},
            "start_ms": 100,
            "trusted_producer": "P"
        }}));
        links.push(l(c, "R", 1.0 + 0.1 * i as f64));
    }
    json!({"name": "collapse-star", "duration_ms": 2000, "nodes": nodes, "links": links})
}

#[derive(Debug, Clone)]
pub struct Collapse {
    pub consumers: usize,
    pub upstream: u64,
    pub collapsed: u64,
    pub producer_interests: u64,
    pub deliveries: u64,
}

pub fn measure_collapse(seed: u64) -> Result<Collapse, String> {
    let scn = load(collapse_scenario())?;
    let run = run(&scn, seed)?;
    let rt = router(&scn, &run, "R");
    let cs = labels("C", STAR_CONSUMERS);
    Ok(Collapse {
        consumers: cs.len(),
        upstream: rt.stats.forwarded,
        collapsed: rt.stats.collapsed,
        producer_interests: producer(&scn, &run, "P").stats.interests_in,
        deliveries: cs.iter().map(|c| consumer(&scn, &run, c).stats.valid_received).sum(),
    })
}

fn check_collapse() -> Result<(bool, String), String> {
    let m = measure_collapse(1)?;
    Ok((
        m.upstream == 1 && m.producer_interests == 1 && m.deliveries == m.consumers as u64,
        format!(
            "{} consumers: {} upstream interest(s), {} collapsed, {} deliveries",
            m.consumers, m.upstream, m.collapsed, m.deliveries
        ),
    ))
}

// ---- 2: reflection ----

/// A victim on two broadcast segments, each shared with two routers that
/// reach the producer over links of different length.
pub fn reflection_scenario() -> Value {
    json!({
        "name": "reflection",
        "duration_ms": 1000,
        "nodes": [
            {"id": "V", "role": "consumer", "consumer": {
                "workload": {"type": "names", "names": ["/p/0"]},
                "start_ms": 10,
                "trusted_producer": "P"
            }},
            r("A1"), r("A2"), r("B1"), r("B2"),
            {"id": "P", "role": "producer", "producer": {"prefixes": ["/p"], "items": [{"prefix": "/p", "count": 1}]}}
        ],
        "links": [
            {"endpoints": ["V", "A1", "A2"], "kind": "broadcast", "delay_ms": 1.0},
            {"endpoints": ["V", "B1", "B2"], "kind": "broadcast", "delay_ms": 1.0},
            l("A1", "P", 2.0), l("A2", "P", 5.0), l("B1", "P", 2.0), l("B2", "P", 5.0)
        ],
        "arms": [
            {"name": "overhear", "patch": {}},
            {"name": "no-overhear", "patch": {"router_defaults": {"overhear_suppression": false}}}
        ]
    })
}

#[derive(Debug, Clone)]
pub struct Reflection {
    pub faces: usize,
    pub responders: usize,
    pub with_overhear: Vec<u64>,
    pub without_overhear: Vec<u64>,
}

pub fn measure_reflection(seed: u64) -> Result<Reflection, String> {
    let all = arms(reflection_scenario())?;
    let copies = |name: &str| -> Result<Vec<u64>, String> {
        let scn = arm(&all, name)?;
        let run = run(&scn, seed)?;
        Ok(consumer(&scn, &run, "V").stats.copies_per_face.clone())
    };
    let with_overhear = copies("overhear")?;
    Ok(Reflection {
        faces: with_overhear.len(),
        responders: 4,
        with_overhear,
        without_overhear: copies("no-overhear")?,
    })
}

fn check_reflection() -> Result<(bool, String), String> {
    let m = measure_reflection(1)?;
    let total: u64 = m.with_overhear.iter().sum();
    Ok((
        total <= m.faces as u64 && m.with_overhear.iter().all(|&c| c == 1),
        format!(
            "{} responders, {} faces: copies per face {:?} with overhearing, {:?} without",
            m.responders, m.faces, m.with_overhear, m.without_overhear
        ),
    ))
}

// ---- 3: static flood absorption ----

pub const ABSORB_ZOMBIES: usize = 10;
pub const ABSORB_RATE: f64 = 100.0;
pub const ABSORB_NAMES: usize = 50;
pub const ABSORB_AFTER_MS: u64 = 2000;

pub fn absorption_scenario() -> Value {
    let zs = labels("Z", ABSORB_ZOMBIES);
    let mut nodes: Vec<Value> = zs.iter().map(|x| z(x)).collect();
    nodes.extend([
        r("R2"),
        r("R1"),
        json!({"id": "P", "role": "producer", "producer": {
            "prefixes": ["/victim"],
            "items": [{"prefix": "/victim/static", "count": ABSORB_NAMES}]
        }}),
    ]);
    let mut links: Vec<Value> = zs.iter().map(|x| l(x, "R2", 1.0)).collect();
    links.extend([l("R2", "R1", 2.0), l("R1", "P", 2.0)]);
    json!({
        "name": "static-flood",
        "duration_ms": 10000,
        "nodes": nodes,
        "links": links,
        "attacks": [{
            "kind": "flood-static",
            "zombies": zs,
            "target": "/victim/static",
            "name_set": {"prefix": "/victim/static", "count": ABSORB_NAMES},
            "rate": ABSORB_RATE,
            "start_ms": 0,
            "stop_ms": 10000
        }]
    })
}

#[derive(Debug, Clone)]
pub struct Absorption {
    pub attack_rate: f64,
    pub measured_attack_rate: f64,
    pub producer_total: f64,
    pub producer_rate_after: f64,
}

pub fn measure_absorption(seed: u64) -> Result<Absorption, String> {
    let scn = load(absorption_scenario())?;
    let run = run(&scn, seed)?;
    let end = scn.doc.duration_ms;
    let span = (end - ABSORB_AFTER_MS) as f64 / 1000.0;
    let total = last(&run, "P", "producer_interests");
    let before = value_at(&run, "P", "producer_interests", ABSORB_AFTER_MS);
    let sent: f64 = labels("Z", ABSORB_ZOMBIES)
        .iter()
        .map(|x| last(&run, x, "zombie_sent"))
        .sum();
    Ok(Absorption {
        attack_rate: ABSORB_ZOMBIES as f64 * ABSORB_RATE,
        measured_attack_rate: sent / (end as f64 / 1000.0),
        producer_total: total,
        producer_rate_after: (total - before) / span,
    })
}

fn check_absorption() -> Result<(bool, String), String> {
    let m = measure_absorption(1)?;
    Ok((
        m.producer_rate_after < 0.01 * m.attack_rate,
        format!(
            "attack {:.0}/s; producer saw {} interests in total, {:.2}/s after {} ms",
            m.measured_attack_rate, m.producer_total, m.producer_rate_after, ABSORB_AFTER_MS
        ),
    ))
}

// ---- 4: PIT exhaustion ----

pub const EXHAUST_RATE: f64 = 500.0;
pub const EXHAUST_LIFETIME_MS: u32 = 4000;
pub const EXHAUST_QUOTA: u32 = 500;
pub const EXHAUST_MEMORY: usize = 600;
pub const EXHAUST_STEADY_FROM_MS: u64 = 10_000;

/// Zombie and honest consumer on separate access routers that meet at the
/// producer's first hop R1. Arms: no limits at all, a finite PIT, and a
/// finite PIT with a namespace quota and throttling at R1.
pub fn exhaustion_scenario() -> Value {
    json!({
        "name": "pit-exhaustion",
        "duration_ms": 60000,
        "tick_ms": 100,
        "nodes": [
            z("Z"),
            {"id": "C", "role": "consumer", "consumer": {
                "workload": {"type": "sequence", "prefix": "/victim/app"},
                "rate": 10.0,
                "window": 64,
                "max_retries": 0,
                "trusted_producer": "P"
            }},
            r("RZ"), r("RC"), r("R1"),
            {"id": "P", "role": "producer", "producer": {"prefixes": ["/victim"], "dynamic": ["/victim/app"]}}
        ],
        "links": [l("Z", "RZ", 1.0), l("C", "RC", 1.0), l("RZ", "R1", 2.0), l("RC", "R1", 2.0), l("R1", "P", 2.0)],
        "attacks": [{
            "kind": "flood-unsat-nonce",
            "zombies": ["Z"],
            "target": "/victim/junk",
            "rate": EXHAUST_RATE,
            "lifetime_ms": EXHAUST_LIFETIME_MS,
            "start_ms": 1000,
            "stop_ms": 60000
        }],
        "arms": [
            {"name": "unlimited", "patch": {}},
            {"name": "undefended", "patch": {"router_overrides": {"R1": {"pit_capacity": EXHAUST_MEMORY}}}},
            {"name": "defended", "patch": {"router_overrides": {"R1": {
                "pit_capacity": EXHAUST_MEMORY,
                "flooding": {"namespaces": [{"prefix": "/victim", "max_pending": EXHAUST_QUOTA}], "throttle": true}
            }}}}
        ]
    })
}

#[derive(Debug, Clone)]
pub struct Exhaustion {
    pub rate: f64,
    pub lifetime_s: f64,
    pub steady_pit: f64,
    pub quota: u64,
    pub defended_peak: u64,
    pub sat_defended: f64,
    pub sat_undefended: f64,
}

fn mean_after(run: &Run, node: &str, col: &str, from_ms: u64) -> f64 {
    let v: Vec<f64> = run
        .series(node)
        .filter(|r| r.time_ms >= from_ms)
        .filter_map(|r| r.get(col))
        .collect();
    v.iter().sum::<f64>() / v.len().max(1) as f64
}

pub fn measure_exhaustion(seed: u64) -> Result<Exhaustion, String> {
    let all = arms(exhaustion_scenario())?;
    let open = arm(&all, "unlimited")?;
    let open_run = run(&open, seed)?;
    let und = arm(&all, "undefended")?;
    let und_run = run(&und, seed)?;
    let def = arm(&all, "defended")?;
    let def_run = run(&def, seed)?;
    Ok(Exhaustion {
        rate: EXHAUST_RATE,
        lifetime_s: EXHAUST_LIFETIME_MS as f64 / 1000.0,
        steady_pit: mean_after(&open_run, "R1", "pit", EXHAUST_STEADY_FROM_MS),
        quota: EXHAUST_QUOTA as u64,
        defended_peak: router(&def, &def_run, "R1").pit.peak() as u64,
        sat_defended: consumer(&def, &def_run, "C").stats.satisfaction(),
        sat_undefended: consumer(&und, &und_run, "C").stats.satisfaction(),
    })
}

fn check_exhaustion() -> Result<(bool, String), String> {
    let m = measure_exhaustion(1)?;
    let expect = m.rate * m.lifetime_s;
    let pass = (m.steady_pit - expect).abs() <= 0.1 * expect
        && m.defended_peak <= m.quota
        && m.sat_defended >= 0.9
        && m.sat_undefended <= 0.5;
    Ok((
        pass,
        format!(
            "steady PIT {:.0} vs r*L {:.0}; defended peak {} (quota {}); honest satisfaction {:.3} defended, {:.3} undefended",
            m.steady_pit, expect, m.defended_peak, m.quota, m.sat_defended, m.sat_undefended
        ),
    ))
}

// ---- 5: PIT gradient ----

pub const TREE_LEVELS: [&[&str]; 3] = [&["T0"], &["T1a", "T1b"], &["T2a", "T2b", "T2c", "T2d"]];

/// A binary tree of routers under the producer with two zombies on every
/// leaf, all requesting fresh dynamic content.
pub fn gradient_scenario() -> Value {
    let mut nodes: Vec<Value> = TREE_LEVELS.iter().flat_map(|lv| lv.iter().map(|x| r(x))).collect();
    nodes.push(json!({"id": "P", "role": "producer", "producer": {"prefixes": ["/victim"], "dynamic": ["/victim"]}}));
    let mut links = vec![l("T0", "P", 10.0)];
    for (d, level) in TREE_LEVELS.iter().enumerate().skip(1) {
        for (i, x) in level.iter().enumerate() {
            links.push(l(x, TREE_LEVELS[d - 1][i / 2], 1.0));
        }
    }
    let mut zs = Vec::new();
    for leaf in TREE_LEVELS[2] {
        for k in 0..2 {
            let id = format!("Z{leaf}{k}");
            nodes.push(z(&id));
            links.push(l(&id, leaf, 1.0));
            zs.push(id);
        }
    }
    json!({
        "name": "pit-gradient",
        "duration_ms": 20000,
        "key_scheme": "ed25519",
        "nodes": nodes,
        "links": links,
        "attacks": [{
            "kind": "flood-dynamic",
            "zombies": zs,
            "target": "/victim",
            "rate": 50.0,
            "pacing": "poisson",
            "start_ms": 500,
            "stop_ms": 20000
        }]
    })
}

#[derive(Debug, Clone)]
pub struct Gradient {
    /// Time-averaged attack PIT occupancy per router, grouped by hop
    /// distance to the producer (nearest first).
    pub levels: Vec<Vec<(String, f64)>>,
}

pub fn measure_gradient(seed: u64) -> Result<Gradient, String> {
    let scn = load(gradient_scenario())?;
    let run = run(&scn, seed)?;
    let now = run.sim.now();
    Ok(Gradient {
        levels: TREE_LEVELS
            .iter()
            .map(|lv| {
                lv.iter()
                    .map(|x| (x.to_string(), router(&scn, &run, x).pit.attack_time_average(now)))
                    .collect()
            })
            .collect(),
    })
}

fn check_gradient() -> Result<(bool, String), String> {
    let m = measure_gradient(1)?;
    let ordered = m.levels.windows(2).all(|w| {
        let near = w[0].iter().map(|x| x.1).fold(f64::INFINITY, f64::min);
        let far = w[1].iter().map(|x| x.1).fold(0.0, f64::max);
        near > far
    });
    let shown: Vec<String> = m
        .levels
        .iter()
        .enumerate()
        .map(|(d, lv)| {
            let v: Vec<String> = lv.iter().map(|(n, x)| format!("{n}={x:.2}")).collect();
            format!("hop {}: {}", d + 1, v.join(" "))
        })
        .collect();
    Ok((ordered, shown.join("; ")))
}

// ---- 6: key-locator abuse ----

pub const KEY_POOL: usize = 300;
pub const KEY_CONSUMERS: usize = 50;

/// Consumers fetch adversary content whose key locators name keys under
/// the victim's prefix, which the victim never publishes.
pub fn key_abuse_scenario() -> Value {
    let cs = labels("C", KEY_CONSUMERS);
    let mut nodes: Vec<Value> = cs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            json!({"id": c, "role": "consumer", "consumer": {
                "workload": {"type": "cycle", "prefix": "/adv/content", "count": KEY_POOL, "offset": i * KEY_POOL / KEY_CONSUMERS},
                "window": 16,
                "lifetime_ms": 1000,
                "start_ms": 20 * i,
                "max_retries": 0
            }})
        })
        .collect();
    nodes.extend([
        r("RA"),
        r("RV"),
        json!({"id": "V", "role": "producer", "producer": {"prefixes": ["/victim"], "items": [{"prefix": "/victim/data", "count": 1}]}}),
        json!({"id": "A", "role": "producer", "producer": {"prefixes": ["/adv"]}}),
    ]);
    let mut links: Vec<Value> = cs.iter().map(|c| l(c, "RA", 1.0)).collect();
    links.extend([l("RA", "RV", 2.0), l("RV", "V", 2.0), l("RA", "A", 2.0)]);
    json!({
        "name": "key-locator-abuse",
        "duration_ms": 20000,
        "key_scheme": "ed25519",
        "nodes": nodes,
        "links": links,
        "attacks": [{
            "kind": "keylocator-abuse",
            "zombies": ["A"],
            "target": "/victim",
            "content_prefix": "/adv/content",
            "pool": KEY_POOL,
            "rate": 1.0,
            "start_ms": 0,
            "stop_ms": 20000
        }]
    })
}

#[derive(Debug, Clone)]
pub struct KeyAbuse {
    pub pool: usize,
    pub consumers: usize,
    pub key_interests: u64,
    pub peak_pit: usize,
    pub collapsed: u64,
}

pub fn measure_key_abuse(seed: u64) -> Result<KeyAbuse, String> {
    let scn = load(key_abuse_scenario())?;
    let run = run(&scn, seed)?;
    let rv = router(&scn, &run, "RV");
    Ok(KeyAbuse {
        pool: KEY_POOL,
        consumers: KEY_CONSUMERS,
        key_interests: labels("C", KEY_CONSUMERS)
            .iter()
            .map(|c| consumer(&scn, &run, c).stats.key_interests)
            .sum(),
        peak_pit: rv.pit.peak(),
        collapsed: router(&scn, &run, "RA").stats.collapsed,
    })
}

fn check_key_abuse() -> Result<(bool, String), String> {
    let m = measure_key_abuse(1)?;
    Ok((
        m.peak_pit <= m.pool,
        format!(
            "{} consumers issued {} key interests; victim-side PIT peak {} (pool {})",
            m.consumers, m.key_interests, m.peak_pit, m.pool
        ),
    ))
}

// ---- 7: push-back ----

pub const PUSHBACK_RATE: f64 = 500.0;
pub const PUSHBACK_SETTLED_MS: u64 = 10_000;

/// Zombie and honest consumer share the far end of a four-router chain.
/// R1 holds a namespace quota and every router honours push-back.
pub fn pushback_scenario() -> Value {
    json!({
        "name": "pushback-chain",
        "duration_ms": 30000,
        "key_scheme": "ed25519",
        "nodes": [
            z("Z"),
            {"id": "C", "role": "consumer", "consumer": {
                "workload": {"type": "sequence", "prefix": "/victim/app"},
                "rate": 10.0,
                "window": 64,
                "trusted_producer": "P"
            }},
            r("R4"), r("R3"), r("R2"), r("R1"),
            {"id": "P", "role": "producer", "producer": {"prefixes": ["/victim"], "dynamic": ["/victim/app"]}}
        ],
        "links": [l("Z", "R4", 1.0), l("C", "R4", 1.0), l("R4", "R3", 2.0), l("R3", "R2", 2.0), l("R2", "R1", 2.0), l("R1", "P", 2.0)],
        "router_defaults": {"flooding": {"pushback": true, "throttle": false}},
        "router_overrides": {"R1": {"flooding": {"namespaces": [{"prefix": "/victim", "max_pending": 200}]}}},
        "attacks": [{
            "kind": "flood-unsat-nonce",
            "zombies": ["Z"],
            "target": "/victim/junk",
            "rate": PUSHBACK_RATE,
            "start_ms": 1000,
            "stop_ms": 30000
        }]
    })
}

#[derive(Debug, Clone)]
pub struct Pushback {
    pub attack_rate: f64,
    /// Attack interests reaching R1 per second once settled.
    pub admitted_rate: f64,
    pub honest_sat: f64,
    pub pushbacks: u64,
}

pub fn measure_pushback(seed: u64) -> Result<Pushback, String> {
    let scn = load(pushback_scenario())?;
    let run = run(&scn, seed)?;
    let end = scn.doc.duration_ms;
    let span = (end - PUSHBACK_SETTLED_MS) as f64 / 1000.0;
    let delta = |node: &str, col: &str| last(&run, node, col) - value_at(&run, node, col, PUSHBACK_SETTLED_MS);
    let done = delta("C", "consumer_completed");
    let failed = delta("C", "consumer_failed");
    Ok(Pushback {
        attack_rate: PUSHBACK_RATE,
        admitted_rate: delta("R1", "attack_interests_in") / span,
        honest_sat: if done + failed > 0.0 {
            done / (done + failed)
        } else {
            1.0
        },
        pushbacks: ["R1", "R2", "R3", "R4"]
            .iter()
            .map(|x| router(&scn, &run, x).stats.pushback_sent)
            .sum(),
    })
}

fn check_pushback() -> Result<(bool, String), String> {
    let m = measure_pushback(1)?;
    Ok((
        m.admitted_rate < 0.1 * m.attack_rate && m.honest_sat >= 0.9,
        format!(
            "after {} ms: {:.1}/s of {:.0}/s attack interests reach R1; honest satisfaction {:.3}; {} push-back messages",
            PUSHBACK_SETTLED_MS, m.admitted_rate, m.attack_rate, m.honest_sat, m.pushbacks
        ),
    ))
}

// ---- 8: publisher digest matching ----

/// A compromised router between consumer and producer answers every
/// request with poison; the consumer pins the producer's key digest.
pub fn dscid_scenario() -> Value {
    json!({
        "name": "dscid",
        "duration_ms": 20000,
        "nodes": [
            {"id": "C", "role": "consumer", "consumer": {
                "workload": {"type": "set", "prefix": "/victim/doc", "count": 20},
                "window": 4,
                "mode": "d-scid",
                "trusted_producer": "P"
            }},
            r("R1"),
            {"id": "X", "role": "compromised-router"},
            r("R2"),
            {"id": "P", "role": "producer", "producer": {"prefixes": ["/victim"], "items": [{"prefix": "/victim/doc", "count": 20}]}}
        ],
        "links": [l("C", "R1", 1.0), l("R1", "X", 2.0), l("X", "R2", 2.0), l("R2", "P", 2.0)],
        "attacks": [{"kind": "poison-inject", "zombies": ["X"], "target": "/victim/doc", "mode": "fake", "rate": 1.0, "start_ms": 0, "stop_ms": 20000}],
        "arms": [
            {"name": "fake", "patch": {}},
            {"name": "corrupted", "patch": {"attacks": [{"kind": "poison-inject", "zombies": ["X"], "target": "/victim/doc", "mode": "corrupted", "rate": 1.0, "start_ms": 0, "stop_ms": 20000}]}}
        ]
    })
}

#[derive(Debug, Clone)]
pub struct Dscid {
    pub fake_injected: u64,
    pub fake_cached: u64,
    pub fake_delivered: u64,
    pub fake_completed: u64,
    pub corrupted_forwarded: u64,
    pub corrupted_delivered: u64,
    pub accepted_invalid: u64,
    pub corrupted_completed: u64,
}

pub fn measure_dscid(seed: u64) -> Result<Dscid, String> {
    let all = arms(dscid_scenario())?;
    let fake = arm(&all, "fake")?;
    let fr = run(&fake, seed)?;
    let cor = arm(&all, "corrupted")?;
    let cr = run(&cor, seed)?;
    let routers = ["R1", "X", "R2"];
    Ok(Dscid {
        fake_injected: router(&fake, &fr, "X").stats.poison_injected,
        fake_cached: routers.iter().map(|x| router(&fake, &fr, x).stats.fake_cached).sum(),
        fake_delivered: consumer(&fake, &fr, "C").stats.poisoned_received,
        fake_completed: consumer(&fake, &fr, "C").stats.completed,
        corrupted_forwarded: routers
            .iter()
            .map(|x| router(&cor, &cr, x).stats.poisoned_forwarded)
            .sum(),
        corrupted_delivered: consumer(&cor, &cr, "C").stats.poisoned_received,
        accepted_invalid: consumer(&cor, &cr, "C").stats.accepted_poisoned,
        corrupted_completed: consumer(&cor, &cr, "C").stats.completed,
    })
}

fn check_dscid() -> Result<(bool, String), String> {
    let m = measure_dscid(1)?;
    Ok((
        m.fake_injected > 0
            && m.fake_cached == 0
            && m.fake_delivered == 0
            && m.corrupted_forwarded > 0
            && m.accepted_invalid == 0,
        format!(
            "fake: {} injected, {} cached, {} delivered; corrupted: {} forwarded, {} delivered, {} accepted",
            m.fake_injected,
            m.fake_cached,
            m.fake_delivered,
            m.corrupted_forwarded,
            m.corrupted_delivered,
            m.accepted_invalid
        ),
    ))
}

// ---- 9: chained hash fetch ----

pub const CHAIN_FRAGMENTS: usize = 50;
pub const CHAIN_LINKS: usize = 4;

/// A zombie pre-fetches every fragment through a compromised router so
/// the shared access router caches poison before the consumer starts.
pub fn chained_scenario() -> Value {
    json!({
        "name": "chained-fetch",
        "duration_ms": 20000,
        "nodes": [
            {"id": "C", "role": "consumer", "consumer": {
                "workload": {"type": "collection", "prefix": "/victim/col", "count": CHAIN_FRAGMENTS},
                "window": CHAIN_LINKS,
                "mode": "s-scid",
                "start_ms": 2000,
                "trusted_producer": "P"
            }},
            z("Z"),
            r("R1"),
            {"id": "X", "role": "compromised-router"},
            r("R2"),
            {"id": "P", "role": "producer", "producer": {
                "prefixes": ["/victim"],
                "collections": [{"prefix": "/victim/col", "count": CHAIN_FRAGMENTS, "links": CHAIN_LINKS}]
            }}
        ],
        "links": [l("C", "R1", 1.0), l("Z", "R1", 1.0), l("R1", "X", 2.0), l("X", "R2", 2.0), l("R2", "P", 2.0)],
        "attacks": [
            {"kind": "poison-anticipate", "zombies": ["Z"], "target": "/victim/col",
             "name_set": {"prefix": "/victim/col", "count": CHAIN_FRAGMENTS, "first": 1},
             "rate": 1.0, "start_ms": 500, "stop_ms": 20000},
            {"kind": "poison-inject", "zombies": ["X"], "target": "/victim/col", "mode": "corrupted",
             "rate": 1.0, "start_ms": 0, "stop_ms": 20000}
        ]
    })
}

#[derive(Debug, Clone)]
pub struct Chained {
    pub fragments: usize,
    pub completed: u64,
    pub failed: u64,
    pub accepted_poisoned: u64,
    pub poison_cached: u64,
    pub poisoned_first: u64,
    pub poisoned_rest: u64,
}

pub fn measure_chained(seed: u64) -> Result<Chained, String> {
    let scn = load(chained_scenario())?;
    let run = run(&scn, seed)?;
    let c = consumer(&scn, &run, "C");
    let first: Name = "/victim/col/1".parse().expect("valid name");
    let poisoned_first = c.stats.poisoned_by_name.get(&first).copied().unwrap_or(0);
    Ok(Chained {
        fragments: CHAIN_FRAGMENTS,
        completed: c.stats.completed,
        failed: c.stats.failed,
        accepted_poisoned: c.stats.accepted_poisoned,
        poison_cached: router(&scn, &run, "R1").stats.poisoned_cached,
        poisoned_first,
        poisoned_rest: c.stats.poisoned_received - poisoned_first,
    })
}

fn check_chained() -> Result<(bool, String), String> {
    let m = measure_chained(1)?;
    Ok((
        m.completed == m.fragments as u64 && m.failed == 0 && m.accepted_poisoned == 0 && m.poisoned_rest == 0,
        format!(
            "{}/{} fragments verified; {} poisoned copies cached at the access router; poisoned deliveries: {} for the first, {} for the rest",
            m.completed, m.fragments, m.poison_cached, m.poisoned_first, m.poisoned_rest
        ),
    ))
}

// ---- 10: coverage formula ----

#[derive(Debug, Clone)]
pub struct Coverage {
    pub label: String,
    pub n: usize,
    pub v: Vec<f64>,
    pub formula: f64,
    pub empirical: f64,
}

fn random_hash(rng: &mut SimRng) -> Digest32 {
    let mut h = [0u8; 32];
    rng.fill(&mut h);
    h
}

/// Monte-Carlo estimates of the chance that at least one router verifies
/// a packet cached everywhere, driven through the routers' own selectors.
/// In the disjoint case each router is handed a packet it owns, so every
/// router's draw is the independent n/v coin the formula assumes.
pub fn measure_coverage(trials: usize, seed: u64) -> Result<Vec<Coverage>, String> {
    let mut rng = SimRng::seed_from_u64(seed);
    let mut out = Vec::new();

    let v = vec![2.0, 3.0, 4.0];
    let sels: Vec<Selector> = v.iter().map(|&v| Selector::Independent { v }).collect();
    let mut hits = 0usize;
    for _ in 0..trials {
        let h = random_hash(&mut rng);
        let mut covered = false;
        for s in &sels {
            covered |= select_for_verification(s, &h, None, &mut rng);
        }
        hits += covered as usize;
    }
    out.push(Coverage {
        label: "independent".into(),
        n: 3,
        formula: coverage_probability(CoverageMode::Independent, 3, &v).map_err(|e| e.to_string())?,
        v,
        empirical: hits as f64 / trials as f64,
    });

    let n = 4;
    let v = vec![8.0; n];
    let key = b"coverage-check-group-key".to_vec();
    let sels: Vec<Selector> = v
        .iter()
        .enumerate()
        .map(|(i, &v)| Selector::DisjointHmac {
            v,
            n,
            i,
            key: key.clone(),
        })
        .collect();
    let mut hits = 0usize;
    for _ in 0..trials {
        let mut covered = false;
        for s in &sels {
            let h = loop {
                let h = random_hash(&mut rng);
                if s.owns(&h) {
                    break h;
                }
            };
            covered |= select_for_verification(s, &h, None, &mut rng);
        }
        hits += covered as usize;
    }
    out.push(Coverage {
        label: "disjoint-hmac".into(),
        n,
        formula: coverage_probability(CoverageMode::Disjoint, n, &v).map_err(|e| e.to_string())?,
        v,
        empirical: hits as f64 / trials as f64,
    });
    Ok(out)
}

fn check_coverage() -> Result<(bool, String), String> {
    let m = measure_coverage(100_000, 1)?;
    let pass = m.iter().all(|c| (c.empirical - c.formula).abs() <= 0.01);
    let shown: Vec<String> = m
        .iter()
        .map(|c| {
            format!(
                "{} n={} v={:?}: {:.4} vs {:.4}",
                c.label, c.n, c.v, c.empirical, c.formula
            )
        })
        .collect();
    Ok((pass, shown.join("; ")))
}

// ---- 11: keyed partition ----

#[derive(Debug, Clone)]
pub struct Partition {
    pub n: usize,
    pub target: usize,
    pub packets: usize,
    pub plain: Vec<usize>,
    pub keyed: Vec<usize>,
    pub chi2_p: f64,
}

/// Chi-square goodness-of-fit p-value against a uniform split.
pub fn uniform_p_value(counts: &[usize]) -> f64 {
    let total: usize = counts.iter().sum();
    let e = total as f64 / counts.len() as f64;
    let stat: f64 = counts.iter().map(|&o| (o as f64 - e).powi(2) / e).sum();
    let dist = ChiSquared::new((counts.len() - 1) as f64).expect("at least two cells");
    1.0 - dist.cdf(stat)
}

/// An adversary without the group key crafts packets whose plain residue
/// is `target`; counts which group member each packet lands on.
pub fn measure_partition(n: usize, target: usize, packets: usize, seed: u64) -> Result<Partition, String> {
    let mut rng = SimRng::seed_from_u64(seed);
    let key = {
        let mut k = [0u8; 32];
        rng.fill(&mut k);
        k.to_vec()
    };
    let plain_sels: Vec<Selector> = (0..n).map(|i| Selector::DisjointPlain { v: n as f64, n, i }).collect();
    let keyed_sels: Vec<Selector> = (0..n)
        .map(|i| Selector::DisjointHmac {
            v: n as f64,
            n,
            i,
            key: key.clone(),
        })
        .collect();
    let adversary_key = [0xadu8; 32];
    let name: Name = "/victim/crafted".parse().expect("valid name");
    let mut plain = vec![0usize; n];
    let mut keyed = vec![0usize; n];
    let mut made = 0;
    let mut counter = 0u64;
    while made < packets {
        counter += 1;
        let mut payload = counter.to_be_bytes().to_vec();
        payload.extend_from_slice(&rng.gen::<[u8; 8]>());
        let pkt = DataParts::unsigned(
            name.clone(),
            payload,
            KeyLocator::EmbeddedKey(adversary_key.to_vec()),
            adversary_key,
        )
        .build();
        let h = pkt.content_hash();
        if !plain_sels[target].owns(&h) {
            continue;
        }
        made += 1;
        for (i, s) in plain_sels.iter().enumerate() {
            plain[i] += select_for_verification(s, &h, None, &mut rng) as usize;
        }
        for (i, s) in keyed_sels.iter().enumerate() {
            keyed[i] += select_for_verification(s, &h, None, &mut rng) as usize;
        }
    }
    Ok(Partition {
        n,
        target,
        packets,
        chi2_p: uniform_p_value(&keyed),
        plain,
        keyed,
    })
}

fn check_partition() -> Result<(bool, String), String> {
    let m = measure_partition(5, 2, 10_000, 1)?;
    let share = |c: usize| c as f64 / m.packets as f64;
    let pass = m.plain[m.target] == m.packets
        && m.keyed.iter().all(|&c| (share(c) - 1.0 / m.n as f64).abs() <= 0.05)
        && m.chi2_p > 0.01;
    Ok((
        pass,
        format!(
            "{} packets aimed at router {}: plain {:?}, keyed {:?} (chi-square p={:.3})",
            m.packets, m.target, m.plain, m.keyed, m.chi2_p
        ),
    ))
}

// ---- 12: neighbor feedback ----

pub const RING: [&str; 5] = ["R0", "R1", "R2", "R3", "R4"];
pub const RING_DELAY_MS: f64 = 2.0;
pub const RING_SWEEP_MS: u64 = 100;
pub const FEEDBACK_REPLICATES: usize = 20;

/// Five routers in a ring, each caching the same corrupted packet and
/// re-sampling its cache every sweep interval.
pub fn feedback_scenario() -> Value {
    let mut links: Vec<Value> = (0..RING.len())
        .map(|i| l(RING[i], RING[(i + 1) % RING.len()], RING_DELAY_MS))
        .collect();
    links.push(l("P", "R0", RING_DELAY_MS));
    let mut nodes: Vec<Value> = RING.iter().map(|x| r(x)).collect();
    nodes.push(json!({"id": "P", "role": "producer", "producer": {"prefixes": ["/victim"], "items": [{"prefix": "/victim/obj", "count": 1}]}}));
    json!({
        "name": "neighbor-feedback",
        "duration_ms": 20000,
        "tick_ms": 1000,
        "nodes": nodes,
        "links": links,
        "router_defaults": {"poisoning": {
            "verification": {"mode": "independent", "v": 5.0, "sweep_interval_ms": RING_SWEEP_MS},
            "neighbor": {"enabled": true, "p": 1.0}
        }},
        "preload": [{"nodes": RING, "name": "/victim/obj/0", "producer": "P", "poison": "corrupted"}],
        "arms": [
            {"name": "feedback", "patch": {}},
            {"name": "no-feedback", "patch": {"router_defaults": {"poisoning": {"neighbor": {"enabled": false}}}}}
        ]
    })
}

/// Purge times for one run, in microseconds: first detection anywhere and
/// the moment the last cache was cleaned (`None` if some cache never was).
pub fn purge_times(scn: &Scenario, run: &Run) -> (Option<u64>, Option<u64>) {
    let stats: Vec<_> = RING.iter().map(|x| &router(scn, run, x).stats).collect();
    let first = stats.iter().filter_map(|s| s.first_purge).min().map(|t| t.as_micros());
    let all = stats
        .iter()
        .map(|s| s.last_purge)
        .collect::<Option<Vec<_>>>()
        .and_then(|v| v.into_iter().max())
        .map(|t| t.as_micros());
    (first, all)
}

#[derive(Debug, Clone)]
pub struct Feedback {
    /// (first detection, all purged) per replicate with feedback on, µs.
    pub on: Vec<(Option<u64>, Option<u64>)>,
    pub off: Vec<(Option<u64>, Option<u64>)>,
    pub duration_us: u64,
}

impl Feedback {
    /// Mean time until every cache is clean; runs that never finish count
    /// as the full duration.
    pub fn mean_all_purged(runs: &[(Option<u64>, Option<u64>)], duration_us: u64) -> f64 {
        runs.iter().map(|r| r.1.unwrap_or(duration_us) as f64).sum::<f64>() / runs.len().max(1) as f64
    }
}

pub fn measure_feedback(base_seed: u64, replicates: usize) -> Result<Feedback, String> {
    let all = arms(feedback_scenario())?;
    let mut res = Feedback {
        on: Vec::new(),
        off: Vec::new(),
        duration_us: 0,
    };
    for (name, out) in [("feedback", &mut res.on), ("no-feedback", &mut res.off)] {
        let scn = arm(&all, name)?;
        for k in 0..replicates as u64 {
            let run = run(&scn, base_seed + k)?;
            out.push(purge_times(&scn, &run));
        }
    }
    res.duration_us = arm(&all, "feedback")?.doc.duration_ms * 1000;
    Ok(res)
}

/// Upper bound on one warning round: link delay, warning serialization
/// and one verification.
pub fn warning_round_us(scn: &Scenario) -> u64 {
    use crate::defense::control::{encode, link_key, Control};
    let warning = encode(&Control::Warning([0; 32]), &link_key(0, 0), 0);
    let bytes = crate::ndn::Packet::Interest(warning).wire_len();
    let link = &scn.doc.links[0];
    let ser = crate::simnet::SimDuration::serialization(bytes, link.bandwidth_bps).as_micros();
    let cfg = scn.router_configs.values().next().expect("ring has routers");
    (link.delay_ms * 1000.0) as u64 + ser + cfg.poisoning.verification.verify_us
}

fn check_feedback() -> Result<(bool, String), String> {
    let m = measure_feedback(1, FEEDBACK_REPLICATES)?;
    let scn = arm(&arms(feedback_scenario())?, "feedback")?;
    let round = warning_round_us(&scn);
    let worst =
        m.on.iter()
            .map(|r| match r {
                (Some(f), Some(a)) => (a - f) as f64 / round as f64,
                _ => f64::INFINITY,
            })
            .fold(0.0, f64::max);
    let on = Feedback::mean_all_purged(&m.on, m.duration_us);
    let off = Feedback::mean_all_purged(&m.off, m.duration_us);
    Ok((
        worst <= 2.0 && off >= 2.0 * on,
        format!(
            "{} replicates: with feedback all caches clean within {:.2} rounds of detection (round {} us), mean {:.1} ms; without {:.1} ms ({:.1}x)",
            m.on.len(),
            worst,
            round,
            on / 1000.0,
            off / 1000.0,
            off / on
        ),
    ))
}

// ---- 13: crypto benchmark ----

pub fn measure_bench(budget: Duration) -> Result<BenchResult, String> {
    bench_crypto(1500, budget).map_err(|e| e.to_string())
}

fn check_bench() -> Result<(bool, String), String> {
    let r = measure_bench(Duration::from_millis(500))?;
    Ok((
        r.ratio() >= 5.0,
        format!(
            "sha-256 {:.0} Mbit/s, rsa-1024 {:.0} Mbit/s, ratio {:.1}x",
            r.hash_mbps(),
            r.sig_mbps(),
            r.ratio()
        ),
    ))
}

// ---- 14: determinism ----

/// Every scenario the suite simulates, by name.
pub fn scenarios() -> Vec<(&'static str, Value)> {
    vec![
        ("collapse-star", collapse_scenario()),
        ("reflection", reflection_scenario()),
        ("static-flood", absorption_scenario()),
        ("pit-exhaustion", exhaustion_scenario()),
        ("pit-gradient", gradient_scenario()),
        ("key-locator-abuse", key_abuse_scenario()),
        ("pushback-chain", pushback_scenario()),
        ("dscid", dscid_scenario()),
        ("chained-fetch", chained_scenario()),
        ("neighbor-feedback", feedback_scenario()),
    ]
}

/// Runs every arm of every suite scenario twice with the same seed and
/// reports whether the metric files matched byte for byte.
pub fn measure_determinism(seed: u64) -> Result<Vec<(String, bool)>, String> {
    let mut out = Vec::new();
    for (name, doc) in scenarios() {
        for (arm_name, scn) in arms(doc)? {
            let (a, b) = std::thread::scope(|s| {
                let h1 = s.spawn(|| run(&scn, seed).map(|r| r.csv()));
                let h2 = s.spawn(|| run(&scn, seed).map(|r| r.csv()));
                (h1.join().expect("run thread"), h2.join().expect("run thread"))
            });
            out.push((format!("{name}/{arm_name}"), a? == b?));
        }
    }
    Ok(out)
}

fn check_determinism() -> Result<(bool, String), String> {
    let m = measure_determinism(7)?;
    let bad: Vec<&str> = m.iter().filter(|x| !x.1).map(|x| x.0.as_str()).collect();
    Ok((
        bad.is_empty(),
        if bad.is_empty() {
            format!("{} scenario arms reproduced byte-identical metrics", m.len())
        } else {
            format!("differing: {}", bad.join(", "))
        },
    ))
}
