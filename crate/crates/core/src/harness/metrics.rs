//! Per-tick, per-node metric rows and their CSV form.
//!
//! Every row has the same columns whatever the node's role; counters that
//! do not apply to a role are zero. Counters are cumulative from the start
//! of the run. `honest_satisfaction` is a consumer's completed fraction of
//! resolved items and is 1 for other roles and for consumers that have not
//! resolved anything yet.

use std::collections::HashMap;
use std::io::Write;
use std::sync::OnceLock;

use crate::nodes::SimNode;
use crate::router::DropReason;
use crate::simnet::{SimTime, Topology};

/// Column names, in order.
pub fn columns() -> &'static [String] {
    static COLUMNS: OnceLock<Vec<String>> = OnceLock::new();
    COLUMNS.get_or_init(build_columns)
}

/// Position of a numeric column within [`Row::values`].
fn value_index(name: &str) -> Option<usize> {
    static INDEX: OnceLock<HashMap<String, usize>> = OnceLock::new();
    INDEX
        .get_or_init(|| {
            columns()
                .iter()
                .skip(3)
                .enumerate()
                .map(|(i, c)| (c.clone(), i))
                .collect()
        })
        .get(name)
        .copied()
}

fn build_columns() -> Vec<String> {
    let mut c: Vec<String> = [
        "time_ms",
        "node",
        "role",
        "pit",
        "pit_attack",
        "pit_peak",
        "interests_in",
        "attack_interests_in",
        "forwarded",
        "collapsed",
        "expired",
        "satisfied",
        "rejected",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    c.extend(DropReason::ALL.iter().map(|r| format!("drop_{}", r.as_str())));
    c.extend(
        [
            "cs_size",
            "cs_hits",
            "cs_misses",
            "poisoned_cached",
            "fake_cached",
            "poisoned_forwarded",
            "fake_forwarded",
            "poison_injected",
            "verifications",
            "purged_invalid",
            "warnings_sent",
            "pushback_sent",
            "caps_installed",
            "consumer_completed",
            "consumer_failed",
            "poisoned_delivered",
            "accepted_poisoned",
            "honest_satisfaction",
            "producer_interests",
            "producer_attack_interests",
            "producer_served",
            "producer_busy_us",
            "zombie_sent",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    c
}

/// One row; `values` lines up with [`columns`] after the three leading
/// identification fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub time_ms: u64,
    pub node: String,
    pub role: String,
    pub values: Vec<f64>,
}

impl Row {
    /// Value of a numeric column by name.
    pub fn get(&self, column: &str) -> Option<f64> {
        value_index(column).and_then(|i| self.values.get(i).copied())
    }
}

pub fn sample(now: SimTime, topo: &Topology, nodes: &[SimNode]) -> Vec<Row> {
    nodes
        .iter()
        .enumerate()
        .map(|(i, n)| {
            let spec = &topo.nodes()[i];
            Row {
                time_ms: now.as_micros() / 1000,
                node: spec.label.clone(),
                role: spec.role.as_str().to_string(),
                values: values(n),
            }
        })
        .collect()
}

fn values(n: &SimNode) -> Vec<f64> {
    let mut v = vec![0.0; columns().len() - 3];
    let mut set = |name: &str, x: f64| {
        v[value_index(name).expect("known column")] = x;
    };
    set("honest_satisfaction", 1.0);
    match n {
        SimNode::Router(r) => {
            let s = &r.stats;
            set("pit", r.pit.len() as f64);
            set("pit_attack", r.pit.attack_len() as f64);
            set("pit_peak", r.pit.peak() as f64);
            set("interests_in", s.interests_in as f64);
            set("attack_interests_in", s.attack_interests_in as f64);
            set("forwarded", s.forwarded as f64);
            set("collapsed", s.collapsed as f64);
            set("expired", s.expired as f64);
            set("satisfied", s.satisfied as f64);
            set("rejected", s.drops.values().sum::<u64>() as f64);
            for reason in DropReason::ALL {
                set(&format!("drop_{}", reason.as_str()), s.dropped(reason) as f64);
            }
            set("cs_size", r.cs.len() as f64);
            set("cs_hits", s.cs_hits as f64);
            set("cs_misses", s.cs_misses as f64);
            set("poisoned_cached", s.poisoned_cached as f64);
            set("fake_cached", s.fake_cached as f64);
            set("poisoned_forwarded", s.poisoned_forwarded as f64);
            set("fake_forwarded", s.fake_forwarded as f64);
            set("poison_injected", s.poison_injected as f64);
            set("verifications", s.verifications as f64);
            set("purged_invalid", s.purged_invalid as f64);
            set("warnings_sent", s.warnings_sent as f64);
            set("pushback_sent", s.pushback_sent as f64);
            set(
                "caps_installed",
                r.flood_guard().map_or(0, |g| g.stats.caps_installed) as f64,
            );
        }
        SimNode::Consumer(c) => {
            let s = &c.stats;
            set("consumer_completed", s.completed as f64);
            set("consumer_failed", s.failed as f64);
            set("poisoned_delivered", s.poisoned_received as f64);
            set("accepted_poisoned", s.accepted_poisoned as f64);
            set("honest_satisfaction", s.satisfaction());
        }
        SimNode::Producer(p) => {
            let s = &p.stats;
            set("producer_interests", s.interests_in as f64);
            set("producer_attack_interests", s.attack_interests_in as f64);
            set("producer_served", (s.static_served + s.dynamic_served) as f64);
            set("producer_busy_us", s.busy_us as f64);
        }
        SimNode::Zombie(z) => {
            set("zombie_sent", z.stats.interests_sent as f64);
        }
    }
    v
}

fn fmt(x: f64) -> String {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        format!("{}", x as i64)
    } else {
        format!("{x:.6}")
    }
}

pub fn write_csv<W: Write>(w: W, rows: &[Row]) -> csv::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(columns())?;
    for r in rows {
        let mut rec = vec![r.time_ms.to_string(), r.node.clone(), r.role.clone()];
        rec.extend(r.values.iter().map(|&x| fmt(x)));
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_csv(rows: &[Row]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_csv(&mut buf, rows).expect("writing to memory");
    buf
}
