//! End-to-end acceptance checks. Runs as a plain binary so it can print one
//! PASS/FAIL line per check; exits non-zero if any check fails.
//!
//! Expected values are derived here from the scenario documents and from
//! first principles, not taken from the library's own thresholds.

use std::collections::{BTreeMap, VecDeque};
use std::process::ExitCode;
use std::time::Duration;

use serde_json::Value;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use ndn_dos::defense::control::{encode, link_key, Control};
use ndn_dos::harness::load_value;
use ndn_dos::harness::suite::{self, arms};
use ndn_dos::ndn::Packet;
use ndn_dos::router::RouterConfig;

type Verdict = Result<(bool, String), String>;
type Check = fn() -> Verdict;

fn nodes_with_role<'a>(doc: &'a Value, role: &str) -> Vec<&'a str> {
    doc["nodes"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|n| n["role"] == role)
        .map(|n| n["id"].as_str().unwrap())
        .collect()
}

fn links_of<'a>(doc: &'a Value, node: &str) -> Vec<&'a Value> {
    doc["links"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|l| l["endpoints"].as_array().unwrap().iter().any(|e| e == node))
        .collect()
}

/// Hop distance from `src` to every node, relaying through anything.
fn hops(doc: &Value, src: &str) -> BTreeMap<String, usize> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for l in doc["links"].as_array().unwrap() {
        let ends: Vec<&str> = l["endpoints"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| e.as_str().unwrap())
            .collect();
        for a in &ends {
            for b in &ends {
                if a != b {
                    adj.entry(a).or_default().push(b);
                }
            }
        }
    }
    let mut dist = BTreeMap::new();
    dist.insert(src.to_string(), 0);
    let mut q = VecDeque::from([src]);
    while let Some(v) = q.pop_front() {
        let d = dist[v];
        for &w in adj.get(v).into_iter().flatten() {
            if !dist.contains_key(w) {
                dist.insert(w.to_string(), d + 1);
                q.push_back(w);
            }
        }
    }
    dist
}

fn collapse() -> Verdict {
    let doc = suite::collapse_scenario();
    let consumers = nodes_with_role(&doc, "consumer").len() as u64;
    let m = suite::measure_collapse(1)?;
    Ok((
        m.upstream == 1 && m.producer_interests == 1 && m.deliveries == consumers,
        format!(
            "{consumers} consumers -> {} upstream, {} deliveries",
            m.upstream, m.deliveries
        ),
    ))
}

fn reflection() -> Verdict {
    let doc = suite::reflection_scenario();
    let victim = nodes_with_role(&doc, "consumer")[0];
    let faces = links_of(&doc, victim).len();
    let segments = links_of(&doc, victim)
        .iter()
        .filter(|l| l["kind"] == "broadcast")
        .count();
    let responders = nodes_with_role(&doc, "router").len();
    let m = suite::measure_reflection(1)?;
    let total: u64 = m.with_overhear.iter().sum();
    Ok((
        m.with_overhear.len() == faces
            && total <= faces as u64
            && total == segments as u64
            && m.with_overhear.iter().all(|&c| c == 1),
        format!(
            "{responders} responders, {faces} interfaces, {segments} segments: {:?} copies (without overhearing {:?})",
            m.with_overhear, m.without_overhear
        ),
    ))
}

fn absorption() -> Verdict {
    let doc = suite::absorption_scenario();
    let a = &doc["attacks"][0];
    let aggregate = a["zombies"].as_array().unwrap().len() as f64 * a["rate"].as_f64().unwrap();
    let m = suite::measure_absorption(1)?;
    Ok((
        m.producer_rate_after < 0.01 * aggregate,
        format!(
            "producer {:.2}/s after 2 s vs aggregate attack {aggregate:.0}/s",
            m.producer_rate_after
        ),
    ))
}

fn exhaustion() -> Verdict {
    let doc = suite::exhaustion_scenario();
    let a = &doc["attacks"][0];
    let little = a["rate"].as_f64().unwrap() * a["lifetime_ms"].as_f64().unwrap() / 1000.0;
    let defended = doc["arms"]
        .as_array()
        .unwrap()
        .iter()
        .find(|x| x["name"] == "defended")
        .unwrap();
    let quota = defended["patch"]["router_overrides"]["R1"]["flooding"]["namespaces"][0]["max_pending"]
        .as_u64()
        .unwrap();
    let m = suite::measure_exhaustion(1)?;
    let pass = (m.steady_pit - little).abs() <= 0.1 * little
        && m.defended_peak <= quota
        && m.sat_defended >= 0.9
        && m.sat_undefended <= 0.5;
    Ok((
        pass,
        format!(
            "PIT {:.0} vs r*L={little:.0}; defended peak {} <= {quota}; satisfaction {:.3} defended / {:.3} undefended",
            m.steady_pit, m.defended_peak, m.sat_defended, m.sat_undefended
        ),
    ))
}

fn gradient() -> Verdict {
    let doc = suite::gradient_scenario();
    let producer = nodes_with_role(&doc, "producer")[0];
    let dist = hops(&doc, producer);
    let m = suite::measure_gradient(1)?;
    let mut by_hop: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for (name, occ) in m.levels.iter().flatten() {
        by_hop.entry(dist[name]).or_default().push(*occ);
    }
    let levels: Vec<(usize, Vec<f64>)> = by_hop.into_iter().collect();
    let ordered = levels.len() >= 3
        && levels.windows(2).all(|w| {
            let near = w[0].1.iter().cloned().fold(f64::INFINITY, f64::min);
            let far = w[1].1.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            near > far
        });
    let shown: Vec<String> = levels
        .iter()
        .map(|(d, v)| {
            format!(
                "hop {d}: {:.2}..{:.2}",
                v.iter().cloned().fold(f64::INFINITY, f64::min),
                v.iter().cloned().fold(0.0, f64::max)
            )
        })
        .collect();
    Ok((ordered, shown.join(", ")))
}

fn key_abuse() -> Verdict {
    let doc = suite::key_abuse_scenario();
    let pool = doc["attacks"][0]["pool"].as_u64().unwrap() as usize;
    let consumers = nodes_with_role(&doc, "consumer").len();
    let m = suite::measure_key_abuse(1)?;
    Ok((
        m.peak_pit <= pool && m.consumers == consumers,
        format!(
            "{consumers} consumers, {} key interests, victim PIT peak {} <= {pool}",
            m.key_interests, m.peak_pit
        ),
    ))
}

fn pushback() -> Verdict {
    let doc = suite::pushback_scenario();
    let rate = doc["attacks"][0]["rate"].as_f64().unwrap();
    let m = suite::measure_pushback(1)?;
    Ok((
        m.admitted_rate < 0.1 * rate && m.honest_sat >= 0.9,
        format!(
            "{:.1}/s of {rate:.0}/s reach the victim-side router; honest satisfaction {:.3}",
            m.admitted_rate, m.honest_sat
        ),
    ))
}

fn dscid() -> Verdict {
    let m = suite::measure_dscid(1)?;
    Ok((
        m.fake_injected > 0
            && m.fake_cached == 0
            && m.fake_delivered == 0
            && m.corrupted_forwarded > 0
            && m.accepted_invalid == 0,
        format!(
            "fake {} injected / {} cached / {} delivered; corrupted {} forwarded / {} accepted",
            m.fake_injected, m.fake_cached, m.fake_delivered, m.corrupted_forwarded, m.accepted_invalid
        ),
    ))
}

fn chained() -> Verdict {
    let doc = suite::chained_scenario();
    let fragments = doc["nodes"][0]["consumer"]["workload"]["count"].as_u64().unwrap();
    let m = suite::measure_chained(1)?;
    Ok((
        m.completed == fragments
            && m.failed == 0
            && m.accepted_poisoned == 0
            && m.poisoned_rest == 0
            && m.poison_cached > 0,
        format!(
            "{}/{fragments} correct; poisoned deliveries after the first fragment: {}",
            m.completed, m.poisoned_rest
        ),
    ))
}

fn coverage() -> Verdict {
    let m = suite::measure_coverage(100_000, 1)?;
    let closed = |label: &str, n: usize, v: &[f64]| -> f64 {
        let miss: f64 = v
            .iter()
            .map(|vi| {
                if label == "independent" {
                    1.0 - 1.0 / vi
                } else {
                    1.0 - n as f64 / vi
                }
            })
            .product();
        1.0 - miss
    };
    let mut pass = m.len() == 2;
    let mut shown = Vec::new();
    for c in &m {
        let want = closed(&c.label, c.n, &c.v);
        pass &= (c.formula - want).abs() < 1e-12 && (c.empirical - want).abs() <= 0.01;
        shown.push(format!("{} {:.4} vs {want:.4}", c.label, c.empirical));
    }
    Ok((pass, shown.join("; ")))
}

fn partition() -> Verdict {
    let (n, target, packets) = (5, 2, 10_000);
    let m = suite::measure_partition(n, target, packets, 1)?;
    let expected = packets as f64 / n as f64;
    let stat: f64 = m.keyed.iter().map(|&o| (o as f64 - expected).powi(2) / expected).sum();
    let p = ChiSquared::new((n - 1) as f64).unwrap().sf(stat);
    let shares_ok = m
        .keyed
        .iter()
        .all(|&c| (c as f64 / packets as f64 - 1.0 / n as f64).abs() <= 0.05);
    Ok((
        m.plain[target] == packets && m.plain.iter().sum::<usize>() == packets && shares_ok && p > 0.01,
        format!("plain {:?}; keyed {:?}, p={p:.3}", m.plain, m.keyed),
    ))
}

fn feedback() -> Verdict {
    let doc = suite::feedback_scenario();
    let link = &doc["links"][0];
    let delay_us = (link["delay_ms"].as_f64().unwrap() * 1000.0) as u64;
    let bw = load_value(doc.clone()).map_err(|e| e.join("; "))?.doc.links[0].bandwidth_bps;
    let warning = Packet::Interest(encode(&Control::Warning([7; 32]), &link_key(1, 2), 3));
    let bits = warning.wire_len() as u64 * 8 * 1_000_000;
    let ser_us = bits.div_ceil(bw);
    let verify_us = RouterConfig::default().poisoning.verification.verify_us;
    let round = delay_us + ser_us + verify_us;

    let m = suite::measure_feedback(1, 20)?;
    let mut worst = 0.0f64;
    for r in &m.on {
        match *r {
            (Some(first), Some(all)) => worst = worst.max((all - first) as f64 / round as f64),
            _ => return Ok((false, "a replicate with feedback never purged every cache".into())),
        }
    }
    let mean = |v: &[(Option<u64>, Option<u64>)]| {
        v.iter().map(|r| r.1.unwrap_or(m.duration_us) as f64).sum::<f64>() / v.len() as f64
    };
    let (on, off) = (mean(&m.on), mean(&m.off));
    Ok((
        m.on.len() == 20 && worst <= 2.0 && off >= 2.0 * on,
        format!(
            "{worst:.2} rounds after detection (round {round} us); mean purge {:.1} ms vs {:.1} ms without feedback",
            on / 1000.0,
            off / 1000.0
        ),
    ))
}

fn bench() -> Verdict {
    // Reference hardware: 1.5 Gbit/s of hashing against 150 Mbit/s of RSA-1024.
    let reference = 1.5e9 / 150e6;
    let r = suite::measure_bench(Duration::from_millis(500))?;
    Ok((
        r.ratio() >= 5.0,
        format!(
            "sha-256 {:.0} Mbit/s vs rsa-1024 {:.0} Mbit/s ({:.1}x, reference hardware {reference:.0}x)",
            r.hash_mbps(),
            r.sig_mbps(),
            r.ratio()
        ),
    ))
}

fn determinism() -> Verdict {
    let m = suite::measure_determinism(11)?;
    let expected: usize = suite::scenarios()
        .into_iter()
        .map(|(_, d)| arms(d).map(|a| a.len()).unwrap_or(0))
        .sum();
    let bad: Vec<&String> = m.iter().filter(|x| !x.1).map(|x| &x.0).collect();
    Ok((
        m.len() == expected && bad.is_empty(),
        format!(
            "{} of {expected} scenario arms byte-identical on rerun{}",
            m.len() - bad.len(),
            if bad.is_empty() {
                String::new()
            } else {
                format!("; differing {bad:?}")
            }
        ),
    ))
}

fn main() -> ExitCode {
    let checks: [(&str, Check); 14] = [
        ("interest collapsing", collapse),
        ("reflection bound", reflection),
        ("static flood absorption", absorption),
        ("pit exhaustion (little's law, quota)", exhaustion),
        ("pit gradient", gradient),
        ("key-locator abuse bound", key_abuse),
        ("push-back reach", pushback),
        ("publisher digest matching", dscid),
        ("chained hash fetch", chained),
        ("coverage formula", coverage),
        ("keyed partition", partition),
        ("neighbor feedback", feedback),
        ("crypto benchmark", bench),
        ("determinism", determinism),
    ];
    // Timing-sensitive last, alone.
    let (parallel, timed): (Vec<_>, Vec<_>) = checks
        .iter()
        .enumerate()
        .partition(|(_, (name, _))| *name != "crypto benchmark");
    let mut results: Vec<Option<Verdict>> = (0..checks.len()).map(|_| None).collect();
    std::thread::scope(|s| {
        let handles: Vec<_> = parallel.iter().map(|&(i, (_, f))| (i, s.spawn(f))).collect();
        for (i, h) in handles {
            results[i] = Some(h.join().unwrap_or_else(|_| Err("panicked".into())));
        }
    });
    for (i, (_, f)) in timed {
        results[i] = Some(f());
    }
    let mut failed = 0;
    for (i, ((name, _), r)) in checks.iter().zip(results).enumerate() {
        let (pass, detail) = r
            .expect("every check ran")
            .unwrap_or_else(|e| (false, format!("error: {e}")));
        failed += !pass as usize;
        println!("{} {:>2} {name}: {detail}", if pass { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} acceptance checks passed", checks.len() - failed, checks.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
