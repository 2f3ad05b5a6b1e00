use std::collections::HashMap;

use crate::ndn::Name;
use crate::simnet::{FaceId, SimDuration};

/// Prefixes reserved for control traffic. They never resolve through the FIB.
pub const RESERVED_PREFIXES: [&str; 3] = ["/ndn/warning", "/ndn/feedback", "/ndn/pushback"];

pub fn is_reserved(name: &Name) -> bool {
    reserved_names().iter().any(|p| p.is_prefix_of(name))
}

fn reserved_names() -> &'static [Name] {
    use std::sync::OnceLock;
    static NAMES: OnceLock<Vec<Name>> = OnceLock::new();
    NAMES.get_or_init(|| {
        RESERVED_PREFIXES
            .iter()
            .map(|p| Name::parse(p).expect("reserved prefix"))
            .collect()
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct FaceStats {
    pub forwarded: u64,
    pub satisfied: u64,
    pub expired: u64,
    /// Smoothed round-trip time in microseconds.
    pub srtt: Option<f64>,
}

impl FaceStats {
    /// Laplace-smoothed satisfaction ratio.
    pub fn ratio(&self) -> f64 {
        (self.satisfied as f64 + 1.0) / (self.forwarded as f64 + 2.0)
    }

    pub fn record_rtt(&mut self, rtt: SimDuration) {
        let sample = rtt.as_micros() as f64;
        self.srtt = Some(match self.srtt {
            None => sample,
            Some(s) => s + (sample - s) / 8.0,
        });
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FibEntry {
    pub prefix: Name,
    pub faces: Vec<(FaceId, FaceStats)>,
}

impl FibEntry {
    pub fn stats_mut(&mut self, face: FaceId) -> Option<&mut FaceStats> {
        self.faces.iter_mut().find(|(f, _)| *f == face).map(|(_, s)| s)
    }
}

/// Forwarding table keyed by exact prefix. Longest-prefix match probes each
/// prefix of the name from longest to shortest.
#[derive(Debug, Clone, Default)]
pub struct Fib {
    entries: HashMap<Name, FibEntry>,
}

impl Fib {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `face` as a next hop for `prefix`, keeping faces in insertion order.
    pub fn add_route(&mut self, prefix: Name, face: FaceId) {
        let e = self.entries.entry(prefix.clone()).or_insert_with(|| FibEntry {
            prefix,
            faces: Vec::new(),
        });
        if !e.faces.iter().any(|(f, _)| *f == face) {
            e.faces.push((face, FaceStats::default()));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, prefix: &Name) -> Option<&FibEntry> {
        self.entries.get(prefix)
    }

    pub fn get_mut(&mut self, prefix: &Name) -> Option<&mut FibEntry> {
        self.entries.get_mut(prefix)
    }

    fn lpm_key(&self, name: &Name) -> Option<Name> {
        if is_reserved(name) {
            return None;
        }
        (0..=name.len())
            .rev()
            .map(|k| name.prefix(k))
            .find(|p| self.entries.contains_key(p))
    }

    pub fn longest_prefix_match(&self, name: &Name) -> Option<&FibEntry> {
        self.lpm_key(name).and_then(|k| self.entries.get(&k))
    }

    pub fn longest_prefix_match_mut(&mut self, name: &Name) -> Option<&mut FibEntry> {
        self.lpm_key(name).and_then(move |k| self.entries.get_mut(&k))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::name::tests::arb_name;
    use proptest::prelude::*;

    fn n(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    #[test]
    fn picks_longest() {
        let mut fib = Fib::new();
        fib.add_route(n("/ndn"), FaceId(0));
        fib.add_route(n("/ndn/cnn"), FaceId(1));
        assert_eq!(
            fib.longest_prefix_match(&n("/ndn/cnn/news")).unwrap().prefix,
            n("/ndn/cnn")
        );
        assert_eq!(fib.longest_prefix_match(&n("/ndn/bbc")).unwrap().prefix, n("/ndn"));
    }

    #[test]
    fn no_match() {
        let mut fib = Fib::new();
        fib.add_route(n("/ndn/cnn"), FaceId(1));
        assert!(fib.longest_prefix_match(&n("/bbc")).is_none());
    }

    #[test]
    fn reserved_prefixes_never_match() {
        let mut fib = Fib::new();
        fib.add_route(Name::empty(), FaceId(0));
        fib.add_route(n("/ndn"), FaceId(0));
        assert!(fib.longest_prefix_match(&n("/ndn/warning/x")).is_none());
        assert!(fib.longest_prefix_match(&n("/ndn/pushback")).is_none());
        assert!(fib.longest_prefix_match(&n("/ndn/other")).is_some());
    }

    proptest! {
        #[test]
        fn agrees_with_linear_scan(
            prefixes in proptest::collection::vec(arb_name(), 0..64),
            probe in arb_name(),
            extend in proptest::collection::vec(0usize..64, 0..4),
        ) {
            let mut fib = Fib::new();
            for (i, p) in prefixes.iter().enumerate() {
                fib.add_route(p.clone(), FaceId(i as u32));
            }
            // Make some probes land under a stored prefix.
            let probe = match extend.first() {
                Some(&i) if !prefixes.is_empty() => {
                    let base = &prefixes[i % prefixes.len()];
                    let mut comps = base.components().to_vec();
                    comps.extend(probe.components().iter().cloned());
                    comps.truncate(32);
                    Name::from_components(comps).unwrap()
                }
                _ => probe,
            };
            let oracle = prefixes
                .iter()
                .filter(|p| p.is_prefix_of(&probe))
                .max_by_key(|p| p.len())
                .cloned();
            let got = if is_reserved(&probe) { None } else { oracle };
            prop_assert_eq!(fib.longest_prefix_match(&probe).map(|e| e.prefix.clone()), got);
        }
    }
}
