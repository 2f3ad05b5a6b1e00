use std::cmp::Ordering;

use super::fib::FibEntry;
use crate::simnet::FaceId;

/// Below this smoothed satisfaction ratio the best face is considered
/// unreliable and a second face is probed alongside it.
pub const PROBE_THRESHOLD: f64 = 0.5;

/// Ranks the entry's faces, skipping `exclude`, and returns the best one, or
/// the best two when the best ratio falls under [`PROBE_THRESHOLD`].
pub fn strategy_choose(entry: &FibEntry, exclude: &[FaceId]) -> Vec<FaceId> {
    let mut ranked: Vec<_> = entry.faces.iter().filter(|(f, _)| !exclude.contains(f)).collect();
    ranked.sort_by(|(fa, a), (fb, b)| {
        b.ratio()
            .partial_cmp(&a.ratio())
            .unwrap_or(Ordering::Equal)
            .then_with(|| {
                let ra = a.srtt.unwrap_or(f64::MAX);
                let rb = b.srtt.unwrap_or(f64::MAX);
                ra.partial_cmp(&rb).unwrap_or(Ordering::Equal)
            })
            .then_with(|| fa.cmp(fb))
    });
    let take = match ranked.first() {
        Some((_, s)) if s.ratio() < PROBE_THRESHOLD => 2,
        _ => 1,
    };
    ranked.into_iter().take(take).map(|(f, _)| *f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ndn::Name;
    use crate::router::fib::FaceStats;

    fn entry(stats: &[(u32, u64, u64)]) -> FibEntry {
        FibEntry {
            prefix: Name::empty(),
            faces: stats
                .iter()
                .map(|&(f, fwd, sat)| {
                    (
                        FaceId(f),
                        FaceStats {
                            forwarded: fwd,
                            satisfied: sat,
                            expired: fwd - sat,
                            srtt: None,
                        },
                    )
                })
                .collect(),
        }
    }

    #[test]
    fn fresh_entry_uses_lowest_face() {
        assert_eq!(
            strategy_choose(&entry(&[(2, 0, 0), (1, 0, 0), (3, 0, 0)]), &[]),
            vec![FaceId(1)]
        );
    }

    #[test]
    fn ranks_by_ratio() {
        // (9+1)/(10+2) and (2+1)/(10+2)
        assert_eq!(strategy_choose(&entry(&[(0, 10, 2), (1, 10, 9)]), &[]), vec![FaceId(1)]);
    }

    #[test]
    fn probes_second_face_below_threshold() {
        // ratio (1+1)/(8+2) = 0.2 and (0+1)/(8+2) = 0.1
        let got = strategy_choose(&entry(&[(0, 8, 1), (1, 8, 0)]), &[]);
        assert_eq!(got, vec![FaceId(0), FaceId(1)]);
        // Just below and just above 0.5.
        let below = entry(&[(0, 4, 1), (1, 0, 0)]); // 2/6 vs 1/2
        assert_eq!(strategy_choose(&below, &[]), vec![FaceId(1)]);
        let only_low = entry(&[(0, 4, 1), (1, 4, 1)]); // 2/6 = 0.333
        assert_eq!(strategy_choose(&only_low, &[]).len(), 2);
        let at = entry(&[(0, 2, 1), (1, 2, 0)]); // 2/4 = 0.5, not below
        assert_eq!(strategy_choose(&at, &[]), vec![FaceId(0)]);
    }

    #[test]
    fn srtt_breaks_ties() {
        let mut e = entry(&[(0, 0, 0), (1, 0, 0)]);
        e.faces[0].1.srtt = Some(900.0);
        e.faces[1].1.srtt = Some(100.0);
        assert_eq!(strategy_choose(&e, &[]), vec![FaceId(1)]);
    }

    #[test]
    fn skips_excluded_faces() {
        assert_eq!(
            strategy_choose(&entry(&[(0, 0, 0), (1, 0, 0)]), &[FaceId(0)]),
            vec![FaceId(1)]
        );
        assert!(strategy_choose(&entry(&[(0, 0, 0)]), &[FaceId(0)]).is_empty());
    }
}
