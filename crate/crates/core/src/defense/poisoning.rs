//! Cache-poisoning countermeasures: sampled signature verification at
//! routers (independent or partitioned across a group), neighbor warnings
//! and consumer-feedback trust scores.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::CoverageError;
use crate::ndn::crypto::{hmac_sha256, low32};
use crate::ndn::Digest32;
use crate::simnet::SimRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VerificationMode {
    #[default]
    Off,
    Independent,
    DisjointPlain,
    DisjointHmac,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerificationConfig {
    pub mode: VerificationMode,
    /// Sampling denominator: 1/v of packets verified (independent), n/v of
    /// the router's residue class (disjoint).
    pub v: f64,
    /// Router labels in group order (disjoint modes).
    pub group: Vec<String>,
    /// Hex-encoded group key (disjoint-hmac).
    pub key: Option<String>,
    /// Re-sample unverified entries this often; `None` samples only on insert.
    pub sweep_interval_ms: Option<u64>,
    pub verify_us: u64,
}

impl Default for VerificationConfig {
    fn default() -> Self {
        Self {
            mode: VerificationMode::Off,
            v: 1.0,
            group: Vec::new(),
            key: None,
            sweep_interval_ms: None,
            verify_us: 80,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NeighborFeedbackConfig {
    pub enabled: bool,
    pub p: f64,
    pub cooldown_ms: u64,
}

impl Default for NeighborFeedbackConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            p: 0.5,
            cooldown_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConsumerFeedbackConfig {
    pub enabled: bool,
    pub alpha: f64,
    pub beta: f64,
    pub threshold: u32,
    pub window_ms: u64,
}

impl Default for ConsumerFeedbackConfig {
    fn default() -> Self {
        Self {
            enabled: false,
            alpha: 0.05,
            beta: 0.5,
            threshold: 3,
            window_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PoisoningConfig {
    pub verification: VerificationConfig,
    pub neighbor: NeighborFeedbackConfig,
    pub consumer_feedback: ConsumerFeedbackConfig,
}

/// A router's resolved sampling rule.
#[derive(Debug, Clone, PartialEq)]
pub enum Selector {
    Off,
    Independent { v: f64 },
    DisjointPlain { v: f64, n: usize, i: usize },
    DisjointHmac { v: f64, n: usize, i: usize, key: Vec<u8> },
}

impl Selector {
    /// Whether `i` owns hash `h` in the group partition. Always true outside
    /// the disjoint modes.
    pub fn owns(&self, h: &Digest32) -> bool {
        match self {
            Selector::Off | Selector::Independent { .. } => true,
            Selector::DisjointPlain { n, i, .. } => residue(h, *n) == *i,
            Selector::DisjointHmac { n, i, key, .. } => keyed_residue(key, h, *n) == *i,
        }
    }

    /// Probability of sampling a packet this router owns.
    pub fn base_rate(&self) -> f64 {
        match self {
            Selector::Off => 0.0,
            Selector::Independent { v } => 1.0 / v,
            Selector::DisjointPlain { v, n, .. } | Selector::DisjointHmac { v, n, .. } => *n as f64 / v,
        }
    }
}

pub fn residue(h: &Digest32, n: usize) -> usize {
    (low32(h) as usize) % n.max(1)
}

pub fn keyed_residue(key: &[u8], h: &Digest32, n: usize) -> usize {
    residue(&hmac_sha256(key, h), n)
}

/// Decides whether to verify content `h` now. With `trust` given (consumer
/// feedback on), the rate scales by 2(1 - T), so fresh entries at T = 0.5
/// keep the base rate and trusted ones are sampled less.
pub fn select_for_verification(sel: &Selector, h: &Digest32, trust: Option<f64>, rng: &mut SimRng) -> bool {
    if matches!(sel, Selector::Off) || !sel.owns(h) {
        return false;
    }
    let mut p = sel.base_rate();
    if let Some(t) = trust {
        p *= 2.0 * (1.0 - t.clamp(0.0, 1.0));
    }
    let p = p.clamp(0.0, 1.0);
    p >= 1.0 || (p > 0.0 && rng.gen::<f64>() < p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoverageMode {
    Independent,
    Disjoint,
}

/// Probability that at least one of the `v.len()` routers verifies a packet.
pub fn coverage_probability(mode: CoverageMode, n: usize, v: &[f64]) -> Result<f64, CoverageError> {
    if v.len() != n {
        return Err(CoverageError::LengthMismatch { n, got: v.len() });
    }
    let mut miss = 1.0;
    for &vi in v {
        let frac = match mode {
            CoverageMode::Independent => {
                if vi.is_nan() || vi < 1.0 {
                    return Err(CoverageError::DenominatorBelowOne(vi));
                }
                1.0 / vi
            }
            CoverageMode::Disjoint => {
                if vi.is_nan() || vi < n as f64 {
                    return Err(CoverageError::DenominatorBelowGroupSize { n, v: vi });
                }
                n as f64 / vi
            }
        };
        miss *= 1.0 - frac;
    }
    Ok(1.0 - miss)
}

/// Trust after one cache hit.
pub fn trust_after_hit(t: f64, alpha: f64) -> f64 {
    (t + alpha * (1.0 - t)).min(1.0)
}

/// Trust after one negative consumer report.
pub fn trust_after_negative(t: f64, beta: f64) -> f64 {
    (t * beta).max(0.0)
}
