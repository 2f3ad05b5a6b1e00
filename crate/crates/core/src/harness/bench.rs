//! Hash versus signature verification throughput.

use std::hint::black_box;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::CryptoError;
use crate::ndn::crypto::{sha256, verify_bytes};
use crate::ndn::{KeyPair, SignatureScheme};

#[derive(Debug, Clone, Serialize)]
pub struct BenchResult {
    pub packet_bytes: usize,
    pub hash_ops: u64,
    pub hash_secs: f64,
    pub sig_ops: u64,
    pub sig_secs: f64,
}

impl BenchResult {
    pub fn hash_per_sec(&self) -> f64 {
        self.hash_ops as f64 / self.hash_secs
    }

    pub fn sig_per_sec(&self) -> f64 {
        self.sig_ops as f64 / self.sig_secs
    }

    pub fn hash_mbps(&self) -> f64 {
        self.hash_per_sec() * self.packet_bytes as f64 * 8.0 / 1e6
    }

    pub fn sig_mbps(&self) -> f64 {
        self.sig_per_sec() * self.packet_bytes as f64 * 8.0 / 1e6
    }

    pub fn ratio(&self) -> f64 {
        self.hash_per_sec() / self.sig_per_sec()
    }
}

fn timed(budget: Duration, mut op: impl FnMut() -> bool) -> (u64, f64) {
    let start = Instant::now();
    let mut n = 0u64;
    loop {
        for _ in 0..64 {
            assert!(op(), "verification failed during benchmark");
        }
        n += 64;
        let el = start.elapsed();
        if el >= budget {
            return (n, el.as_secs_f64());
        }
    }
}

/// Verifies a `packet_bytes` packet by content hash and by RSA-1024
/// signature, each for roughly `budget` of wall time.
pub fn bench_crypto(packet_bytes: usize, budget: Duration) -> Result<BenchResult, CryptoError> {
    let packet: Vec<u8> = (0..packet_bytes).map(|i| (i * 31 + 7) as u8).collect();
    let expected = sha256(&packet);
    let key = KeyPair::from_seed(SignatureScheme::Rsa1024, 0xbe7c)?;
    let sig = key.sign(&packet)?;
    let public = key.public_key().to_vec();
    let (hash_ops, hash_secs) = timed(budget, || sha256(black_box(&packet)) == expected);
    let (sig_ops, sig_secs) = timed(budget, || verify_bytes(&public, black_box(&packet), &sig));
    Ok(BenchResult {
        packet_bytes,
        hash_ops,
        hash_secs,
        sig_ops,
        sig_secs,
    })
}
