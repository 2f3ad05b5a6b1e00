//! The forwarding engine: content store, pending interest table with
//! collapsing, FIB with longest-prefix match and an adaptive strategy.

pub mod cs;
pub mod fib;
pub mod forwarder;
pub mod pit;
pub mod strategy;

pub use cs::{ContentStore, CsEntry};
pub use fib::{FaceStats, Fib, FibEntry};
pub use forwarder::{Action, DropReason, Router, RouterConfig, RouterStats};
pub use pit::{Pit, PitEntry};
pub use strategy::strategy_choose;

use crate::ndn::{interest_matches, DataPacket, Interest};

/// Matching as a router applies it. Without SCID enforcement the key-digest
/// and content-hash clauses are ignored.
pub fn matches(data: &DataPacket, interest: &Interest, enforce_scid: bool) -> bool {
    if enforce_scid {
        return interest_matches(data, interest);
    }
    let mut relaxed = interest.clone();
    relaxed.publisher_key_digest = None;
    relaxed.name = relaxed.name.without_digest();
    interest_matches(data, &relaxed)
}
