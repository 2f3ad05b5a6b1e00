pub mod attacks;
pub mod defense;
pub mod error;
pub mod harness;
pub mod ndn;
pub mod nodes;
pub mod router;
pub mod simnet;
