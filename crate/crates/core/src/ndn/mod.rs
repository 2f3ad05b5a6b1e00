//! Names, packets, canonical encoding and cryptographic primitives.

pub mod crypto;
pub mod name;
pub mod packet;
pub mod wire;

pub use crypto::{Digest32, KeyPair, SignatureScheme};
pub use name::{Component, ComponentKind, Name};
pub use packet::{interest_matches, AnswerOriginKind, DataPacket, DataParts, ExcludeFilter, Interest, KeyLocator};
pub use wire::Packet;
