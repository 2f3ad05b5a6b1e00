//! Discrete-event network substrate.

pub mod engine;
pub mod time;
pub mod topology;

pub use engine::{Ctx, EngineStats, Frame, Node, Provenance, SimRng, Simulator};
pub use time::{SimDuration, SimTime};
pub use topology::{FaceId, FaceInfo, LinkId, LinkKind, LinkSpec, NodeId, NodeSpec, Role, Topology};
