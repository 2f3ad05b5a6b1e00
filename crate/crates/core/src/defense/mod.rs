//! Countermeasures against interest flooding and content poisoning, plus the
//! authenticated one-hop control messages they exchange.

pub mod control;
pub mod flooding;
pub mod poisoning;
