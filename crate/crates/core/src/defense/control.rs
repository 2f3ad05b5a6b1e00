//! Control messages carried as scope-2 interests in reserved namespaces, each
//! ending in an HMAC-SHA256 tag under the key shared by the two ends of a link.

use crate::ndn::crypto::{hmac_sha256, hmac_sha256_verify, sha256};
use crate::ndn::wire::encode_name;
use crate::ndn::{Component, Digest32, Interest, Name};

pub const WARNING_PREFIX: &str = "/ndn/warning";
pub const FEEDBACK_PREFIX: &str = "/ndn/feedback";
pub const PUSHBACK_PREFIX: &str = "/ndn/pushback";
pub const CONTROL_SCOPE: u8 = 2;

/// Key shared by the endpoints of link `link` in a scenario keyed by `seed`.
pub fn link_key(seed: u64, link: u32) -> Digest32 {
    let mut buf = b"link-key".to_vec();
    buf.extend_from_slice(&seed.to_be_bytes());
    buf.extend_from_slice(&link.to_be_bytes());
    sha256(&buf)
}

#[derive(Debug, Clone, PartialEq)]
pub struct PushbackMsg {
    pub prefix: Name,
    /// Advised interest rate in interests per second.
    pub rate: f64,
    pub ttl: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Control {
    Warning(Digest32),
    Feedback(Digest32),
    Pushback(PushbackMsg),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlError {
    Malformed,
    BadMac,
}

fn unsigned_name(ctrl: &Control) -> Name {
    let (root, rest): (&str, Vec<Component>) = match ctrl {
        Control::Warning(h) => (WARNING_PREFIX, vec![Component::digest(*h)]),
        Control::Feedback(h) => (FEEDBACK_PREFIX, vec![Component::digest(*h)]),
        Control::Pushback(m) => (
            PUSHBACK_PREFIX,
            vec![
                Component::generic(m.prefix.to_string().into_bytes()).expect("pushback prefix fits a component"),
                Component::generic(format!("{:.3}", m.rate).into_bytes()).expect("rate text"),
                Component::generic(m.ttl.to_string().into_bytes()).expect("ttl text"),
            ],
        ),
    };
    let mut comps = Name::parse(root).expect("reserved prefix").components().to_vec();
    comps.extend(rest);
    Name::from_components(comps).expect("control name within limits")
}

/// Builds the scope-2 interest carrying `ctrl`, tagged under `key`.
pub fn encode(ctrl: &Control, key: &[u8], nonce: u64) -> Interest {
    let name = unsigned_name(ctrl);
    let tag = hmac_sha256(key, &encode_name(&name));
    let name = name
        .child(Component::generic(tag.to_vec()).expect("32-byte tag"))
        .expect("control name within limits");
    Interest::new(name, nonce).with_scope(CONTROL_SCOPE)
}

pub fn is_control(name: &Name) -> bool {
    matches!(name.get(0), Some(c) if c.as_bytes() == b"ndn")
        && matches!(
            name.get(1).map(|c| c.as_bytes()),
            Some(b"warning" | b"feedback" | b"pushback")
        )
}

/// Parses a control interest and checks its tag. Returns `None` for names
/// outside the reserved namespaces.
pub fn decode(interest: &Interest, key: &[u8]) -> Option<Result<Control, ControlError>> {
    let name = &interest.name;
    if !is_control(name) {
        return None;
    }
    Some(decode_inner(name, key))
}

fn decode_inner(name: &Name, key: &[u8]) -> Result<Control, ControlError> {
    let comps = name.components();
    let tag = comps.last().ok_or(ControlError::Malformed)?;
    let body = name.prefix(comps.len() - 1);
    let ctrl = match comps[1].as_bytes() {
        b"warning" | b"feedback" => {
            if comps.len() != 4 {
                return Err(ControlError::Malformed);
            }
            let h = comps[2].as_digest().ok_or(ControlError::Malformed)?;
            if comps[1].as_bytes() == b"warning" {
                Control::Warning(h)
            } else {
                Control::Feedback(h)
            }
        }
        b"pushback" => {
            if comps.len() != 6 {
                return Err(ControlError::Malformed);
            }
            let text = |c: &Component| {
                std::str::from_utf8(c.as_bytes())
                    .map_err(|_| ControlError::Malformed)
                    .map(str::to_owned)
            };
            let prefix = Name::parse(&text(&comps[2])?).map_err(|_| ControlError::Malformed)?;
            let rate: f64 = text(&comps[3])?.parse().map_err(|_| ControlError::Malformed)?;
            let ttl: u8 = text(&comps[4])?.parse().map_err(|_| ControlError::Malformed)?;
            if !rate.is_finite() || rate < 0.0 {
                return Err(ControlError::Malformed);
            }
            Control::Pushback(PushbackMsg { prefix, rate, ttl })
        }
        _ => return Err(ControlError::Malformed),
    };
    if !hmac_sha256_verify(key, &encode_name(&body), tag.as_bytes()) {
        return Err(ControlError::BadMac);
    }
    Ok(ctrl)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn warning_round_trip() {
        let key = link_key(1, 0);
        let i = encode(&Control::Warning([9; 32]), &key, 5);
        assert_eq!(i.scope, Some(2));
        assert!(i.name.to_string().starts_with("/ndn/warning/"));
        assert_eq!(decode(&i, &key), Some(Ok(Control::Warning([9; 32]))));
    }

    #[test]
    fn pushback_round_trip() {
        let key = link_key(1, 3);
        let msg = PushbackMsg {
            prefix: Name::parse("/victim/data").unwrap(),
            rate: 12.5,
            ttl: 8,
        };
        let i = encode(&Control::Pushback(msg.clone()), &key, 5);
        assert_eq!(decode(&i, &key), Some(Ok(Control::Pushback(msg))));
    }

    #[test]
    fn wrong_key_rejected() {
        let i = encode(&Control::Feedback([1; 32]), &link_key(1, 0), 5);
        assert_eq!(decode(&i, &link_key(1, 1)), Some(Err(ControlError::BadMac)));
        assert_eq!(decode(&i, &link_key(2, 0)), Some(Err(ControlError::BadMac)));
    }

    #[test]
    fn ordinary_names_ignored() {
        let i = Interest::new(Name::parse("/ndn/cnn").unwrap(), 1);
        assert_eq!(decode(&i, &[0; 32]), None);
    }

    #[test]
    fn truncated_control_is_malformed() {
        let i = Interest::new(Name::parse("/ndn/warning").unwrap(), 1);
        assert_eq!(decode(&i, &[0; 32]), Some(Err(ControlError::Malformed)));
    }
}
