//! Hierarchical names.
//!
//! A name is an ordered list of opaque components. Components are either
//! generic byte strings or digest-typed: exactly 32 bytes of SHA-256 output,
//! distinguished on the wire by a type tag. The digest type is how routers
//! recognise the trailing content-hash component of a self-certifying interest.

use std::fmt;
use std::str::FromStr;

use crate::error::NameError;

pub const MAX_COMPONENT_LEN: usize = 255;
pub const MAX_COMPONENTS: usize = 32;
pub const DIGEST_LEN: usize = 32;

/// Text prefix marking a digest-typed component.
const DIGEST_TEXT_PREFIX: &str = "sha256digest=";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ComponentKind {
    Generic,
    Digest,
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Component {
    kind: ComponentKind,
    bytes: Vec<u8>,
}

impl Component {
    pub fn generic(bytes: impl Into<Vec<u8>>) -> Result<Self, NameError> {
        let bytes = bytes.into();
        if bytes.is_empty() {
            return Err(NameError::EmptyComponent);
        }
        if bytes.len() > MAX_COMPONENT_LEN {
            return Err(NameError::ComponentTooLong(bytes.len()));
        }
        Ok(Self {
            kind: ComponentKind::Generic,
            bytes,
        })
    }

    pub fn digest(digest: [u8; DIGEST_LEN]) -> Self {
        Self {
            kind: ComponentKind::Digest,
            bytes: digest.to_vec(),
        }
    }

    pub fn kind(&self) -> ComponentKind {
        self.kind
    }

    pub fn is_digest(&self) -> bool {
        self.kind == ComponentKind::Digest
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn as_digest(&self) -> Option<[u8; DIGEST_LEN]> {
        if self.is_digest() {
            self.bytes.as_slice().try_into().ok()
        } else {
            None
        }
    }

    pub(crate) fn from_wire(kind: ComponentKind, bytes: Vec<u8>) -> Result<Self, NameError> {
        match kind {
            ComponentKind::Generic => Self::generic(bytes),
            ComponentKind::Digest => {
                let d: [u8; DIGEST_LEN] = bytes
                    .as_slice()
                    .try_into()
                    .map_err(|_| NameError::BadDigestLength(bytes.len()))?;
                Ok(Self::digest(d))
            }
        }
    }

    fn write_text(&self, out: &mut String) {
        if let Some(d) = self.as_digest() {
            out.push_str(DIGEST_TEXT_PREFIX);
            out.push_str(&hex::encode(d));
            return;
        }
        // A generic component that happens to look like the digest marker
        // gets its '=' escaped so it cannot be re-read as a digest.
        let marker_clash = self.bytes.starts_with(DIGEST_TEXT_PREFIX.as_bytes());
        for (i, &b) in self.bytes.iter().enumerate() {
            let escape = !(0x20..0x7f).contains(&b)
                || b == b'/'
                || b == b'%'
                || (marker_clash && i == DIGEST_TEXT_PREFIX.len() - 1);
            if escape {
                out.push_str(&format!("%{b:02X}"));
            } else {
                out.push(b as char);
            }
        }
    }

    fn parse_text(text: &str) -> Result<Self, NameError> {
        if let Some(hexpart) = text.strip_prefix(DIGEST_TEXT_PREFIX) {
            let raw = hex::decode(hexpart).map_err(|_| NameError::BadDigestText)?;
            let d: [u8; DIGEST_LEN] = raw
                .as_slice()
                .try_into()
                .map_err(|_| NameError::BadDigestLength(raw.len()))?;
            return Ok(Self::digest(d));
        }
        let src = text.as_bytes();
        let mut bytes = Vec::with_capacity(src.len());
        let mut i = 0;
        while i < src.len() {
            if src[i] == b'%' {
                let hi = src.get(i + 1).and_then(|c| (*c as char).to_digit(16));
                let lo = src.get(i + 2).and_then(|c| (*c as char).to_digit(16));
                match (hi, lo) {
                    (Some(h), Some(l)) => bytes.push((h * 16 + l) as u8),
                    _ => return Err(NameError::BadEscape(i)),
                }
                i += 3;
            } else {
                bytes.push(src[i]);
                i += 1;
            }
        }
        Self::generic(bytes)
    }
}

impl fmt::Debug for Component {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut s = String::new();
        self.write_text(&mut s);
        f.write_str(&s)
    }
}

impl TryFrom<&str> for Component {
    type Error = NameError;

    fn try_from(s: &str) -> Result<Self, Self::Error> {
        Self::generic(s.as_bytes().to_vec())
    }
}

#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Name {
    components: Vec<Component>,
}

impl Name {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn from_components(components: Vec<Component>) -> Result<Self, NameError> {
        if components.len() > MAX_COMPONENTS {
            return Err(NameError::TooManyComponents(components.len()));
        }
        Ok(Self { components })
    }

    /// Parses the slash-delimited text form. The empty string and "/" both
    /// denote the empty name.
    pub fn parse(text: &str) -> Result<Self, NameError> {
        if text.is_empty() || text == "/" {
            return Ok(Self::empty());
        }
        let rest = text.strip_prefix('/').ok_or(NameError::MissingLeadingSlash)?;
        let components = rest
            .split('/')
            .map(Component::parse_text)
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_components(components)
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn get(&self, i: usize) -> Option<&Component> {
        self.components.get(i)
    }

    pub fn last(&self) -> Option<&Component> {
        self.components.last()
    }

    pub fn is_prefix_of(&self, other: &Name) -> bool {
        self.components.len() <= other.components.len()
            && self.components.iter().zip(&other.components).all(|(a, b)| a == b)
    }

    /// The first `n` components.
    pub fn prefix(&self, n: usize) -> Name {
        Name {
            components: self.components[..n.min(self.len())].to_vec(),
        }
    }

    pub fn child(&self, component: Component) -> Result<Name, NameError> {
        let mut components = self.components.clone();
        components.push(component);
        Self::from_components(components)
    }

    /// Appends a generic component given as text bytes.
    pub fn child_str(&self, component: &str) -> Result<Name, NameError> {
        self.child(Component::generic(component.as_bytes().to_vec())?)
    }

    /// The trailing digest component, if the name ends in one.
    pub fn trailing_digest(&self) -> Option<[u8; DIGEST_LEN]> {
        self.last().and_then(Component::as_digest)
    }

    /// The name with a trailing digest component stripped (unchanged otherwise).
    pub fn without_digest(&self) -> Name {
        if self.trailing_digest().is_some() {
            self.prefix(self.len() - 1)
        } else {
            self.clone()
        }
    }
}

impl fmt::Display for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.components.is_empty() {
            return f.write_str("/");
        }
        let mut s = String::new();
        for c in &self.components {
            s.push('/');
            c.write_text(&mut s);
        }
        f.write_str(&s)
    }
}

impl fmt::Debug for Name {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Name({self})")
    }
}

impl FromStr for Name {
    type Err = NameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse(s)
    }
}

impl serde::Serialize for Name {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> serde::Deserialize<'de> for Name {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let text = String::deserialize(d)?;
        Name::parse(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    fn n(s: &str) -> Name {
        Name::parse(s).unwrap()
    }

    #[test]
    fn parses_news_name() {
        let name = n("/ndn/cnn/news/2012may20");
        let parts: Vec<&[u8]> = name.components().iter().map(|c| c.as_bytes()).collect();
        assert_eq!(parts, vec![&b"ndn"[..], b"cnn", b"news", b"2012may20"]);
    }

    #[test]
    fn empty_text_is_empty_name() {
        assert!(n("").is_empty());
        assert!(n("/").is_empty());
        assert_eq!(Name::empty().to_string(), "/");
    }

    #[test]
    fn video_fragment_name() {
        let name = n("/ndn/youtube/alice/video-749.avi/137");
        assert_eq!(name.len(), 5);
        assert_eq!(name.last().unwrap().as_bytes(), b"137");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(Name::parse("/a/%zz"), Err(NameError::BadEscape(_))));
        assert!(matches!(Name::parse("/a/%4"), Err(NameError::BadEscape(_))));
        let long = format!("/{}", "x".repeat(256));
        assert!(matches!(Name::parse(&long), Err(NameError::ComponentTooLong(256))));
        assert!(Name::parse(&format!("/{}", "x".repeat(255))).is_ok());
        assert!(matches!(Name::parse("ndn"), Err(NameError::MissingLeadingSlash)));
        assert!(matches!(Name::parse("/a//b"), Err(NameError::EmptyComponent)));
        let deep = "/c".repeat(33);
        assert!(matches!(Name::parse(&deep), Err(NameError::TooManyComponents(33))));
    }

    #[test]
    fn prefix_examples() {
        assert!(n("/ndn/cnn").is_prefix_of(&n("/ndn/cnn/news")));
        assert!(!n("/ndn/cnn").is_prefix_of(&n("/ndn/cn")));
        let x = n("/ndn/cnn/news");
        assert!(x.is_prefix_of(&x));
        assert!(Name::empty().is_prefix_of(&x));
        assert!(!n("/ndn/cnn/news").is_prefix_of(&n("/ndn/cnn")));
    }

    #[test]
    fn escaping_round_trips() {
        let c = Component::generic(vec![b'a', b'/', 0x00, b'%', 0xff]).unwrap();
        let name = Name::from_components(vec![c]).unwrap();
        let text = name.to_string();
        assert_eq!(text, "/a%2F%00%25%FF");
        assert_eq!(n(&text), name);
    }

    #[test]
    fn digest_component_text() {
        let d = [0xabu8; 32];
        let name = n("/ndn/x").child(Component::digest(d)).unwrap();
        let text = name.to_string();
        assert!(text.ends_with(&format!("sha256digest={}", "ab".repeat(32))));
        let back = n(&text);
        assert_eq!(back, name);
        assert_eq!(back.trailing_digest(), Some(d));
        assert_eq!(back.without_digest(), n("/ndn/x"));
    }

    #[test]
    fn generic_lookalike_stays_generic() {
        let raw = format!("sha256digest={}", "00".repeat(32));
        let c = Component::generic(raw.as_bytes().to_vec()).unwrap();
        let name = Name::from_components(vec![c]).unwrap();
        let back = n(&name.to_string());
        assert_eq!(back, name);
        assert!(back.trailing_digest().is_none());
    }

    pub(crate) fn arb_component() -> impl Strategy<Value = Component> {
        prop_oneof![
            4 => proptest::collection::vec(any::<u8>(), 1..12)
                .prop_map(|b| Component::generic(b).unwrap()),
            1 => any::<[u8; 32]>().prop_map(Component::digest),
        ]
    }

    pub(crate) fn arb_name() -> impl Strategy<Value = Name> {
        proptest::collection::vec(arb_component(), 0..6).prop_map(|c| Name::from_components(c).unwrap())
    }

    proptest! {
        #[test]
        fn text_round_trip(name in arb_name()) {
            prop_assert_eq!(Name::parse(&name.to_string()).unwrap(), name);
        }

        #[test]
        fn prefix_is_transitive(a in arb_name(), b in arb_name(), c in arb_name()) {
            let ab = Name::from_components([a.components(), b.components()].concat()).unwrap();
            let abc = Name::from_components(
                [a.components(), b.components(), c.components()].concat(),
            );
            if let Ok(abc) = abc {
                prop_assert!(a.is_prefix_of(&ab));
                prop_assert!(ab.is_prefix_of(&abc));
                prop_assert!(a.is_prefix_of(&abc));
            }
        }
    }
}
