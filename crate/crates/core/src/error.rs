use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NameError {
    #[error("name text must start with '/'")]
    MissingLeadingSlash,
    #[error("malformed escape sequence at byte {0}")]
    BadEscape(usize),
    #[error("component of {0} bytes exceeds 255")]
    ComponentTooLong(usize),
    #[error("empty name component")]
    EmptyComponent,
    #[error("{0} components exceeds 32")]
    TooManyComponents(usize),
    #[error("digest component must be 32 bytes, got {0}")]
    BadDigestLength(usize),
    #[error("digest component is not valid hex")]
    BadDigestText,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("truncated input: needed {needed} bytes at offset {offset}")]
    Truncated { offset: usize, needed: usize },
    #[error("unknown {what} tag {tag:#04x}")]
    BadTag { what: &'static str, tag: u8 },
    #[error("{0} trailing bytes after packet")]
    Trailing(usize),
    #[error(transparent)]
    Name(#[from] NameError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CryptoError {
    #[error("malformed public key encoding")]
    MalformedKey,
    #[error("key generation failed: {0}")]
    KeyGen(String),
    #[error("signing failed: {0}")]
    Sign(String),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CoverageError {
    #[error("disjoint verification needs every v_i >= n (n = {n}, got v = {v})")]
    DenominatorBelowGroupSize { n: usize, v: f64 },
    #[error("sampling denominator must be >= 1, got {0}")]
    DenominatorBelowOne(f64),
    #[error("denominator list has {got} entries, group size is {n}")]
    LengthMismatch { n: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CatalogError {
    #[error("link graph contains a cycle through fragment {0}")]
    CyclicLinks(usize),
    #[error("link references fragment {0}, collection has {1}")]
    LinkOutOfRange(usize, usize),
    #[error("collection must contain at least one fragment")]
    EmptyCollection,
    #[error(transparent)]
    Name(#[from] NameError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TopologyError {
    #[error("duplicate node id {0:?}")]
    DuplicateNode(String),
    #[error("link {link}: {kind} link cannot have {got} endpoints")]
    EndpointCount {
        link: usize,
        kind: &'static str,
        got: usize,
    },
    #[error("link {0} lists an endpoint twice")]
    RepeatedEndpoint(usize),
    #[error("link {0} has zero bandwidth")]
    ZeroBandwidth(usize),
    #[error("link {link} references unknown node index {node}")]
    UnknownEndpoint { link: usize, node: u32 },
}
