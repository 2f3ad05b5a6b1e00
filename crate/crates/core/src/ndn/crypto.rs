//! Hashing, MACs and packet signatures.
//!
//! Signatures default to RSA-1024 with public exponent 3 and PKCS#1 v1.5
//! padding over SHA-256. Ed25519 is available as a cheaper drop-in for very
//! large scenarios. Public keys travel as self-describing byte strings so a
//! verifier never needs to know the scheme in advance.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use ed25519_dalek::{Signer as _, Verifier as _};
use hmac::{Hmac, Mac};
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rsa::traits::PublicKeyParts;
use rsa::{BigUint, Pkcs1v15Sign, RsaPrivateKey, RsaPublicKey};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CryptoError;

pub type Digest32 = [u8; 32];

const TAG_RSA: u8 = 0x01;
const TAG_ED25519: u8 = 0x02;

pub fn sha256(data: &[u8]) -> Digest32 {
    Sha256::digest(data).into()
}

pub fn hmac_sha256(key: &[u8], data: &[u8]) -> Digest32 {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(data);
    mac.finalize().into_bytes().into()
}

/// Constant-time MAC check.
pub fn hmac_sha256_verify(key: &[u8], data: &[u8], tag: &[u8]) -> bool {
    let mut mac = Hmac::<Sha256>::new_from_slice(key).expect("HMAC accepts any key length");
    mac.update(data);
    mac.verify_slice(tag).is_ok()
}

/// Least-significant 32 bits of a digest, reading it as a big-endian integer.
pub fn low32(digest: &Digest32) -> u32 {
    u32::from_be_bytes([digest[28], digest[29], digest[30], digest[31]])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignatureScheme {
    #[default]
    Rsa1024,
    Ed25519,
}

enum PrivateKey {
    Rsa(Box<RsaPrivateKey>),
    Ed25519(Box<ed25519_dalek::SigningKey>),
}

struct KeyInner {
    scheme: SignatureScheme,
    private: PrivateKey,
    public: Vec<u8>,
    digest: Digest32,
}

/// A signing key with its encoded public half and the SHA-256 digest of it.
#[derive(Clone)]
pub struct KeyPair(Arc<KeyInner>);

impl fmt::Debug for KeyPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("KeyPair")
            .field("scheme", &self.0.scheme)
            .field("digest", &hex::encode(&self.0.digest[..8]))
            .finish()
    }
}

impl PartialEq for KeyPair {
    fn eq(&self, other: &Self) -> bool {
        self.0.public == other.0.public
    }
}

impl Eq for KeyPair {}

impl KeyPair {
    /// Deterministic key generation from a 64-bit seed. Keys are memoised per
    /// (scheme, seed) for the life of the process since RSA generation is slow.
    pub fn from_seed(scheme: SignatureScheme, seed: u64) -> Result<Self, CryptoError> {
        static CACHE: OnceLock<Mutex<HashMap<(SignatureScheme, u64), KeyPair>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        if let Some(k) = cache.lock().unwrap().get(&(scheme, seed)) {
            return Ok(k.clone());
        }
        let key = Self::generate(scheme, seed)?;
        cache.lock().unwrap().insert((scheme, seed), key.clone());
        Ok(key)
    }

    fn generate(scheme: SignatureScheme, seed: u64) -> Result<Self, CryptoError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let (private, public) = match scheme {
            SignatureScheme::Rsa1024 => {
                let sk = RsaPrivateKey::new_with_exp(&mut rng, 1024, &BigUint::from(3u8))
                    .map_err(|e| CryptoError::KeyGen(e.to_string()))?;
                let public = encode_rsa_public(&sk.to_public_key());
                (PrivateKey::Rsa(Box::new(sk)), public)
            }
            SignatureScheme::Ed25519 => {
                let sk = ed25519_dalek::SigningKey::generate(&mut rng);
                let mut public = vec![TAG_ED25519];
                public.extend_from_slice(sk.verifying_key().as_bytes());
                (PrivateKey::Ed25519(Box::new(sk)), public)
            }
        };
        let digest = sha256(&public);
        Ok(Self(Arc::new(KeyInner {
            scheme,
            private,
            public,
            digest,
        })))
    }

    pub fn scheme(&self) -> SignatureScheme {
        self.0.scheme
    }

    pub fn public_key(&self) -> &[u8] {
        &self.0.public
    }

    pub fn digest(&self) -> Digest32 {
        self.0.digest
    }

    pub fn signature_len(&self) -> usize {
        match self.0.scheme {
            SignatureScheme::Rsa1024 => 128,
            SignatureScheme::Ed25519 => 64,
        }
    }

    pub fn sign(&self, message: &[u8]) -> Result<Vec<u8>, CryptoError> {
        match &self.0.private {
            PrivateKey::Rsa(sk) => sk
                .sign(Pkcs1v15Sign::new::<Sha256>(), &sha256(message))
                .map_err(|e| CryptoError::Sign(e.to_string())),
            PrivateKey::Ed25519(sk) => Ok(sk.sign(message).to_bytes().to_vec()),
        }
    }
}

fn encode_rsa_public(pk: &RsaPublicKey) -> Vec<u8> {
    let n = pk.n().to_bytes_be();
    let e = pk.e().to_bytes_be();
    let mut out = Vec::with_capacity(1 + 8 + n.len() + e.len());
    out.push(TAG_RSA);
    out.extend_from_slice(&(n.len() as u32).to_be_bytes());
    out.extend_from_slice(&n);
    out.extend_from_slice(&(e.len() as u32).to_be_bytes());
    out.extend_from_slice(&e);
    out
}

enum PublicKey {
    Rsa(RsaPublicKey),
    Ed25519(ed25519_dalek::VerifyingKey),
}

fn decode_public(bytes: &[u8]) -> Result<PublicKey, CryptoError> {
    fn take_len_prefixed<'a>(b: &'a [u8], at: &mut usize) -> Option<&'a [u8]> {
        let len = u32::from_be_bytes(b.get(*at..*at + 4)?.try_into().ok()?) as usize;
        *at += 4;
        let out = b.get(*at..*at + len)?;
        *at += len;
        Some(out)
    }
    match bytes.first() {
        Some(&TAG_RSA) => {
            let mut at = 1;
            let n = take_len_prefixed(bytes, &mut at).ok_or(CryptoError::MalformedKey)?;
            let e = take_len_prefixed(bytes, &mut at).ok_or(CryptoError::MalformedKey)?;
            if at != bytes.len() {
                return Err(CryptoError::MalformedKey);
            }
            RsaPublicKey::new(BigUint::from_bytes_be(n), BigUint::from_bytes_be(e))
                .map(PublicKey::Rsa)
                .map_err(|_| CryptoError::MalformedKey)
        }
        Some(&TAG_ED25519) => {
            let raw: [u8; 32] = bytes[1..].try_into().map_err(|_| CryptoError::MalformedKey)?;
            ed25519_dalek::VerifyingKey::from_bytes(&raw)
                .map(PublicKey::Ed25519)
                .map_err(|_| CryptoError::MalformedKey)
        }
        _ => Err(CryptoError::MalformedKey),
    }
}

/// Checks `signature` over `message` under an encoded public key.
/// A key that does not parse counts as a failed verification.
pub fn verify_bytes(public_key: &[u8], message: &[u8], signature: &[u8]) -> bool {
    match decode_public(public_key) {
        Ok(PublicKey::Rsa(pk)) => pk
            .verify(Pkcs1v15Sign::new::<Sha256>(), &sha256(message), signature)
            .is_ok(),
        Ok(PublicKey::Ed25519(vk)) => match ed25519_dalek::Signature::from_slice(signature) {
            Ok(sig) => vk.verify(message, &sig).is_ok(),
            Err(_) => false,
        },
        Err(_) => {
            log::warn!(
                "signature check against malformed public key ({} bytes)",
                public_key.len()
            );
            false
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_fips_vectors() {
        assert_eq!(
            hex::encode(sha256(b"abc")),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(
            hex::encode(sha256(b"")),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            hex::encode(sha256(b"abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")),
            "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1"
        );
    }

    #[test]
    fn hmac_rfc4231_case2() {
        let tag = hmac_sha256(b"Jefe", b"what do ya want for nothing?");
        assert_eq!(
            hex::encode(tag),
            "5bdcc146bf60754e6a042426089575c75a003f089d2739839dec58b964ec3843"
        );
        assert!(hmac_sha256_verify(b"Jefe", b"what do ya want for nothing?", &tag));
        assert!(!hmac_sha256_verify(b"Jefd", b"what do ya want for nothing?", &tag));
    }

    #[test]
    fn low32_reads_trailing_bytes() {
        let mut d = [0u8; 32];
        d[28..].copy_from_slice(&[0x01, 0x02, 0x03, 0x04]);
        assert_eq!(low32(&d), 0x0102_0304);
    }

    #[test]
    fn rsa_key_uses_exponent_three() {
        let k = KeyPair::from_seed(SignatureScheme::Rsa1024, 7).unwrap();
        let pk = match decode_public(k.public_key()).unwrap() {
            PublicKey::Rsa(pk) => pk,
            _ => unreachable!(),
        };
        assert_eq!(pk.e(), &BigUint::from(3u8));
        assert_eq!(pk.n().bits(), 1024);
        assert_eq!(k.digest(), sha256(k.public_key()));
    }

    #[test]
    fn keygen_is_deterministic_per_seed() {
        for scheme in [SignatureScheme::Rsa1024, SignatureScheme::Ed25519] {
            let a = KeyPair::generate(scheme, 11).unwrap();
            let b = KeyPair::generate(scheme, 11).unwrap();
            let c = KeyPair::generate(scheme, 12).unwrap();
            assert_eq!(a.public_key(), b.public_key());
            assert_ne!(a.public_key(), c.public_key());
        }
    }

    #[test]
    fn sign_verify_both_schemes() {
        for scheme in [SignatureScheme::Rsa1024, SignatureScheme::Ed25519] {
            let a = KeyPair::from_seed(scheme, 1).unwrap();
            let b = KeyPair::from_seed(scheme, 2).unwrap();
            let sig = a.sign(b"hello").unwrap();
            assert_eq!(sig.len(), a.signature_len());
            assert!(verify_bytes(a.public_key(), b"hello", &sig));
            assert!(!verify_bytes(b.public_key(), b"hello", &sig));
            assert!(!verify_bytes(a.public_key(), b"hellp", &sig));
        }
    }

    #[test]
    fn malformed_key_fails_verification() {
        assert!(!verify_bytes(&[], b"m", &[0; 128]));
        assert!(!verify_bytes(&[TAG_RSA, 0, 0], b"m", &[0; 128]));
        assert!(!verify_bytes(&[0x7f; 40], b"m", &[0; 128]));
    }
}
