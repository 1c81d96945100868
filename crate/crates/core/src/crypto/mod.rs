//! Keyed pseudorandom layer: the framed message is XORed with a ChaCha20
//! keystream so the sampler sees uniform-looking bits.

mod bits;
mod frame;

use std::fmt;

use chacha20::cipher::{KeyIvInit, StreamCipher};
use chacha20::ChaCha20;
use sha2::{Digest, Sha256};
use thiserror::Error;

pub use bits::{BitSource, BitStream, ParseBitsError};
pub use frame::{declared_bits, frame, framed_len, unframe, FrameError, HEADER_BITS, MAX_MESSAGE_BYTES};

pub const MIN_KEY_BYTES: usize = 16;
pub const NONCE_BYTES: usize = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key must be at least {MIN_KEY_BYTES} bytes, got {0}")]
    TooShort(usize),
    #[error("nonce must be {NONCE_BYTES} bytes, got {0}")]
    NonceLength(usize),
    #[error("{field} is not valid hex")]
    Hex { field: &'static str },
}

/// Secret key plus per-message nonce. `Debug` never prints the key.
#[derive(Clone, PartialEq, Eq)]
pub struct StegoKey {
    key: Vec<u8>,
    nonce: [u8; NONCE_BYTES],
}

impl fmt::Debug for StegoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StegoKey")
            .field("key", &"<redacted>")
            .field("nonce", &hex::encode(self.nonce))
            .finish()
    }
}

impl StegoKey {
    pub fn new(key: Vec<u8>, nonce: [u8; NONCE_BYTES]) -> Result<Self, KeyError> {
        if key.len() < MIN_KEY_BYTES {
            return Err(KeyError::TooShort(key.len()));
        }
        Ok(StegoKey { key, nonce })
    }

    pub fn from_hex(key_hex: &str, nonce_hex: &str) -> Result<Self, KeyError> {
        let key = hex::decode(key_hex.trim()).map_err(|_| KeyError::Hex { field: "key" })?;
        let nonce = parse_nonce(nonce_hex)?;
        Self::new(key, nonce)
    }

    pub fn nonce(&self) -> &[u8; NONCE_BYTES] {
        &self.nonce
    }

    pub fn nonce_hex(&self) -> String {
        hex::encode(self.nonce)
    }

    /// Deterministic per-message nonce keyed by the secret key, so equal
    /// messages under one seed repeat but outsiders cannot test guesses.
    pub fn derive_nonce(&self, seed: u64, message: &[u8]) -> [u8; NONCE_BYTES] {
        let mut h = Sha256::new();
        h.update(b"semstego nonce");
        h.update((self.key.len() as u64).to_be_bytes());
        h.update(&self.key);
        h.update(seed.to_be_bytes());
        h.update(message);
        let digest = h.finalize();
        let mut nonce = [0u8; NONCE_BYTES];
        nonce.copy_from_slice(&digest[..NONCE_BYTES]);
        nonce
    }

    /// Same key, different nonce.
    pub fn with_nonce(&self, nonce: [u8; NONCE_BYTES]) -> StegoKey {
        StegoKey {
            key: self.key.clone(),
            nonce,
        }
    }

    /// Key for sentence `index` of a message: the nonce is replaced by
    /// `SHA-256("sentence" ‖ nonce ‖ index)[..12]`.
    pub fn for_sentence(&self, index: u64) -> StegoKey {
        let digest = Sha256::new()
            .chain_update(b"sentence")
            .chain_update(self.nonce)
            .chain_update(index.to_be_bytes())
            .finalize();
        let mut nonce = [0u8; NONCE_BYTES];
        nonce.copy_from_slice(&digest[..NONCE_BYTES]);
        self.with_nonce(nonce)
    }

    fn cipher(&self) -> ChaCha20 {
        let key: [u8; 32] = Sha256::digest(&self.key).into();
        ChaCha20::new(&key.into(), &self.nonce.into())
    }
}

pub fn random_nonce() -> [u8; NONCE_BYTES] {
    rand::random()
}

pub fn parse_nonce(nonce_hex: &str) -> Result<[u8; NONCE_BYTES], KeyError> {
    let bytes = hex::decode(nonce_hex.trim()).map_err(|_| KeyError::Hex { field: "nonce" })?;
    bytes
        .as_slice()
        .try_into()
        .map_err(|_| KeyError::NonceLength(bytes.len()))
}

/// Lazily expanded keystream bits, most significant bit of each byte first.
pub struct Keystream {
    cipher: ChaCha20,
    bytes: Vec<u8>,
}

impl Keystream {
    pub fn new(key: &StegoKey) -> Self {
        Keystream {
            cipher: key.cipher(),
            bytes: Vec::new(),
        }
    }

    pub fn bit(&mut self, index: usize) -> bool {
        let byte = index / 8;
        if byte >= self.bytes.len() {
            let start = self.bytes.len();
            let end = (byte + 1).next_multiple_of(64);
            self.bytes.resize(end, 0);
            self.cipher.apply_keystream(&mut self.bytes[start..]);
        }
        (self.bytes[byte] >> (7 - index % 8)) & 1 == 1
    }

    pub fn take(&mut self, n: usize) -> BitStream {
        BitStream::from_bits((0..n).map(|i| self.bit(i)).collect())
    }
}

/// The first `needed` keystream bits for `key`.
pub fn extend_keystream(key: &StegoKey, needed: usize) -> BitStream {
    Keystream::new(key).take(needed)
}

/// `cipher XOR keystream`, same length.
pub fn randomize(cipher: &BitStream, key: &StegoKey) -> BitStream {
    let mut ks = Keystream::new(key);
    BitStream::from_bits(cipher.bits().iter().enumerate().map(|(i, &b)| b ^ ks.bit(i)).collect())
}

/// Inverse of [`randomize`] under the same key and nonce.
pub fn derandomize(random_bits: &BitStream, key: &StegoKey) -> BitStream {
    randomize(random_bits, key)
}
