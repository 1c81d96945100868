use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

/// Ordered bits with a cursor marking the consumed prefix.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitStream {
    bits: Vec<bool>,
    cursor: usize,
}

impl BitStream {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_bits(bits: Vec<bool>) -> Self {
        BitStream { bits, cursor: 0 }
    }

    /// Most significant bit of each byte first.
    pub fn from_bytes(bytes: &[u8]) -> Self {
        let bits = bytes
            .iter()
            .flat_map(|&b| (0..8).rev().map(move |i| (b >> i) & 1 == 1))
            .collect();
        Self::from_bits(bits)
    }

    /// Packs whole bytes; `None` when the length is not a multiple of eight.
    pub fn to_bytes(&self) -> Option<Vec<u8>> {
        if !self.bits.len().is_multiple_of(8) {
            return None;
        }
        Some(
            self.bits
                .chunks(8)
                .map(|c| c.iter().fold(0u8, |acc, &b| (acc << 1) | b as u8))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }

    /// Bits not yet consumed.
    pub fn remaining(&self) -> &[bool] {
        &self.bits[self.cursor..]
    }

    /// Marks `n` more bits consumed, clamped to the end.
    pub fn advance(&mut self, n: usize) {
        self.cursor = (self.cursor + n).min(self.bits.len());
    }

    pub fn push(&mut self, bit: bool) {
        self.bits.push(bit);
    }

    pub fn extend_from_slice(&mut self, bits: &[bool]) {
        self.bits.extend_from_slice(bits);
    }

    /// First `n` bits (all of them if shorter), cursor reset.
    pub fn prefix(&self, n: usize) -> BitStream {
        Self::from_bits(self.bits[..n.min(self.bits.len())].to_vec())
    }

    /// Dyadic value `Σ b_i 2^-i` of the whole stream.
    pub fn value(&self) -> BigRational {
        let mut num = BigInt::zero();
        for &b in &self.bits {
            num <<= 1;
            if b {
                num += 1;
            }
        }
        BigRational::new(num, BigInt::one() << self.bits.len())
    }
}

impl From<Vec<bool>> for BitStream {
    fn from(bits: Vec<bool>) -> Self {
        Self::from_bits(bits)
    }
}

impl fmt::Display for BitStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid bit character {0:?}")]
pub struct ParseBitsError(pub char);

impl FromStr for BitStream {
    type Err = ParseBitsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ParseBitsError(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self::from_bits)
    }
}

/// Random-access bit supply for the sampler. Reads past the end of the
/// underlying data are the caller's choice of padding.
pub trait BitSource {
    fn bit(&mut self, index: usize) -> bool;
}

/// The unconsumed bits of a stream, zero-padded.
impl BitSource for BitStream {
    fn bit(&mut self, index: usize) -> bool {
        self.bits.get(self.cursor + index).copied().unwrap_or(false)
    }
}
