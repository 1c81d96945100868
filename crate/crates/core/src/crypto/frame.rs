use thiserror::Error;

use super::BitStream;

/// Width of the big-endian message bit-length header.
pub const HEADER_BITS: usize = 16;

/// Largest message whose bit length fits the header.
pub const MAX_MESSAGE_BYTES: usize = ((1 << HEADER_BITS) - 1) / 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("message of {0} bytes exceeds the {MAX_MESSAGE_BYTES}-byte limit")]
    TooLong(usize),
    #[error("header declares {declared} message bits but only {available} were recovered")]
    Truncated { declared: usize, available: usize },
    #[error("header declares {0} bits, not a whole number of bytes")]
    BadLength(usize),
    #[error("padding after the message is not zero")]
    NonZeroPadding,
}

/// Header followed by the message bits.
pub fn frame(message: &[u8]) -> Result<BitStream, FrameError> {
    if message.len() > MAX_MESSAGE_BYTES {
        return Err(FrameError::TooLong(message.len()));
    }
    let len = (message.len() * 8) as u16;
    let mut out = BitStream::from_bytes(&len.to_be_bytes());
    out.extend_from_slice(BitStream::from_bytes(message).bits());
    Ok(out)
}

/// Message bit length from the header, once 16 bits are available.
pub fn declared_bits(bits: &[bool]) -> Option<usize> {
    if bits.len() < HEADER_BITS {
        return None;
    }
    Some(bits[..HEADER_BITS].iter().fold(0usize, |acc, &b| (acc << 1) | b as usize))
}

/// Framed length (header plus message) declared by `bits`.
pub fn framed_len(bits: &[bool]) -> Option<usize> {
    declared_bits(bits).map(|n| HEADER_BITS + n)
}

/// Strips the header. Bits past the declared length are padding and must be
/// zero once derandomised.
pub fn unframe(bits: &[bool]) -> Result<Vec<u8>, FrameError> {
    let declared = declared_bits(bits).ok_or(FrameError::Truncated {
        declared: HEADER_BITS,
        available: bits.len(),
    })?;
    if declared % 8 != 0 {
        return Err(FrameError::BadLength(declared));
    }
    let end = HEADER_BITS + declared;
    if bits.len() < end {
        return Err(FrameError::Truncated {
            declared,
            available: bits.len() - HEADER_BITS,
        });
    }
    if bits[end..].iter().any(|&b| b) {
        return Err(FrameError::NonZeroPadding);
    }
    Ok(BitStream::from_bits(bits[HEADER_BITS..end].to_vec())
        .to_bytes()
        .expect("whole bytes"))
}
