//! On-disk container for a coded stream.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! offset  size  field
//! 0       8     magic "ICCODEC1"
//! 8       2     u16 container version (currently 1)
//! 10      1     u8 mode flag: 0 = frozen, 1 = online
//! 11      32    SHA-256 of the initial predictor checkpoint
//! 43      8     u64 token_count
//! 51      4     u32 vocab_size
//! 55      8     u64 code bit length
//! 63      ...   code bits, packed MSB-first, zero-padded to a byte
//! ```

use std::io::{Read, Write};

use super::bitio::CodeBits;
use super::CodecError;
use crate::predictors::UpdateMode;

const MAGIC: [u8; 8] = *b"ICCODEC1";

/// Current container format version.
pub const CONTAINER_VERSION: u16 = 1;

/// A coded stream plus the metadata needed to decode it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedStream {
    pub mode: UpdateMode,
    /// SHA-256 of the encoder's initial predictor checkpoint; the decoder
    /// must present a predictor with the same hash.
    pub checkpoint_hash: [u8; 32],
    pub token_count: u64,
    pub vocab_size: u32,
    pub bits: CodeBits,
}

/// Write the container to `w`.
pub fn write_container<W: Write>(mut w: W, enc: &EncodedStream) -> Result<(), CodecError> {
    w.write_all(&MAGIC)?;
    w.write_all(&CONTAINER_VERSION.to_le_bytes())?;
    w.write_all(&[match enc.mode {
        UpdateMode::Frozen => 0u8,
        UpdateMode::Online => 1u8,
    }])?;
    w.write_all(&enc.checkpoint_hash)?;
    w.write_all(&enc.token_count.to_le_bytes())?;
    w.write_all(&enc.vocab_size.to_le_bytes())?;
    w.write_all(&enc.bits.bit_len.to_le_bytes())?;
    w.write_all(&enc.bits.bytes)?;
    Ok(())
}

/// Read a container from `r`.
pub fn read_container<R: Read>(mut r: R) -> Result<EncodedStream, CodecError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if magic != MAGIC {
        return Err(CodecError::BadMagic(magic));
    }
    let mut b2 = [0u8; 2];
    r.read_exact(&mut b2)?;
    let version = u16::from_le_bytes(b2);
    if version != CONTAINER_VERSION {
        return Err(CodecError::BadVersion(version));
    }
    let mut b1 = [0u8; 1];
    r.read_exact(&mut b1)?;
    let mode = match b1[0] {
        0 => UpdateMode::Frozen,
        1 => UpdateMode::Online,
        other => {
            return Err(CodecError::BadVersion(u16::from(other)));
        }
    };
    let mut checkpoint_hash = [0u8; 32];
    r.read_exact(&mut checkpoint_hash)?;
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let token_count = u64::from_le_bytes(b8);
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let vocab_size = u32::from_le_bytes(b4);
    r.read_exact(&mut b8)?;
    let bit_len = u64::from_le_bytes(b8);
    let byte_len = bit_len.div_ceil(8) as usize;
    let mut bytes = vec![0u8; byte_len];
    r.read_exact(&mut bytes)?;
    Ok(EncodedStream {
        mode,
        checkpoint_hash,
        token_count,
        vocab_size,
        bits: CodeBits { bytes, bit_len },
    })
}
