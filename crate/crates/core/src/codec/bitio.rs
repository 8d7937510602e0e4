//! MSB-first bit I/O over byte buffers.

use super::CodecError;

/// A growable MSB-first bit sink.
#[derive(Debug, Default, Clone)]
pub struct BitWriter {
    bytes: Vec<u8>,
    bit_len: u64,
}

impl BitWriter {
    pub fn new() -> Self {
        BitWriter::default()
    }

    pub fn push(&mut self, bit: bool) {
        let offset = (self.bit_len % 8) as u8;
        if offset == 0 {
            self.bytes.push(0);
        }
        if bit {
            *self.bytes.last_mut().expect("byte present") |= 0x80 >> offset;
        }
        self.bit_len += 1;
    }

    pub fn bit_len(&self) -> u64 {
        self.bit_len
    }

    pub fn into_bits(self) -> CodeBits {
        CodeBits {
            bytes: self.bytes,
            bit_len: self.bit_len,
        }
    }
}

/// A finished bit sequence (packed MSB-first, zero padding in the last
/// byte).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodeBits {
    pub bytes: Vec<u8>,
    pub bit_len: u64,
}

impl CodeBits {
    pub fn empty() -> Self {
        CodeBits {
            bytes: Vec::new(),
            bit_len: 0,
        }
    }
}

/// Reads a bit sequence MSB-first, then serves a bounded tail of virtual
/// zero bits.
///
/// A range decoder legitimately looks up to one register width past the
/// final emitted bit; reads beyond `bit_len + grace` mean the sequence was
/// truncated.
#[derive(Debug)]
pub struct BitReader<'a> {
    bits: &'a CodeBits,
    pos: u64,
    grace: u64,
}

impl<'a> BitReader<'a> {
    pub fn new(bits: &'a CodeBits, grace: u64) -> Self {
        BitReader {
            bits,
            pos: 0,
            grace,
        }
    }

    pub fn next_bit(&mut self) -> Result<bool, CodecError> {
        if self.pos < self.bits.bit_len {
            let byte = self.bits.bytes[(self.pos / 8) as usize];
            let bit = (byte >> (7 - (self.pos % 8) as u8)) & 1 == 1;
            self.pos += 1;
            Ok(bit)
        } else if self.pos < self.bits.bit_len + self.grace {
            self.pos += 1;
            Ok(false)
        } else {
            Err(CodecError::TruncatedBitstream {
                bit_len: self.bits.bit_len,
            })
        }
    }
}
