//! Token streams and their on-disk representation.
//!
//! File layout: 8-byte magic `ICTOKEN1`, `u32` little-endian vocab size,
//! `u64` little-endian token count, then each token as a little-endian
//! unsigned integer of the minimal width (1, 2 or 4 bytes) that can hold
//! `vocab_size - 1`.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::SourceError;

const STREAM_MAGIC: [u8; 8] = *b"ICTOKEN1";

/// A finite token sequence over a fixed vocabulary; the dataset `D`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "StreamDoc", into = "StreamDoc")]
pub struct TokenStream {
    vocab_size: u32,
    tokens: Vec<u32>,
}

#[derive(Serialize, Deserialize)]
struct StreamDoc {
    vocab_size: u32,
    tokens: Vec<u32>,
}

impl TryFrom<StreamDoc> for TokenStream {
    type Error = SourceError;
    fn try_from(doc: StreamDoc) -> Result<Self, SourceError> {
        TokenStream::new(doc.vocab_size, doc.tokens)
    }
}

impl From<TokenStream> for StreamDoc {
    fn from(s: TokenStream) -> Self {
        StreamDoc {
            vocab_size: s.vocab_size,
            tokens: s.tokens,
        }
    }
}

impl TokenStream {
    /// Build a stream, checking every token is below `vocab_size`.
    pub fn new(vocab_size: u32, tokens: Vec<u32>) -> Result<Self, SourceError> {
        if vocab_size == 0 {
            return Err(SourceError::VocabTooSmall(vocab_size));
        }
        for &t in &tokens {
            if t >= vocab_size {
                return Err(SourceError::TokenOutOfRange {
                    token: t,
                    vocab_size,
                });
            }
        }
        Ok(TokenStream { vocab_size, tokens })
    }

    /// An empty stream over the given vocabulary.
    pub fn empty(vocab_size: u32) -> Result<Self, SourceError> {
        TokenStream::new(vocab_size, Vec::new())
    }

    pub fn vocab_size(&self) -> u32 {
        self.vocab_size
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    /// Minimal token byte width for this vocabulary.
    fn token_width(vocab_size: u32) -> u8 {
        let max = vocab_size - 1;
        if max < 1 << 8 {
            1
        } else if max < 1 << 16 {
            2
        } else {
            4
        }
    }

    /// Serialize in the documented binary layout.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<(), SourceError> {
        w.write_all(&STREAM_MAGIC)?;
        w.write_all(&self.vocab_size.to_le_bytes())?;
        w.write_all(&(self.tokens.len() as u64).to_le_bytes())?;
        match Self::token_width(self.vocab_size) {
            1 => {
                for &t in &self.tokens {
                    w.write_all(&[t as u8])?;
                }
            }
            2 => {
                for &t in &self.tokens {
                    w.write_all(&(t as u16).to_le_bytes())?;
                }
            }
            _ => {
                for &t in &self.tokens {
                    w.write_all(&t.to_le_bytes())?;
                }
            }
        }
        Ok(())
    }

    /// Read a stream back from the documented binary layout.
    pub fn read_from<R: Read>(mut r: R) -> Result<Self, SourceError> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if magic != STREAM_MAGIC {
            return Err(SourceError::BadMagic {
                expected: STREAM_MAGIC,
                got: magic,
            });
        }
        let mut buf4 = [0u8; 4];
        r.read_exact(&mut buf4)?;
        let vocab_size = u32::from_le_bytes(buf4);
        if vocab_size == 0 {
            return Err(SourceError::VocabTooSmall(vocab_size));
        }
        let mut buf8 = [0u8; 8];
        r.read_exact(&mut buf8)?;
        let len = u64::from_le_bytes(buf8) as usize;
        let width = Self::token_width(vocab_size);
        let mut tokens = Vec::with_capacity(len);
        match width {
            1 => {
                let mut b = [0u8; 1];
                for _ in 0..len {
                    r.read_exact(&mut b)?;
                    tokens.push(u32::from(b[0]));
                }
            }
            2 => {
                let mut b = [0u8; 2];
                for _ in 0..len {
                    r.read_exact(&mut b)?;
                    tokens.push(u32::from(u16::from_le_bytes(b)));
                }
            }
            _ => {
                for _ in 0..len {
                    r.read_exact(&mut buf4)?;
                    tokens.push(u32::from_le_bytes(buf4));
                }
            }
        }
        TokenStream::new(vocab_size, tokens)
    }
}
