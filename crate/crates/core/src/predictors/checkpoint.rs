//! Binary predictor checkpoints.
//!
//! Layout: 8-byte magic `ICPRED01`, `u16` version, `u8` kind tag, then a
//! kind-specific body. All integers little-endian; weights are raw `f64`
//! bit patterns, so identical state serializes byte-identically and the
//! SHA-256 of the bytes identifies the state.

use sha2::{Digest, Sha256};

use crate::sources::Source;

use super::ngram::NGramPredictor;
use super::oracle::OraclePredictor;
use super::tiny_lm::TinyLm;
use super::{Predictor, PredictorError, UniformPredictor};

const MAGIC: [u8; 8] = *b"ICPRED01";
const VERSION: u16 = 1;

const KIND_UNIFORM: u8 = 0;
const KIND_NGRAM: u8 = 1;
const KIND_TINYLM: u8 = 2;
const KIND_ORACLE: u8 = 3;

/// Serialize a predictor's full state.
pub fn to_checkpoint_bytes(predictor: &Predictor) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    match predictor {
        Predictor::Uniform(p) => {
            out.push(KIND_UNIFORM);
            out.extend_from_slice(&p.vocab_size().to_le_bytes());
        }
        Predictor::NGram(p) => {
            out.push(KIND_NGRAM);
            out.extend_from_slice(&p.vocab_size().to_le_bytes());
            out.extend_from_slice(&(p.order() as u64).to_le_bytes());
            out.extend_from_slice(&p.alpha().to_bits().to_le_bytes());
            out.push(p.count_width());
            let counts = p.counts();
            out.extend_from_slice(&(counts.len() as u64).to_le_bytes());
            for &c in counts {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        Predictor::TinyLm(p) => {
            out.push(KIND_TINYLM);
            out.extend_from_slice(&p.vocab_size().to_le_bytes());
            out.extend_from_slice(&(p.context_len() as u32).to_le_bytes());
            out.extend_from_slice(&(p.hidden() as u32).to_le_bytes());
            out.push(p.bit_width());
            out.extend_from_slice(&p.seed().to_le_bytes());
            out.extend_from_slice(&p.learning_rate().to_bits().to_le_bytes());
            for i in 0..p.flat_len() {
                out.extend_from_slice(&p.flat_get(i).to_bits().to_le_bytes());
            }
        }
        Predictor::Oracle(p) => {
            out.push(KIND_ORACLE);
            let json = p.source().to_json().into_bytes();
            out.extend_from_slice(&(json.len() as u64).to_le_bytes());
            out.extend_from_slice(&json);
        }
    }
    out
}

/// SHA-256 of a predictor's checkpoint bytes.
pub fn checkpoint_hash(predictor: &Predictor) -> [u8; 32] {
    let bytes = to_checkpoint_bytes(predictor);
    let digest = Sha256::digest(&bytes);
    let mut out = [0u8; 32];
    out.copy_from_slice(&digest);
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], PredictorError> {
        if self.pos + n > self.data.len() {
            return Err(PredictorError::Checkpoint(format!(
                "truncated checkpoint: wanted {n} bytes at offset {}",
                self.pos
            )));
        }
        let slice = &self.data[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8, PredictorError> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16, PredictorError> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32, PredictorError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64, PredictorError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, PredictorError> {
        Ok(f64::from_bits(self.u64()?))
    }
}

/// Rebuild a predictor from checkpoint bytes.
pub fn from_checkpoint_bytes(bytes: &[u8]) -> Result<Predictor, PredictorError> {
    let mut cur = Cursor {
        data: bytes,
        pos: 0,
    };
    let magic = cur.take(8)?;
    if magic != MAGIC {
        return Err(PredictorError::Checkpoint(format!(
            "bad magic {magic:?}, expected {MAGIC:?}"
        )));
    }
    let version = cur.u16()?;
    if version != VERSION {
        return Err(PredictorError::Checkpoint(format!(
            "unsupported checkpoint version {version}"
        )));
    }
    match cur.u8()? {
        KIND_UNIFORM => {
            let vocab = cur.u32()?;
            Ok(Predictor::Uniform(UniformPredictor::new(vocab)?))
        }
        KIND_NGRAM => {
            let vocab = cur.u32()?;
            let order = cur.u64()? as usize;
            let alpha = cur.f64()?;
            let width = cur.u8()?;
            let cells = cur.u64()? as usize;
            let mut counts = Vec::with_capacity(cells);
            for _ in 0..cells {
                counts.push(cur.u32()?);
            }
            Ok(Predictor::NGram(NGramPredictor::from_parts(
                vocab, order, alpha, width, counts,
            )?))
        }
        KIND_TINYLM => {
            let vocab = cur.u32()?;
            let context_len = cur.u32()? as usize;
            let hidden = cur.u32()? as usize;
            let width = cur.u8()?;
            let seed = cur.u64()?;
            let lr = cur.f64()?;
            let mut lm = TinyLm::new(vocab, context_len, hidden, width, seed, lr)?;
            for i in 0..lm.flat_len() {
                let w = cur.f64()?;
                lm.flat_set(i, w);
            }
            Ok(Predictor::TinyLm(lm))
        }
        KIND_ORACLE => {
            let len = cur.u64()? as usize;
            let json = std::str::from_utf8(cur.take(len)?)
                .map_err(|e| PredictorError::Checkpoint(format!("oracle source utf8: {e}")))?;
            let source = Source::from_json(json)?;
            Ok(Predictor::Oracle(OraclePredictor::new(source)?))
        }
        other => Err(PredictorError::Checkpoint(format!(
            "unknown predictor kind tag {other}"
        ))),
    }
}
