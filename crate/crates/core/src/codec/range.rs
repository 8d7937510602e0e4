//! Integer-range arithmetic coding with 62-bit registers.
//!
//! The classic carry-free binary formulation: the interval `[low, high]`
//! lives in `[0, 2^62)`; emitting a bit halves it, and near-miss middle
//! straddles defer output through an underflow counter. Interval updates
//! multiply the 62-bit range by 16-bit cumulative frequencies in `u128`, so
//! nothing overflows. The decoder mirrors every interval operation exactly
//! and consumes at most 61 bits past the final emitted bit, which the bit
//! reader serves as zero padding.

use super::bitio::{BitReader, BitWriter};
use super::freq::FREQ_TOTAL;
use super::CodecError;

pub const PRECISION_BITS: u32 = 62;
const TOP: u64 = 1 << PRECISION_BITS;
const HALF: u64 = TOP / 2;
const QUARTER: u64 = TOP / 4;
const THREE_QUARTERS: u64 = 3 * QUARTER;

/// How far past the emitted bits a decoder may legitimately read.
pub const DECODER_GRACE_BITS: u64 = PRECISION_BITS as u64;

#[derive(Debug)]
pub struct RangeEncoder {
    low: u64,
    high: u64,
    pending: u64,
}

impl RangeEncoder {
    pub fn new() -> Self {
        RangeEncoder {
            low: 0,
            high: TOP - 1,
            pending: 0,
        }
    }

    fn emit(&mut self, out: &mut BitWriter, bit: bool) {
        out.push(bit);
        while self.pending > 0 {
            out.push(!bit);
            self.pending -= 1;
        }
    }

    /// Narrow the interval to the symbol spanning cumulative frequencies
    /// `[cum_lo, cum_hi)` out of [`FREQ_TOTAL`], then renormalize.
    pub fn encode(&mut self, out: &mut BitWriter, cum_lo: u32, cum_hi: u32) {
        debug_assert!(cum_lo < cum_hi && cum_hi <= FREQ_TOTAL);
        let range = u128::from(self.high - self.low + 1);
        let total = u128::from(FREQ_TOTAL);
        self.high = self.low + ((range * u128::from(cum_hi)) / total - 1) as u64;
        self.low += ((range * u128::from(cum_lo)) / total) as u64;
        loop {
            if self.high < HALF {
                self.emit(out, false);
            } else if self.low >= HALF {
                self.emit(out, true);
                self.low -= HALF;
                self.high -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.pending += 1;
                self.low -= QUARTER;
                self.high -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
        }
    }

    /// Flush enough bits to pin the final interval.
    pub fn finish(mut self, out: &mut BitWriter) {
        self.pending += 1;
        let bit = self.low >= QUARTER;
        self.emit(out, bit);
    }
}

#[derive(Debug)]
pub struct RangeDecoder<'a> {
    low: u64,
    high: u64,
    value: u64,
    reader: BitReader<'a>,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(mut reader: BitReader<'a>) -> Result<Self, CodecError> {
        let mut value = 0u64;
        for _ in 0..PRECISION_BITS {
            value = (value << 1) | u64::from(reader.next_bit()?);
        }
        Ok(RangeDecoder {
            low: 0,
            high: TOP - 1,
            value,
            reader,
        })
    }

    /// The cumulative-frequency bucket the coded value points at.
    pub fn target(&self) -> u32 {
        let range = u128::from(self.high - self.low + 1);
        let off = u128::from(self.value - self.low) + 1;
        ((off * u128::from(FREQ_TOTAL) - 1) / range) as u32
    }

    /// Mirror of [`RangeEncoder::encode`] for the decoded symbol.
    pub fn advance(&mut self, cum_lo: u32, cum_hi: u32) -> Result<(), CodecError> {
        let range = u128::from(self.high - self.low + 1);
        let total = u128::from(FREQ_TOTAL);
        self.high = self.low + ((range * u128::from(cum_hi)) / total - 1) as u64;
        self.low += ((range * u128::from(cum_lo)) / total) as u64;
        loop {
            if self.high < HALF {
                // nothing to subtract
            } else if self.low >= HALF {
                self.low -= HALF;
                self.high -= HALF;
                self.value -= HALF;
            } else if self.low >= QUARTER && self.high < THREE_QUARTERS {
                self.low -= QUARTER;
                self.high -= QUARTER;
                self.value -= QUARTER;
            } else {
                break;
            }
            self.low <<= 1;
            self.high = (self.high << 1) | 1;
            self.value = (self.value << 1) | u64::from(self.reader.next_bit()?);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::super::freq::{quantize_distribution, symbol_interval, symbol_of_target};
    use super::*;

    #[test]
    fn coder_roundtrip_fixed_distribution() {
        let probs = [0.7, 0.2, 0.06, 0.04];
        let freqs = quantize_distribution(&probs);
        let symbols: Vec<usize> = (0..2000).map(|i| (i * i + i / 3) % 4).collect();

        let mut writer = BitWriter::new();
        let mut enc = RangeEncoder::new();
        for &s in &symbols {
            let (lo, hi) = symbol_interval(&freqs, s);
            enc.encode(&mut writer, lo, hi);
        }
        enc.finish(&mut writer);
        let bits = writer.into_bits();

        let reader = BitReader::new(&bits, DECODER_GRACE_BITS);
        let mut dec = RangeDecoder::new(reader).unwrap();
        for &expected in &symbols {
            let (s, lo, hi) = symbol_of_target(&freqs, dec.target());
            dec.advance(lo, hi).unwrap();
            assert_eq!(s, expected);
        }
    }
}
