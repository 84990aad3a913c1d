//! Carry-less 32-bit range coder (Subbotin style), byte-wise output.
//!
//! Frequencies are integers with totals of at most 2^16. All state is integer
//! so streams are identical on every platform.

use super::model::FrequencyTable;
use super::Bitstream;
use crate::error::{Error, Result};

const TOP: u32 = 1 << 24;
const BOT: u32 = 1 << 16;

/// Largest frequency total the coder accepts.
pub const MAX_TOTAL: u32 = BOT;

#[derive(Debug, Clone)]
pub struct RangeEncoder {
    low: u32,
    range: u32,
    out: Vec<u8>,
}

impl Default for RangeEncoder {
    fn default() -> Self {
        Self::new()
    }
}

impl RangeEncoder {
    pub fn new() -> Self {
        Self {
            low: 0,
            range: u32::MAX,
            out: Vec::new(),
        }
    }

    /// Narrows the interval to `[cum, cum + freq)` out of `total`.
    #[inline]
    pub fn encode(&mut self, cum: u32, freq: u32, total: u32) {
        debug_assert!(freq > 0 && cum + freq <= total && total <= MAX_TOTAL);
        self.range /= total;
        self.low = self.low.wrapping_add(cum * self.range);
        self.range *= freq;
        self.normalize();
    }

    #[inline]
    fn normalize(&mut self) {
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    break;
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            self.out.push((self.low >> 24) as u8);
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    /// Codes `symbol` with `table` and then adapts the table.
    #[inline]
    pub fn encode_symbol(&mut self, table: &mut FrequencyTable, symbol: u8) {
        let (cum, freq) = table.interval(symbol);
        self.encode(cum, freq, table.total());
        table.update(symbol);
    }

    /// Codes the low `nbits` of `value` with equal probabilities.
    pub fn encode_bits(&mut self, value: u32, mut nbits: u32) {
        while nbits > 0 {
            let n = nbits.min(16);
            nbits -= n;
            let chunk = (value >> nbits) & ((1 << n) - 1);
            self.encode(chunk, 1, 1 << n);
        }
    }

    /// Flushes the four pending bytes of `low`.
    pub fn finish(mut self) -> Bitstream {
        for _ in 0..4 {
            self.out.push((self.low >> 24) as u8);
            self.low <<= 8;
        }
        Bitstream::from_bytes(self.out)
    }

    pub fn bytes_so_far(&self) -> usize {
        self.out.len()
    }
}

#[derive(Debug, Clone)]
pub struct RangeDecoder<'a> {
    low: u32,
    range: u32,
    code: u32,
    data: &'a [u8],
    pos: usize,
}

impl<'a> RangeDecoder<'a> {
    pub fn new(data: &'a [u8]) -> Result<Self> {
        if data.len() < 4 {
            return Err(Error::TruncatedBitstream);
        }
        let code = u32::from_be_bytes([data[0], data[1], data[2], data[3]]);
        Ok(Self {
            low: 0,
            range: u32::MAX,
            code,
            data,
            pos: 4,
        })
    }

    /// Scaled position of the code value inside the current interval.
    #[inline]
    pub fn peek(&mut self, total: u32) -> u32 {
        self.range /= total;
        (self.code.wrapping_sub(self.low) / self.range).min(total - 1)
    }

    /// Consumes the interval chosen after [`peek`](Self::peek).
    #[inline]
    pub fn consume(&mut self, cum: u32, freq: u32) -> Result<()> {
        self.low = self.low.wrapping_add(cum * self.range);
        self.range *= freq;
        loop {
            if (self.low ^ self.low.wrapping_add(self.range)) >= TOP {
                if self.range >= BOT {
                    return Ok(());
                }
                self.range = self.low.wrapping_neg() & (BOT - 1);
            }
            let byte = *self.data.get(self.pos).ok_or(Error::TruncatedBitstream)?;
            self.pos += 1;
            self.code = (self.code << 8) | byte as u32;
            self.low <<= 8;
            self.range <<= 8;
        }
    }

    #[inline]
    pub fn decode_symbol(&mut self, table: &mut FrequencyTable) -> Result<u8> {
        let target = self.peek(table.total());
        let symbol = table.find(target);
        let (cum, freq) = table.interval(symbol);
        self.consume(cum, freq)?;
        table.update(symbol);
        Ok(symbol)
    }

    pub fn decode_bits(&mut self, mut nbits: u32) -> Result<u32> {
        let mut value = 0u32;
        while nbits > 0 {
            let n = nbits.min(16);
            nbits -= n;
            let chunk = self.peek(1 << n);
            self.consume(chunk, 1)?;
            value = (value << n) | chunk;
        }
        Ok(value)
    }

    /// Succeeds only when the whole stream has been consumed.
    pub fn finish(self) -> Result<()> {
        if self.pos == self.data.len() {
            Ok(())
        } else {
            Err(Error::CountMismatch)
        }
    }
}
