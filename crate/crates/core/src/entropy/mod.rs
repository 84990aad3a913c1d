//! Adaptive range coding over byte alphabets.
//!
//! [`encode_symbols`] / [`decode_symbols`] drive a [`ProbabilityModel`]
//! through a whole sequence; codecs with their own context logic use
//! [`RangeEncoder`] and [`RangeDecoder`] directly.

mod model;
mod range_coder;

pub use model::{ContextRule, FrequencyTable, ProbabilityModel, ALPHABET, INCREMENT, RESCALE_LIMIT};
pub use range_coder::{RangeDecoder, RangeEncoder, MAX_TOTAL};

use crate::error::Result;

/// Coded bytes. `bit_len` is the significant length; the coder always ends on
/// a byte boundary, so it equals `8 × bytes.len()` for its own output.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Bitstream {
    bytes: Vec<u8>,
    bit_len: usize,
}

impl Bitstream {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        let bit_len = bytes.len() * 8;
        Self { bytes, bit_len }
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    pub fn into_bytes(self) -> Vec<u8> {
        self.bytes
    }

    pub fn bit_len(&self) -> usize {
        self.bit_len
    }
}

pub fn encode_symbols(symbols: &[u8], model: &mut ProbabilityModel) -> Bitstream {
    let mut enc = RangeEncoder::new();
    for (i, &s) in symbols.iter().enumerate() {
        enc.encode_symbol(model.table_for(&symbols[..i]), s);
    }
    enc.finish()
}

/// Decodes exactly `n` symbols. The stream must be consumed completely.
pub fn decode_symbols(bits: &Bitstream, n: usize, model: &mut ProbabilityModel) -> Result<Vec<u8>> {
    let mut dec = RangeDecoder::new(bits.bytes())?;
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let s = dec.decode_symbol(model.table_for(&out))?;
        out.push(s);
    }
    dec.finish()?;
    Ok(out)
}

/// Ideal adaptive code length `Σ −log2 p(xᵢ | x₍<ᵢ₎)` in bits.
pub fn cross_entropy_bits(symbols: &[u8], model: &mut ProbabilityModel) -> f64 {
    let mut bits = 0.0;
    for (i, &s) in symbols.iter().enumerate() {
        let table = model.table_for(&symbols[..i]);
        bits += table.cost(s);
        table.update(s);
    }
    bits
}
