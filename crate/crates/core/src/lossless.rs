//! `taco-ll-lite`: predictive lossless coding of the patch token stream.
//!
//! Each symbol is predicted from its causal neighbours inside the same
//! 16×16 patch (neighbours outside the patch read as zero), the residual
//! `(x − prediction) mod 256` is selected into a context by the local
//! gradient `|left − above|` (patch top row, left column and corner have
//! their own contexts), and range-coded with adaptive tables.
//! Padding symbols are known zeros and are not coded.

use std::fmt;
use std::str::FromStr;

use crate::container::{CodecId, Container, Metadata, LOSSLESS_QUALITY};
use crate::entropy::{Bitstream, FrequencyTable, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::frame::{TactileFrame, CHANNELS};
use crate::tokenizer::{self, patch_index, ChannelOrder, PatchGeometry, TokenStream, PATCH, PATCH_SYMBOLS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Predictor {
    Zero,
    Left,
    #[default]
    MedianEdge,
}

impl Predictor {
    #[inline]
    fn predict(self, left: u8, above: u8, above_left: u8) -> u8 {
        match self {
            Predictor::Zero => 0,
            Predictor::Left => left,
            Predictor::MedianEdge => {
                let (a, b, c) = (left, above, above_left);
                if c >= a.max(b) {
                    a.min(b)
                } else if c <= a.min(b) {
                    a.max(b)
                } else {
                    // c lies strictly between a and b, so a + b − c is in range
                    (a as i16 + b as i16 - c as i16) as u8
                }
            }
        }
    }
}

impl fmt::Display for Predictor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Predictor::Zero => "zero",
            Predictor::Left => "left",
            Predictor::MedianEdge => "median-edge",
        })
    }
}

impl FromStr for Predictor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Predictor::Zero),
            "left" => Ok(Predictor::Left),
            "median-edge" | "med" => Ok(Predictor::MedianEdge),
            _ => Err(Error::InvalidArgument(format!("unknown predictor {s}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LosslessConfig {
    pub predictor: Predictor,
    pub context_buckets: usize,
}

impl Default for LosslessConfig {
    fn default() -> Self {
        Self {
            predictor: Predictor::MedianEdge,
            context_buckets: 8,
        }
    }
}

impl LosslessConfig {
    pub fn validate(&self) -> Result<()> {
        if self.context_buckets == 0 || self.context_buckets > 64 {
            return Err(Error::InvalidArgument(format!(
                "context_buckets must be in 1..=64, got {}",
                self.context_buckets
            )));
        }
        Ok(())
    }
}

/// Geometric activity bins: 0 | 1 | 2–3 | 4–7 | … capped at `buckets − 1`.
#[inline]
pub fn gradient_bucket(gradient: u8, buckets: usize) -> usize {
    let b = if gradient == 0 {
        0
    } else {
        1 + gradient.ilog2() as usize
    };
    b.min(buckets - 1)
}

/// Prediction and context for one symbol of a (partially decoded) patch.
#[inline]
fn model_inputs(patch: &[u8], row: usize, col: usize, ch: usize, cfg: &LosslessConfig) -> (u8, usize) {
    let left = if col > 0 { patch[patch_index(row, col - 1, ch)] } else { 0 };
    let above = if row > 0 { patch[patch_index(row - 1, col, ch)] } else { 0 };
    let above_left = if row > 0 && col > 0 {
        patch[patch_index(row - 1, col - 1, ch)]
    } else {
        0
    };
    let pred = cfg.predictor.predict(left, above, above_left);
    // Interior symbols use the gradient buckets; the patch's top row, left
    // column and corner each get one extra table.
    let ctx = match (row > 0, col > 0) {
        (true, true) => gradient_bucket(left.abs_diff(above), cfg.context_buckets),
        (false, true) => cfg.context_buckets,
        (true, false) => cfg.context_buckets + 1,
        (false, false) => cfg.context_buckets + 2,
    };
    (pred, ch * contexts_per_channel(cfg) + ctx)
}

fn contexts_per_channel(cfg: &LosslessConfig) -> usize {
    cfg.context_buckets + 3
}


fn encode_tokens(tokens: &TokenStream, cfg: &LosslessConfig) -> Bitstream {
    let g = tokens.geometry;
    let mut tables = vec![FrequencyTable::adaptive(); CHANNELS * contexts_per_channel(cfg)];
    let mut enc = RangeEncoder::new();
    for p in 0..g.patches() {
        let patch = tokens.patch(p);
        for row in 0..PATCH {
            for col in 0..PATCH {
                if !g.is_content(p, row, col) {
                    continue;
                }
                for ch in 0..CHANNELS {
                    let (pred, ctx) = model_inputs(patch, row, col, ch, cfg);
                    let residual = patch[patch_index(row, col, ch)].wrapping_sub(pred);
                    enc.encode_symbol(&mut tables[ctx], residual);
                }
            }
        }
    }
    enc.finish()
}

fn decode_tokens(payload: &[u8], g: PatchGeometry, order: ChannelOrder, cfg: &LosslessConfig) -> Result<TokenStream> {
    let mut tables = vec![FrequencyTable::adaptive(); CHANNELS * contexts_per_channel(cfg)];
    let mut dec = RangeDecoder::new(payload)?;
    let mut symbols = vec![0u8; g.symbol_count()];
    for (p, patch) in symbols.chunks_exact_mut(PATCH_SYMBOLS).enumerate() {
        for row in 0..PATCH {
            for col in 0..PATCH {
                if !g.is_content(p, row, col) {
                    continue;
                }
                for ch in 0..CHANNELS {
                    let (pred, ctx) = model_inputs(patch, row, col, ch, cfg);
                    let residual = dec.decode_symbol(&mut tables[ctx])?;
                    patch[patch_index(row, col, ch)] = residual.wrapping_add(pred);
                }
            }
        }
    }
    dec.finish().map_err(|_| Error::CorruptPayload)?;
    Ok(TokenStream {
        symbols,
        geometry: g,
        channel_order: order,
    })
}

/// Encodes `frame` into a complete `TACB` container.
pub fn encode_lossless(frame: &TactileFrame, cfg: &LosslessConfig) -> Result<Bitstream> {
    cfg.validate()?;
    let tokens = tokenizer::tokenize(frame);
    let payload = encode_tokens(&tokens, cfg);
    let container = Container {
        codec: CodecId::TacoLlLite,
        sensor_kind: frame.sensor_kind(),
        width: frame.width(),
        height: frame.height(),
        quality: LOSSLESS_QUALITY,
        metadata: Metadata {
            mapping: frame.mapping().copied(),
            predictor: Some(cfg.predictor.to_string()),
            context_buckets: Some(cfg.context_buckets),
            ..Default::default()
        },
        payload: payload.into_bytes(),
    };
    Ok(Bitstream::from_bytes(container.to_bytes()))
}

pub fn decode_lossless(bits: &Bitstream) -> Result<TactileFrame> {
    decode_lossless_bytes(bits.bytes())
}

pub fn decode_lossless_bytes(data: &[u8]) -> Result<TactileFrame> {
    let c = Container::parse(data)?;
    if c.codec != CodecId::TacoLlLite {
        return Err(Error::CorruptHeader(format!("{:?} stream given to taco-ll-lite", c.codec)));
    }
    if c.quality != LOSSLESS_QUALITY {
        return Err(Error::CorruptHeader(format!("lossless stream with quality {}", c.quality)));
    }
    let cfg = LosslessConfig {
        predictor: c
            .metadata
            .predictor
            .as_deref()
            .ok_or_else(|| Error::CorruptHeader("missing predictor".into()))?
            .parse()
            .map_err(|_| Error::CorruptHeader("unknown predictor".into()))?,
        context_buckets: c
            .metadata
            .context_buckets
            .ok_or_else(|| Error::CorruptHeader("missing context_buckets".into()))?,
    };
    cfg.validate().map_err(|e| Error::CorruptHeader(e.to_string()))?;
    let g = PatchGeometry::for_dims(c.width, c.height);
    let tokens = decode_tokens(&c.payload, g, c.sensor_kind.into(), &cfg)?;
    let mut frame = tokenizer::detokenize(&tokens)?;
    frame.set_meta(c.sensor_kind, c.metadata.mapping);
    Ok(frame)
}

/// Total container bits over total raw bytes for a set of frames.
pub fn bits_per_byte_of(frames: &[TactileFrame], cfg: &LosslessConfig) -> Result<f64> {
    if frames.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut bits = 0usize;
    let mut raw = 0usize;
    for f in frames {
        bits += encode_lossless(f, cfg)?.bit_len();
        raw += f.raw_len();
    }
    crate::metrics::bits_per_byte(bits as u64, raw as u64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::force::ForceImageMapping;
    use crate::frame::SensorKind;
    use proptest::prelude::*;
    use rand::{Rng, RngCore, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(w: usize, h: usize, seed: u64) -> TactileFrame {
        let mut px = vec![0u8; w * h * 3];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut px);
        TactileFrame::visuo(w, h, px).unwrap()
    }

    fn horizontal_gradient(w: usize, h: usize) -> TactileFrame {
        let mut px = Vec::with_capacity(w * h * 3);
        for _ in 0..h {
            for x in 0..w {
                let v = (x * 255 / (w - 1)) as u8;
                px.extend_from_slice(&[v, v / 2, 255 - v]);
            }
        }
        TactileFrame::visuo(w, h, px).unwrap()
    }

    fn gzip_bits(data: &[u8]) -> usize {
        use flate2::{write::GzEncoder, Compression};
        use std::io::Write;
        let mut e = GzEncoder::new(Vec::new(), Compression::best());
        e.write_all(data).unwrap();
        e.finish().unwrap().len() * 8
    }

    #[test]
    fn median_edge_predictor() {
        let p = Predictor::MedianEdge;
        assert_eq!(p.predict(10, 20, 25), 10); // c above both → min
        assert_eq!(p.predict(10, 20, 5), 20); // c below both → max
        assert_eq!(p.predict(10, 20, 15), 15); // planar
        assert_eq!(p.predict(200, 0, 0), 200);
        assert_eq!(p.predict(0, 200, 0), 200);
    }

    #[test]
    fn buckets_are_geometric() {
        let b: Vec<_> = [0u8, 1, 2, 3, 4, 7, 8, 15, 16, 63, 64, 255]
            .iter()
            .map(|&g| gradient_bucket(g, 8))
            .collect();
        assert_eq!(b, [0, 1, 2, 2, 3, 3, 4, 4, 5, 6, 7, 7]);
        assert_eq!(gradient_bucket(200, 1), 0);
    }

    #[test]
    fn constant_frame_compresses_hard() {
        let f = TactileFrame::filled(256, 256, [90, 140, 200]).unwrap();
        let bits = encode_lossless(&f, &LosslessConfig::default()).unwrap();
        let bpb = bits.bit_len() as f64 / f.raw_len() as f64;
        assert!(bpb < 0.1, "{bpb}");
        assert_eq!(decode_lossless(&bits).unwrap(), f);
    }

    #[test]
    fn noise_costs_about_eight() {
        let f = noise(640, 480, 1);
        let bpb = bits_per_byte_of(&[f], &LosslessConfig::default()).unwrap();
        assert!((8.0..=8.2).contains(&bpb), "{bpb}");
    }

    #[test]
    fn gradient_beats_gzip() {
        let f = horizontal_gradient(256, 256);
        let ours = encode_lossless(&f, &LosslessConfig::default()).unwrap().bit_len();
        assert!(ours < gzip_bits(f.pixels()), "{ours} vs gzip {}", gzip_bits(f.pixels()));
    }

    #[test]
    fn force_frame_keeps_metadata() {
        let m = ForceImageMapping::new([0.02, 0.02, 0.05], [128.0; 3]).unwrap();
        let f = noise(60, 200, 2).with_mapping(m);
        let back = decode_lossless(&encode_lossless(&f, &LosslessConfig::default()).unwrap()).unwrap();
        assert_eq!(back.sensor_kind(), SensorKind::ForceStacked);
        assert_eq!(back.mapping(), Some(&m));
        assert_eq!(back, f);
    }

    #[test]
    fn header_flip_is_detected() {
        let f = noise(20, 20, 3);
        let bits = encode_lossless(&f, &LosslessConfig::default()).unwrap();
        let mut bad = bits.bytes().to_vec();
        bad[0] ^= 0xff;
        assert!(matches!(decode_lossless_bytes(&bad), Err(Error::CorruptHeader(_))));
        let mut bad = bits.bytes().to_vec();
        bad[4] = 2;
        assert!(matches!(decode_lossless_bytes(&bad), Err(Error::VersionMismatch(2))));
        let short = &bits.bytes()[..bits.bytes().len() - 3];
        assert!(matches!(decode_lossless_bytes(short), Err(Error::TruncatedBitstream)));
    }

    #[test]
    fn context_and_prediction_help_on_gradients() {
        let frames: Vec<_> = (0..4u64)
            .map(|s| crate::synth::smooth_frame(64, 64, 2.0, s))
            .collect();
        let best = bits_per_byte_of(&frames, &LosslessConfig::default()).unwrap();
        let worst = bits_per_byte_of(
            &frames,
            &LosslessConfig {
                predictor: Predictor::Zero,
                context_buckets: 1,
            },
        )
        .unwrap();
        assert!(best <= worst, "{best} vs {worst}");
    }

    #[test]
    fn deterministic() {
        let f = noise(33, 17, 4);
        let cfg = LosslessConfig::default();
        assert_eq!(encode_lossless(&f, &cfg).unwrap(), encode_lossless(&f, &cfg).unwrap());
    }

    #[test]
    fn empty_input() {
        assert!(matches!(bits_per_byte_of(&[], &LosslessConfig::default()), Err(Error::EmptyInput)));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(104))]
        #[test]
        fn round_trip(w in 1usize..70, h in 1usize..70, seed in any::<u64>(), smooth in any::<bool>(),
                      pred in 0usize..3, buckets in 1usize..10) {
            let f = if smooth {
                crate::synth::smooth_frame(w, h, 3.0, seed)
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let px = (0..w * h * 3).map(|_| rng.gen_range(0..16u8) * 16).collect();
                TactileFrame::visuo(w, h, px).unwrap()
            };
            let cfg = LosslessConfig {
                predictor: [Predictor::Zero, Predictor::Left, Predictor::MedianEdge][pred],
                context_buckets: buckets,
            };
            let bits = encode_lossless(&f, &cfg).unwrap();
            prop_assert_eq!(decode_lossless(&bits).unwrap(), f);
        }
    }
}
