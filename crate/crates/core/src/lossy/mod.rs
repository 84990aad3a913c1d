//! `taco-l-lite`: YCoCg-R, 8×8 DCT, dead-zone scalar quantization and
//! context-adaptive range coding of the zigzag-scanned levels.

pub mod transform;

use rayon::prelude::*;

use crate::container::{CodecId, Container, Metadata};
use crate::entropy::{Bitstream, FrequencyTable, RangeDecoder, RangeEncoder};
use crate::error::{Error, Result};
use crate::frame::{TactileFrame, CHANNELS};
use crate::metrics::{self, RdCurve, RdPoint};
use transform::{dct2d, idct2d, ycocg_r_forward, ycocg_r_inverse, BLOCK, BLOCK_AREA, ZIGZAG};

/// The four rate-distortion trade-offs, coarsest first.
pub const LAMBDAS: [f64; 4] = [0.0018, 0.0067, 0.025, 0.0483];

/// Quality byte of streams encoded with an explicit step size.
pub const CUSTOM_QUALITY: u8 = 254;

/// DC step is `Δ / DC_STEP_DIVISOR`, capped at `DC_MAX_STEP` so that flat
/// blocks reconstruct exactly.
const DC_STEP_DIVISOR: f64 = 16.0;
const DC_MAX_STEP: f64 = 8.0;

/// `round(√(12/λ))` clamped to `[1, 256]`.
pub fn step_for_lambda(lambda: f64) -> f64 {
    (12.0 / lambda).sqrt().round().clamp(1.0, 256.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QualityPoint {
    pub index: u8,
    pub lambda: f64,
    pub step_size: f64,
}

impl QualityPoint {
    pub fn from_index(index: u8) -> Result<Self> {
        let lambda = *LAMBDAS.get(index as usize).ok_or(Error::InvalidQuality(index.to_string()))?;
        Ok(Self {
            index,
            lambda,
            step_size: step_for_lambda(lambda),
        })
    }

    pub fn all() -> Vec<Self> {
        (0..LAMBDAS.len() as u8).map(|i| Self::from_index(i).expect("in range")).collect()
    }

    /// Explicit step size; `lambda` is back-derived as `12/Δ²`.
    pub fn with_step(step_size: f64) -> Result<Self> {
        if !(1.0..=256.0).contains(&step_size) {
            return Err(Error::InvalidQuality(format!("step size {step_size} outside [1, 256]")));
        }
        Ok(Self {
            index: CUSTOM_QUALITY,
            lambda: 12.0 / (step_size * step_size),
            step_size,
        })
    }
}

fn dc_step(step: f64) -> f64 {
    (step / DC_STEP_DIVISOR).min(DC_MAX_STEP)
}

/// Dead-zone quantizer: zero bin `(−Δ, Δ)`, then uniform bins of width Δ.
#[inline]
pub fn quantize_ac(c: f64, step: f64) -> i32 {
    let q = (c.abs() / step).floor() as i32;
    if c < 0.0 {
        -q
    } else {
        q
    }
}

/// Mid-bin reconstruction.
#[inline]
pub fn dequantize_ac(q: i32, step: f64) -> f64 {
    match q {
        0 => 0.0,
        q => q.signum() as f64 * (q.abs() as f64 + 0.5) * step,
    }
}

#[inline]
pub fn quantize_dc(c: f64, step: f64) -> i32 {
    (c / dc_step(step)).round() as i32
}

#[inline]
pub fn dequantize_dc(q: i32, step: f64) -> f64 {
    q as f64 * dc_step(step)
}

/// Quantized levels of one 8×8 block of one plane, in zigzag order.
pub type LevelBlock = [i32; BLOCK_AREA];

struct Planes {
    bw: usize,
    bh: usize,
    /// Per plane (Y, Co, Cg): blocks in raster order.
    levels: [Vec<LevelBlock>; CHANNELS],
}

/// Colour planes with edge replication to a multiple of 8. Y is centred on 0.
fn colour_planes(frame: &TactileFrame) -> (usize, usize, [Vec<f64>; CHANNELS]) {
    let (w, h) = (frame.width(), frame.height());
    let pw = w.div_ceil(BLOCK) * BLOCK;
    let ph = h.div_ceil(BLOCK) * BLOCK;
    let mut planes: [Vec<f64>; CHANNELS] = std::array::from_fn(|_| Vec::with_capacity(pw * ph));
    for y in 0..ph {
        for x in 0..pw {
            let [r, g, b] = frame.pixel(x.min(w - 1), y.min(h - 1));
            let (yy, co, cg) = ycocg_r_forward(r as i32, g as i32, b as i32);
            planes[0].push((yy - 128) as f64);
            planes[1].push(co as f64);
            planes[2].push(cg as f64);
        }
    }
    (pw, ph, planes)
}

fn forward_blocks(frame: &TactileFrame, step: f64) -> Planes {
    let (pw, ph, planes) = colour_planes(frame);
    let (bw, bh) = (pw / BLOCK, ph / BLOCK);
    let levels = planes.map(|plane| {
        (0..bw * bh)
            .into_par_iter()
            .map(|bi| {
                let (bx, by) = (bi % bw, bi / bw);
                let mut block = [0.0; BLOCK_AREA];
                for y in 0..BLOCK {
                    let row = (by * BLOCK + y) * pw + bx * BLOCK;
                    block[y * BLOCK..(y + 1) * BLOCK].copy_from_slice(&plane[row..row + BLOCK]);
                }
                let c = dct2d(&block);
                let mut out = [0i32; BLOCK_AREA];
                out[0] = quantize_dc(c[0], step);
                for k in 1..BLOCK_AREA {
                    out[k] = quantize_ac(c[ZIGZAG[k]], step);
                }
                out
            })
            .collect()
    });
    Planes { bw, bh, levels }
}

fn inverse_blocks(p: &Planes, step: f64, w: usize, h: usize) -> Vec<u8> {
    let pw = p.bw * BLOCK;
    let recon: Vec<Vec<i32>> = p
        .levels
        .iter()
        .enumerate()
        .map(|(ci, blocks)| {
            let (lo, hi) = if ci == 0 { (-128, 127) } else { (-255, 255) };
            let mut plane = vec![0i32; pw * p.bh * BLOCK];
            let decoded: Vec<[f64; BLOCK_AREA]> = blocks
                .par_iter()
                .map(|lv| {
                    let mut c = [0.0; BLOCK_AREA];
                    c[0] = dequantize_dc(lv[0], step);
                    for k in 1..BLOCK_AREA {
                        c[ZIGZAG[k]] = dequantize_ac(lv[k], step);
                    }
                    idct2d(&c)
                })
                .collect();
            for (bi, px) in decoded.iter().enumerate() {
                let (bx, by) = (bi % p.bw, bi / p.bw);
                for y in 0..BLOCK {
                    for x in 0..BLOCK {
                        plane[(by * BLOCK + y) * pw + bx * BLOCK + x] =
                            (px[y * BLOCK + x].round() as i32).clamp(lo, hi);
                    }
                }
            }
            plane
        })
        .collect();
    let mut out = Vec::with_capacity(w * h * CHANNELS);
    for y in 0..h {
        for x in 0..w {
            let i = y * pw + x;
            let (r, g, b) = ycocg_r_inverse(recon[0][i] + 128, recon[1][i], recon[2][i]);
            out.extend([r, g, b].map(|v| v.clamp(0, 255) as u8));
        }
    }
    out
}

// --- entropy coding of levels ---------------------------------------------

const BANDS: usize = 7;
/// Symbols below this carry the zigzag-mapped value directly.
const ESCAPE_BASE: u32 = 240;

fn band(k: usize) -> usize {
    match k {
        0 => 0,
        1..=2 => 1,
        3..=5 => 2,
        6..=9 => 3,
        10..=14 => 4,
        15..=27 => 5,
        _ => 6,
    }
}

struct LevelModels {
    /// Coefficients after the last non-zero one: 0..=64.
    end: Vec<FrequencyTable>,
    /// Indexed by `plane × BANDS × 2 + band × 2 + (previous level ≠ 0)`.
    coeff: Vec<FrequencyTable>,
}

impl LevelModels {
    fn new() -> Self {
        Self {
            end: vec![FrequencyTable::adaptive(); CHANNELS],
            coeff: vec![FrequencyTable::adaptive(); CHANNELS * BANDS * 2],
        }
    }

    fn ctx(plane: usize, k: usize, prev: i32) -> usize {
        plane * BANDS * 2 + band(k) * 2 + usize::from(prev != 0)
    }
}

#[inline]
fn zigzag_map(v: i32) -> u32 {
    ((v << 1) ^ (v >> 31)) as u32
}

#[inline]
fn zigzag_unmap(u: u32) -> i32 {
    ((u >> 1) as i32) ^ -((u & 1) as i32)
}

fn encode_value(enc: &mut RangeEncoder, table: &mut FrequencyTable, v: i32) {
    let u = zigzag_map(v);
    if u < ESCAPE_BASE {
        enc.encode_symbol(table, u as u8);
    } else {
        let e = u - ESCAPE_BASE + 1;
        let nbits = e.ilog2();
        enc.encode_symbol(table, (ESCAPE_BASE + nbits) as u8);
        enc.encode_bits(e - (1 << nbits), nbits);
    }
}

fn decode_value(dec: &mut RangeDecoder<'_>, table: &mut FrequencyTable) -> Result<i32> {
    let s = dec.decode_symbol(table)? as u32;
    let u = if s < ESCAPE_BASE {
        s
    } else {
        let nbits = s - ESCAPE_BASE;
        if nbits > 16 {
            return Err(Error::CorruptPayload);
        }
        let e = (1u32 << nbits) + dec.decode_bits(nbits)?;
        e - 1 + ESCAPE_BASE
    };
    Ok(zigzag_unmap(u))
}

/// Blocks are interleaved plane by plane within each block position; the DC
/// level is coded as the difference from the previous block of that plane.
fn encode_levels(p: &Planes) -> Bitstream {
    let mut m = LevelModels::new();
    let mut enc = RangeEncoder::new();
    let mut prev_dc = [0i32; CHANNELS];
    for bi in 0..p.bw * p.bh {
        for plane in 0..CHANNELS {
            let mut lv = p.levels[plane][bi];
            let dc = lv[0];
            lv[0] -= prev_dc[plane];
            prev_dc[plane] = dc;
            let end = lv.iter().rposition(|&v| v != 0).map_or(0, |i| i + 1);
            enc.encode_symbol(&mut m.end[plane], end as u8);
            let mut prev = 0;
            for (k, &v) in lv[..end].iter().enumerate() {
                encode_value(&mut enc, &mut m.coeff[LevelModels::ctx(plane, k, prev)], v);
                prev = v;
            }
        }
    }
    enc.finish()
}

fn decode_levels(payload: &[u8], bw: usize, bh: usize) -> Result<Planes> {
    let mut m = LevelModels::new();
    let mut dec = RangeDecoder::new(payload)?;
    let mut levels: [Vec<LevelBlock>; CHANNELS] = std::array::from_fn(|_| Vec::with_capacity(bw * bh));
    let mut prev_dc = [0i32; CHANNELS];
    for _ in 0..bw * bh {
        for plane in 0..CHANNELS {
            let end = dec.decode_symbol(&mut m.end[plane])? as usize;
            if end > BLOCK_AREA {
                return Err(Error::CorruptPayload);
            }
            let mut lv = [0i32; BLOCK_AREA];
            let mut prev = 0;
            for k in 0..end {
                let v = decode_value(&mut dec, &mut m.coeff[LevelModels::ctx(plane, k, prev)])?;
                lv[k] = v;
                prev = v;
            }
            lv[0] = lv[0].checked_add(prev_dc[plane]).ok_or(Error::CorruptPayload)?;
            prev_dc[plane] = lv[0];
            if lv.iter().any(|v| v.unsigned_abs() > i16::MAX as u32) {
                return Err(Error::CorruptPayload);
            }
            levels[plane].push(lv);
        }
    }
    dec.finish().map_err(|_| Error::CorruptPayload)?;
    Ok(Planes { bw, bh, levels })
}

// --- public codec API -----------------------------------------------------

pub fn encode_lossy(frame: &TactileFrame, q: &QualityPoint) -> Result<Bitstream> {
    let planes = forward_blocks(frame, q.step_size);
    let payload = encode_levels(&planes);
    let container = Container {
        codec: CodecId::TacoLLite,
        sensor_kind: frame.sensor_kind(),
        width: frame.width(),
        height: frame.height(),
        quality: q.index,
        metadata: Metadata {
            mapping: frame.mapping().copied(),
            lambda: Some(q.lambda),
            step_size: Some(q.step_size),
            ..Default::default()
        },
        payload: payload.into_bytes(),
    };
    Ok(Bitstream::from_bytes(container.to_bytes()))
}

pub fn decode_lossy(bits: &Bitstream) -> Result<TactileFrame> {
    decode_lossy_bytes(bits.bytes())
}

pub fn decode_lossy_bytes(data: &[u8]) -> Result<TactileFrame> {
    let c = Container::parse(data)?;
    if c.codec != CodecId::TacoLLite {
        return Err(Error::CorruptHeader(format!("{:?} stream given to taco-l-lite", c.codec)));
    }
    let step = c
        .metadata
        .step_size
        .ok_or_else(|| Error::CorruptHeader("missing step_size".into()))?;
    let expected = match c.quality {
        CUSTOM_QUALITY => QualityPoint::with_step(step).ok(),
        i => QualityPoint::from_index(i).ok(),
    };
    match expected {
        Some(q) if q.step_size == step => {}
        _ => {
            return Err(Error::CorruptHeader(format!(
                "quality {} inconsistent with step size {step}",
                c.quality
            )))
        }
    }
    let bw = c.width.div_ceil(BLOCK);
    let bh = c.height.div_ceil(BLOCK);
    let planes = decode_levels(&c.payload, bw, bh)?;
    let pixels = inverse_blocks(&planes, step, c.width, c.height);
    let mut frame = TactileFrame::new(c.width, c.height, pixels, c.sensor_kind)?;
    frame.set_meta(c.sensor_kind, c.metadata.mapping);
    Ok(frame)
}

/// `bits + λ · MSE · (W·H·3)`.
pub fn rd_cost(frame: &TactileFrame, recon: &TactileFrame, bits: u64, lambda: f64) -> Result<f64> {
    let mse = metrics::mse(frame, recon)?;
    Ok(bits as f64 + lambda * mse * frame.raw_len() as f64)
}

/// One point per quality: mean bpp, mean PSNR, and mean MS-SSIM (absent when
/// a frame is too small for it). Sorted by bpp.
pub fn rd_sweep(frames: &[TactileFrame], qualities: &[QualityPoint], label: &str) -> Result<RdCurve> {
    if frames.is_empty() || qualities.is_empty() {
        return Err(Error::EmptyInput);
    }
    let points = qualities
        .par_iter()
        .map(|q| {
            let mut bpp = 0.0;
            let mut psnr = 0.0;
            let mut ssim = Some(0.0);
            for f in frames {
                let bits = encode_lossy(f, q)?;
                let recon = decode_lossy(&bits)?;
                bpp += metrics::bpp_of(bits.bit_len() as u64, f.width(), f.height())?;
                psnr += metrics::psnr(f, &recon)?;
                ssim = match (ssim, metrics::ms_ssim(f, &recon)) {
                    (Some(s), Ok(v)) => Some(s + v),
                    (_, Err(Error::TooSmallForAnyScale(..))) | (None, _) => None,
                    (_, Err(e)) => return Err(e),
                };
            }
            let n = frames.len() as f64;
            Ok(RdPoint {
                bpp: bpp / n,
                psnr: psnr / n,
                ms_ssim: ssim.map(|s| (s / n).clamp(0.0, 1.0)),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    RdCurve::new(label, points)
}
