//! Patch tokenization: frames become flat symbol sequences of 16×16×3
//! patches. Patches follow row-major grid order; inside a patch pixels follow
//! raster order and each pixel contributes its three channels in turn.

use crate::error::{Error, Result};
use crate::frame::{pad_to_multiple, SensorKind, TactileFrame, CHANNELS};

pub const PATCH: usize = 16;
pub const PATCH_SYMBOLS: usize = PATCH * PATCH * CHANNELS;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PatchGeometry {
    pub grid_cols: usize,
    pub grid_rows: usize,
    pub orig_w: usize,
    pub orig_h: usize,
}

impl PatchGeometry {
    pub fn for_dims(orig_w: usize, orig_h: usize) -> Self {
        Self {
            grid_cols: orig_w.div_ceil(PATCH),
            grid_rows: orig_h.div_ceil(PATCH),
            orig_w,
            orig_h,
        }
    }

    pub fn patch_w(&self) -> usize {
        PATCH
    }

    pub fn patch_h(&self) -> usize {
        PATCH
    }

    pub fn padded_w(&self) -> usize {
        self.grid_cols * PATCH
    }

    pub fn padded_h(&self) -> usize {
        self.grid_rows * PATCH
    }

    pub fn patches(&self) -> usize {
        self.grid_cols * self.grid_rows
    }

    pub fn symbol_count(&self) -> usize {
        self.patches() * PATCH_SYMBOLS
    }

    /// Whether in-patch pixel (`row`, `col`) of patch `p` lies inside the
    /// original frame (as opposed to padding).
    pub fn is_content(&self, p: usize, row: usize, col: usize) -> bool {
        let (gy, gx) = (p / self.grid_cols, p % self.grid_cols);
        gy * PATCH + row < self.orig_h && gx * PATCH + col < self.orig_w
    }
}

/// Position of `channel` of in-patch pixel (`row`, `col`) within a patch run.
#[inline]
pub fn patch_index(row: usize, col: usize, channel: usize) -> usize {
    CHANNELS * (row * PATCH + col) + channel
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChannelOrder {
    Rgb,
    Xyz,
}

impl From<SensorKind> for ChannelOrder {
    fn from(kind: SensorKind) -> Self {
        match kind {
            SensorKind::VisuoTactile => ChannelOrder::Rgb,
            SensorKind::ForceStacked => ChannelOrder::Xyz,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenStream {
    pub symbols: Vec<u8>,
    pub geometry: PatchGeometry,
    pub channel_order: ChannelOrder,
}

impl TokenStream {
    pub fn patch(&self, p: usize) -> &[u8] {
        &self.symbols[p * PATCH_SYMBOLS..(p + 1) * PATCH_SYMBOLS]
    }
}

pub fn tokenize(frame: &TactileFrame) -> TokenStream {
    let geometry = PatchGeometry::for_dims(frame.width(), frame.height());
    let padded = pad_to_multiple(frame, PATCH).expect("padding to a multiple never shrinks");
    let stride = geometry.padded_w() * CHANNELS;
    let px = padded.frame.pixels();
    let mut symbols = Vec::with_capacity(geometry.symbol_count());
    for gy in 0..geometry.grid_rows {
        for gx in 0..geometry.grid_cols {
            for row in 0..PATCH {
                let start = (gy * PATCH + row) * stride + gx * PATCH * CHANNELS;
                symbols.extend_from_slice(&px[start..start + PATCH * CHANNELS]);
            }
        }
    }
    TokenStream {
        symbols,
        geometry,
        channel_order: frame.sensor_kind().into(),
    }
}

/// Inverse of [`tokenize`]; padding is stripped.
pub fn detokenize(tokens: &TokenStream) -> Result<TactileFrame> {
    let g = tokens.geometry;
    if tokens.symbols.len() != g.symbol_count() || g.orig_w == 0 || g.orig_h == 0 {
        return Err(Error::LengthGeometryMismatch {
            expected: g.symbol_count(),
            found: tokens.symbols.len(),
        });
    }
    let mut pixels = vec![0u8; g.orig_w * g.orig_h * CHANNELS];
    let stride = g.orig_w * CHANNELS;
    for (p, patch) in tokens.symbols.chunks_exact(PATCH_SYMBOLS).enumerate() {
        let (gy, gx) = (p / g.grid_cols, p % g.grid_cols);
        let x0 = gx * PATCH;
        if x0 >= g.orig_w {
            continue;
        }
        let cols = PATCH.min(g.orig_w - x0);
        for row in 0..PATCH {
            let y = gy * PATCH + row;
            if y >= g.orig_h {
                break;
            }
            let src = &patch[row * PATCH * CHANNELS..][..cols * CHANNELS];
            pixels[y * stride + x0 * CHANNELS..][..cols * CHANNELS].copy_from_slice(src);
        }
    }
    let kind = match tokens.channel_order {
        ChannelOrder::Rgb => SensorKind::VisuoTactile,
        ChannelOrder::Xyz => SensorKind::ForceStacked,
    };
    TactileFrame::new(g.orig_w, g.orig_h, pixels, kind)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn random_frame(w: usize, h: usize, seed: u64) -> TactileFrame {
        use rand::{RngCore, SeedableRng};
        let mut px = vec![0u8; w * h * 3];
        rand_chacha::ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut px);
        TactileFrame::visuo(w, h, px).unwrap()
    }

    #[test]
    fn single_patch() {
        let t = tokenize(&random_frame(16, 16, 1));
        assert_eq!(t.symbols.len(), 768);
        assert_eq!(t.geometry.patches(), 1);
    }

    #[test]
    fn first_pixel_subpixels() {
        let mut px = vec![0u8; 16 * 16 * 3];
        px[..3].copy_from_slice(&[10, 20, 30]);
        let t = tokenize(&TactileFrame::visuo(16, 16, px).unwrap());
        assert_eq!(&t.symbols[..3], &[10, 20, 30]);
    }

    #[test]
    fn grid_of_six() {
        let t = tokenize(&random_frame(48, 32, 2));
        assert_eq!((t.geometry.grid_cols, t.geometry.grid_rows), (3, 2));
        assert_eq!(t.symbols.len(), 4608);
    }

    #[test]
    fn patch_runs_are_contiguous() {
        let f = random_frame(48, 32, 3);
        let t = tokenize(&f);
        // patch 4 = grid row 1, col 1
        for row in 0..16 {
            for col in 0..16 {
                for c in 0..3 {
                    let want = f.pixel(16 + col, 16 + row)[c];
                    assert_eq!(t.patch(4)[patch_index(row, col, c)], want);
                }
            }
        }
    }

    #[test]
    fn padding_symbols_are_zero() {
        let f = TactileFrame::filled(12, 5, [200, 201, 202]).unwrap();
        let t = tokenize(&f);
        assert_eq!(t.symbols.len(), 768);
        for row in 0..16 {
            for col in 0..16 {
                let content = t.geometry.is_content(0, row, col);
                assert_eq!(content, row < 5 && col < 12);
                for c in 0..3 {
                    let v = t.symbols[patch_index(row, col, c)];
                    assert_eq!(v, if content { 200 + c as u8 } else { 0 });
                }
            }
        }
    }

    #[test]
    fn all_zero_stream_decodes_black() {
        let t = TokenStream {
            symbols: vec![0; 768],
            geometry: PatchGeometry::for_dims(16, 16),
            channel_order: ChannelOrder::Rgb,
        };
        let f = detokenize(&t).unwrap();
        assert_eq!((f.width(), f.height()), (16, 16));
        assert!(f.pixels().iter().all(|&v| v == 0));
    }

    #[test]
    fn length_mismatch() {
        let t = TokenStream {
            symbols: vec![0; 767],
            geometry: PatchGeometry::for_dims(16, 16),
            channel_order: ChannelOrder::Rgb,
        };
        assert!(matches!(detokenize(&t), Err(Error::LengthGeometryMismatch { .. })));
    }

    #[test]
    fn force_order_round_trip() {
        let f = random_frame(60, 200, 4).with_mapping(
            crate::force::ForceImageMapping::new([1.0; 3], [128.0; 3]).unwrap(),
        );
        let t = tokenize(&f);
        assert_eq!(t.channel_order, ChannelOrder::Xyz);
        let back = detokenize(&t).unwrap();
        assert_eq!(back.sensor_kind(), SensorKind::ForceStacked);
        assert_eq!(back.pixels(), f.pixels());
    }

    #[test]
    fn table_resolutions_round_trip() {
        for (i, &(w, h)) in [(640, 480), (120, 160), (240, 320), (320, 240), (12, 5), (60, 200)]
            .iter()
            .enumerate()
        {
            let f = random_frame(w, h, i as u64);
            assert_eq!(detokenize(&tokenize(&f)).unwrap(), f);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn bijection(w in 1usize..80, h in 1usize..80, seed in any::<u64>()) {
            let f = random_frame(w, h, seed);
            prop_assert_eq!(detokenize(&tokenize(&f)).unwrap(), f);
        }
    }
}
