//! 8-bit, three-channel tactile frames and their raster file formats.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force::ForceImageMapping;

/// Samples per pixel. Every frame is three-channel: RGB for visuo-tactile
/// imagery, (fx, fy, fz) for force-stacked images.
pub const CHANNELS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SensorKind {
    #[serde(rename = "visuo")]
    VisuoTactile,
    #[serde(rename = "force")]
    ForceStacked,
}

/// A row-major, channel-interleaved W×H×3 image.
///
/// Force-stacked frames carry the mapping that produced them so that they can
/// be turned back into forces after a codec round trip.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileFrame {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    sensor_kind: SensorKind,
    mapping: Option<ForceImageMapping>,
}

impl TactileFrame {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>, sensor_kind: SensorKind) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidFrame(format!("zero dimension {width}x{height}")));
        }
        if width > u16::MAX as usize || height > u16::MAX as usize {
            return Err(Error::InvalidFrame(format!("dimension {width}x{height} exceeds 65535")));
        }
        let expected = width * height * CHANNELS;
        if pixels.len() != expected {
            return Err(Error::InvalidFrame(format!(
                "{} samples for {width}x{height}x3 (expected {expected})",
                pixels.len()
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
            sensor_kind,
            mapping: None,
        })
    }

    pub fn visuo(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        Self::new(width, height, pixels, SensorKind::VisuoTactile)
    }

    /// A frame with every pixel set to `rgb`.
    pub fn filled(width: usize, height: usize, rgb: [u8; 3]) -> Result<Self> {
        let pixels = rgb.iter().copied().cycle().take(width * height * CHANNELS).collect();
        Self::visuo(width, height, pixels)
    }

    pub fn with_mapping(mut self, mapping: ForceImageMapping) -> Self {
        self.sensor_kind = SensorKind::ForceStacked;
        self.mapping = Some(mapping);
        self
    }

    pub(crate) fn set_meta(&mut self, kind: SensorKind, mapping: Option<ForceImageMapping>) {
        self.sensor_kind = kind;
        self.mapping = mapping;
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        CHANNELS
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn sensor_kind(&self) -> SensorKind {
        self.sensor_kind
    }

    pub fn mapping(&self) -> Option<&ForceImageMapping> {
        self.mapping.as_ref()
    }

    /// Raw size in bytes (W×H×3).
    pub fn raw_len(&self) -> usize {
        self.pixels.len()
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * CHANNELS;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    pub fn same_dims(&self, other: &TactileFrame) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(self.width, self.height, other.width, other.height));
        }
        Ok(())
    }

    /// Top-left `w`×`h` window. Used to undo [`pad_frame`].
    pub fn crop(&self, w: usize, h: usize) -> Result<TactileFrame> {
        if w > self.width || h > self.height || w == 0 || h == 0 {
            return Err(Error::InvalidArgument(format!(
                "crop {w}x{h} outside {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h * CHANNELS);
        for row in self.pixels.chunks_exact(self.width * CHANNELS).take(h) {
            pixels.extend_from_slice(&row[..w * CHANNELS]);
        }
        let mut out = TactileFrame::new(w, h, pixels, self.sensor_kind)?;
        out.mapping = self.mapping;
        Ok(out)
    }
}

/// A frame zero-padded to a larger canvas, remembering its original size.
#[derive(Debug, Clone, PartialEq)]
pub struct PaddedFrame {
    pub frame: TactileFrame,
    pub orig_width: usize,
    pub orig_height: usize,
}

impl PaddedFrame {
    pub fn unpad(&self) -> Result<TactileFrame> {
        self.frame.crop(self.orig_width, self.orig_height)
    }
}

/// Zero-pads `frame` on the right and bottom up to `target_w`×`target_h`.
pub fn pad_frame(frame: &TactileFrame, target_w: usize, target_h: usize) -> Result<PaddedFrame> {
    let (w, h) = (frame.width, frame.height);
    if target_w < w || target_h < h {
        return Err(Error::TargetSmallerThanSource {
            width: w,
            height: h,
            target_w,
            target_h,
        });
    }
    if target_w == w && target_h == h {
        return Ok(PaddedFrame {
            frame: frame.clone(),
            orig_width: w,
            orig_height: h,
        });
    }
    let mut pixels = vec![0u8; target_w * target_h * CHANNELS];
    for (dst, src) in pixels
        .chunks_exact_mut(target_w * CHANNELS)
        .zip(frame.pixels.chunks_exact(w * CHANNELS))
    {
        dst[..w * CHANNELS].copy_from_slice(src);
    }
    let mut padded = TactileFrame::new(target_w, target_h, pixels, frame.sensor_kind)?;
    padded.mapping = frame.mapping;
    Ok(PaddedFrame {
        frame: padded,
        orig_width: w,
        orig_height: h,
    })
}

/// Pads to the next multiple of `block` in both dimensions.
pub fn pad_to_multiple(frame: &TactileFrame, block: usize) -> Result<PaddedFrame> {
    pad_frame(
        frame,
        frame.width.div_ceil(block) * block,
        frame.height.div_ceil(block) * block,
    )
}

/// Loads an 8-bit RGB raster (binary PPM or PNG).
pub fn load_frame(path: impl AsRef<Path>) -> Result<TactileFrame> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|source| Error::UnreadableFile {
        path: path.to_owned(),
        source,
    })?;
    decode_raster(&data)
}

/// Parses PPM/PGM or PNG bytes.
pub fn decode_raster(data: &[u8]) -> Result<TactileFrame> {
    match data {
        [b'P', b'6', ..] => parse_pnm(data),
        [b'P', b'5', ..] => Err(Error::NonThreeChannelImage(1)),
        [0x89, b'P', b'N', b'G', ..] => decode_png(data),
        _ => Err(Error::UnsupportedFormat(
            "expected binary PPM (P6) or PNG".into(),
        )),
    }
}

fn decode_png(data: &[u8]) -> Result<TactileFrame> {
    let img = image::load_from_memory_with_format(data, image::ImageFormat::Png)
        .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
    let channels = img.color().channel_count();
    if channels != 3 {
        return Err(Error::NonThreeChannelImage(channels));
    }
    if img.color().bytes_per_pixel() != 3 {
        return Err(Error::UnsupportedFormat("only 8-bit samples are supported".into()));
    }
    let rgb = img.to_rgb8();
    let (w, h) = rgb.dimensions();
    TactileFrame::visuo(w as usize, h as usize, rgb.into_raw())
}

fn parse_pnm(data: &[u8]) -> Result<TactileFrame> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match data.get(pos) {
                Some(c) if c.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while data.get(pos).is_some_and(|&c| c != b'\n') {
                        pos += 1;
                    }
                }
                _ => break,
            }
        }
        let start = pos;
        while data.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&data[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::UnsupportedFormat("malformed PPM header".into()))?;
    }
    if !data.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(Error::UnsupportedFormat("malformed PPM header".into()));
    }
    pos += 1;
    let [w, h, maxval] = fields;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat(format!("PPM maxval {maxval}, expected 255")));
    }
    let len = w * h * CHANNELS;
    let body = data
        .get(pos..pos + len)
        .ok_or_else(|| Error::UnsupportedFormat("PPM body truncated".into()))?;
    TactileFrame::visuo(w, h, body.to_vec())
}

pub fn encode_ppm(frame: &TactileFrame) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", frame.width, frame.height).into_bytes();
    out.extend_from_slice(&frame.pixels);
    out
}

pub fn save_ppm(frame: &TactileFrame, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_ppm(frame)).map_err(|source| Error::UnwritableOutput {
        path: path.to_owned(),
        source,
    })
}

/// Writes a single-channel image as binary PGM with optional comment lines.
pub fn save_pgm(
    width: usize,
    height: usize,
    samples: &[u8],
    comments: &[String],
    path: impl AsRef<Path>,
) -> Result<()> {
    let path = path.as_ref();
    let write = || -> std::io::Result<()> {
        let mut f = std::io::BufWriter::new(fs::File::create(path)?);
        writeln!(f, "P5")?;
        for c in comments {
            writeln!(f, "# {c}")?;
        }
        write!(f, "{width} {height}\n255\n")?;
        f.write_all(samples)?;
        f.flush()
    };
    write().map_err(|source| Error::UnwritableOutput {
        path: path.to_owned(),
        source,
    })
}
