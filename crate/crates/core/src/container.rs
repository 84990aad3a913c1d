//! The `TACB` bitstream container shared by all built-in codecs.
//!
//! Layout (little-endian):
//!
//! ```text
//! "TACB" | version u8 | codec_id u8 | flags u8 | width u16 | height u16 |
//! channels u8 | quality u8 | metadata_len u16 | metadata (JSON) |
//! payload_len u32 | payload
//! ```
//!
//! `flags` bit 0 marks force-stacked frames. The JSON metadata carries the
//! force mapping, codec parameters and CRC-32 checksums of the fixed header
//! and the payload.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force::ForceImageMapping;
use crate::frame::{SensorKind, CHANNELS};

pub const MAGIC: &[u8; 4] = b"TACB";
pub const VERSION: u8 = 1;
/// Quality byte of lossless streams.
pub const LOSSLESS_QUALITY: u8 = 255;
const FIXED_LEN: usize = 15;
const FLAG_FORCE: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum CodecId {
    TacoLlLite = 0,
    TacoLLite = 1,
    External = 2,
    Store = 3,
}

impl TryFrom<u8> for CodecId {
    type Error = Error;

    fn try_from(v: u8) -> Result<Self> {
        Ok(match v {
            0 => CodecId::TacoLlLite,
            1 => CodecId::TacoLLite,
            2 => CodecId::External,
            3 => CodecId::Store,
            _ => return Err(Error::CorruptHeader(format!("unknown codec id {v}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Metadata {
    pub orig_width: usize,
    pub orig_height: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mapping: Option<ForceImageMapping>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_size: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predictor: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context_buckets: Option<usize>,
    #[serde(default)]
    pub header_crc: u32,
    #[serde(default)]
    pub payload_crc: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Container {
    pub codec: CodecId,
    pub sensor_kind: SensorKind,
    pub width: usize,
    pub height: usize,
    pub quality: u8,
    pub metadata: Metadata,
    pub payload: Vec<u8>,
}

impl Container {
    fn fixed_header(&self) -> [u8; 12] {
        let mut h = [0u8; 12];
        h[..4].copy_from_slice(MAGIC);
        h[4] = VERSION;
        h[5] = self.codec as u8;
        h[6] = match self.sensor_kind {
            SensorKind::ForceStacked => FLAG_FORCE,
            SensorKind::VisuoTactile => 0,
        };
        h[7..9].copy_from_slice(&(self.width as u16).to_le_bytes());
        h[9..11].copy_from_slice(&(self.height as u16).to_le_bytes());
        h[11] = CHANNELS as u8;
        h
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let fixed = self.fixed_header();
        let mut meta = self.metadata.clone();
        meta.orig_width = self.width;
        meta.orig_height = self.height;
        meta.payload_crc = crc32(&self.payload);
        meta.header_crc = header_crc(&fixed, self.quality, &meta);
        let json = serde_json::to_vec(&meta).expect("metadata serializes");
        assert!(json.len() <= u16::MAX as usize, "metadata too large");

        let mut out = Vec::with_capacity(FIXED_LEN + json.len() + 4 + self.payload.len());
        out.extend_from_slice(&fixed);
        out.push(self.quality);
        out.extend_from_slice(&(json.len() as u16).to_le_bytes());
        out.extend_from_slice(&json);
        out.extend_from_slice(&(self.payload.len() as u32).to_le_bytes());
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn parse(data: &[u8]) -> Result<Self> {
        if data.len() < 4 || &data[..4] != MAGIC {
            if data.len() < 4 && MAGIC.starts_with(data) {
                return Err(Error::TruncatedBitstream);
            }
            return Err(Error::CorruptHeader("bad magic".into()));
        }
        if data.len() < FIXED_LEN {
            return Err(Error::TruncatedBitstream);
        }
        if data[4] != VERSION {
            return Err(Error::VersionMismatch(data[4]));
        }
        let codec = CodecId::try_from(data[5])?;
        let flags = data[6];
        if flags & !FLAG_FORCE != 0 {
            return Err(Error::CorruptHeader(format!("unknown flags {flags:#04x}")));
        }
        let width = u16::from_le_bytes([data[7], data[8]]) as usize;
        let height = u16::from_le_bytes([data[9], data[10]]) as usize;
        if data[11] as usize != CHANNELS {
            return Err(Error::CorruptHeader(format!("{} channels", data[11])));
        }
        let quality = data[12];
        let meta_len = u16::from_le_bytes([data[13], data[14]]) as usize;
        let meta_end = FIXED_LEN + meta_len;
        let meta_bytes = data.get(FIXED_LEN..meta_end).ok_or(Error::TruncatedBitstream)?;
        let metadata: Metadata = serde_json::from_slice(meta_bytes)
            .map_err(|e| Error::CorruptHeader(format!("metadata: {e}")))?;
        if metadata.header_crc != header_crc(&data[..12], quality, &metadata) {
            return Err(Error::CorruptHeader("header checksum mismatch".into()));
        }
        if width == 0 || height == 0 || metadata.orig_width != width || metadata.orig_height != height {
            return Err(Error::CorruptHeader(format!("bad dimensions {width}x{height}")));
        }
        let sensor_kind = if flags & FLAG_FORCE != 0 {
            SensorKind::ForceStacked
        } else {
            SensorKind::VisuoTactile
        };
        if metadata.mapping.is_some() && sensor_kind != SensorKind::ForceStacked {
            return Err(Error::CorruptHeader("mapping on a visuo-tactile frame".into()));
        }
        let len_bytes = data.get(meta_end..meta_end + 4).ok_or(Error::TruncatedBitstream)?;
        let payload_len = u32::from_le_bytes(len_bytes.try_into().expect("4 bytes")) as usize;
        let payload_start = meta_end + 4;
        let available = data.len() - payload_start;
        if payload_len > available {
            return Err(Error::TruncatedBitstream);
        }
        if payload_len < available {
            return Err(Error::CorruptHeader(format!(
                "{} trailing bytes after payload",
                available - payload_len
            )));
        }
        let payload = data[payload_start..].to_vec();
        if crc32(&payload) != metadata.payload_crc {
            return Err(Error::CorruptPayload);
        }
        Ok(Self {
            codec,
            sensor_kind,
            width,
            height,
            quality,
            metadata,
            payload,
        })
    }
}

pub fn crc32(data: &[u8]) -> u32 {
    crc32fast::hash(data)
}

/// CRC over the fixed header, the quality byte and the canonical metadata
/// JSON with `header_crc` zeroed.
fn header_crc(fixed: &[u8], quality: u8, meta: &Metadata) -> u32 {
    let mut canonical = meta.clone();
    canonical.header_crc = 0;
    let mut h = crc32fast::Hasher::new();
    h.update(fixed);
    h.update(&[quality]);
    h.update(&serde_json::to_vec(&canonical).expect("metadata serializes"));
    h.finalize()
}
