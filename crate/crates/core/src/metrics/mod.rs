//! Rate and distortion measures.

mod bdrate;
mod msssim;

pub use bdrate::{bd_rate, bd_rate_with, pchip_slopes, BdQuality, Pchip};
pub use msssim::{ms_ssim, ms_ssim_with_scales, ms_ssim_scales, MS_SSIM_WEIGHTS};

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{save_pgm, TactileFrame};

/// Compressed bits per raw byte.
pub fn bits_per_byte(bits: u64, raw_bytes: u64) -> Result<f64> {
    if raw_bytes == 0 {
        return Err(Error::EmptyInput);
    }
    Ok(bits as f64 / raw_bytes as f64)
}

/// `8 / bits_per_byte`: how many times smaller than the raw bytes.
pub fn compression_ratio(bits_per_byte: f64) -> Result<f64> {
    if !(bits_per_byte > 0.0) {
        return Err(Error::NonPositiveInput("bits_per_byte"));
    }
    Ok(8.0 / bits_per_byte)
}

pub fn bpp_of(bits: u64, width: usize, height: usize) -> Result<f64> {
    if width == 0 || height == 0 {
        return Err(Error::ZeroArea);
    }
    Ok(bits as f64 / (width * height) as f64)
}

/// Stream bandwidth in megabits per second.
pub fn bandwidth_mbps(bpp: f64, width: f64, height: f64, fps: f64) -> Result<f64> {
    for (v, name) in [(bpp, "bpp"), (width, "width"), (height, "height"), (fps, "fps")] {
        if !(v > 0.0) {
            return Err(Error::NonPositiveInput(name));
        }
    }
    Ok(bpp * width * height * fps * 1e-6)
}

pub fn mse(a: &TactileFrame, b: &TactileFrame) -> Result<f64> {
    a.same_dims(b)?;
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = x.abs_diff(y) as u64;
            d * d
        })
        .sum();
    Ok(sum as f64 / a.raw_len() as f64)
}

/// PSNR from an MSE value; zero error maps to `f64::INFINITY`.
pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0f64 * 255.0 / mse).log10()
    }
}

/// RGB-domain PSNR in dB. Identical frames give `f64::INFINITY`.
pub fn psnr(a: &TactileFrame, b: &TactileFrame) -> Result<f64> {
    Ok(psnr_from_mse(mse(a, b)?))
}

/// Fixed-precision decimal, with `inf` / `-inf` / `nan` spelled out.
pub fn format_real(v: f64, decimals: usize) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.decimals$}")
    }
}

/// Inverse of [`format_real`].
pub fn parse_real(s: &str) -> Option<f64> {
    match s.trim() {
        "inf" | "+inf" | "Infinity" => Some(f64::INFINITY),
        "-inf" => Some(f64::NEG_INFINITY),
        t => t.parse().ok(),
    }
}

/// Per-pixel RMSE over the three channels.
#[derive(Debug, Clone, PartialEq)]
pub struct RmseMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

pub fn rmse_map(a: &TactileFrame, b: &TactileFrame) -> Result<RmseMap> {
    a.same_dims(b)?;
    let values = a
        .pixels()
        .chunks_exact(3)
        .zip(b.pixels().chunks_exact(3))
        .map(|(p, q)| {
            let s: u32 = p
                .iter()
                .zip(q)
                .map(|(&x, &y)| {
                    let d = x.abs_diff(y) as u32;
                    d * d
                })
                .sum();
            (s as f64 / 3.0).sqrt()
        })
        .collect();
    Ok(RmseMap {
        width: a.width(),
        height: a.height(),
        values,
    })
}

impl RmseMap {
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Gray level per pixel is `round(value × scale)`, saturating at 255;
    /// `scale = 255 / max` (1 for an all-zero map).
    pub fn scale(&self) -> f64 {
        let m = self.max();
        if m > 0.0 {
            255.0 / m
        } else {
            1.0
        }
    }

    pub fn to_gray(&self) -> Vec<u8> {
        let s = self.scale();
        self.values.iter().map(|v| (v * s).round().min(255.0) as u8).collect()
    }

    pub fn write_pgm(&self, path: impl AsRef<Path>) -> Result<()> {
        let comments = vec![
            "per-pixel RMSE".to_string(),
            format!("scale {:.9}", self.scale()),
            format!("max_rmse {:.9}", self.max()),
        ];
        save_pgm(self.width, self.height, &self.to_gray(), &comments, path)
    }

    /// Raw matrix, one CSV row per image row.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let write = || -> std::io::Result<()> {
            let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
            for row in self.values.chunks_exact(self.width) {
                let line: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
                writeln!(f, "{}", line.join(","))?;
            }
            f.flush()
        };
        write().map_err(|source| Error::UnwritableOutput {
            path: path.to_owned(),
            source,
        })
    }
}

/// One rate-distortion measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RdPoint {
    pub bpp: f64,
    /// dB; `f64::INFINITY` for exact reconstruction.
    pub psnr: f64,
    pub ms_ssim: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RdCurve {
    pub label: String,
    pub points: Vec<RdPoint>,
}

impl RdCurve {
    /// Sorts points by bpp (then PSNR, then MS-SSIM), so the result does not
    /// depend on input order.
    pub fn new(label: impl Into<String>, mut points: Vec<RdPoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        for p in &points {
            if !(p.bpp > 0.0) || p.bpp.is_infinite() {
                return Err(Error::NonPositiveInput("bpp"));
            }
            if let Some(s) = p.ms_ssim {
                if !(0.0..=1.0).contains(&s) {
                    return Err(Error::InvalidArgument(format!("ms_ssim {s} outside [0, 1]")));
                }
            }
        }
        points.sort_by(|a, b| {
            a.bpp
                .total_cmp(&b.bpp)
                .then(a.psnr.total_cmp(&b.psnr))
                .then(a.ms_ssim.unwrap_or(-1.0).total_cmp(&b.ms_ssim.unwrap_or(-1.0)))
        });
        Ok(Self {
            label: label.into(),
            points,
        })
    }

    pub fn bpps(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.bpp).collect()
    }
}
