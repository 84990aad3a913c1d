//! Force-sensor logs and the force → RGB image mapping.
//!
//! A force-stacked image has one row per timestamp and one column per taxel;
//! the (fx, fy, fz) reading of a taxel becomes the (R, G, B) of its pixel.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{self, SensorKind, TactileFrame, CHANNELS};

#[derive(Debug, Clone, PartialEq)]
pub struct ForceRecord {
    pub timestamp: f64,
    /// One (fx, fy, fz) vector per taxel, in Newtons.
    pub forces: Vec<[f64; 3]>,
}

/// Per-axis affine quantizer: `level = clamp(round(f / scale + offset), 0, 255)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForceImageMapping {
    pub scale: [f64; 3],
    pub offset: [f64; 3],
}

impl ForceImageMapping {
    pub fn new(scale: [f64; 3], offset: [f64; 3]) -> Result<Self> {
        let m = Self { scale, offset };
        m.validate()?;
        Ok(m)
    }

    /// `range` Newtons per axis spread over the 255 levels, zero force at 128.
    pub fn from_full_scale(range: [f64; 3]) -> Result<Self> {
        Self::new(range.map(|r| r / 255.0), [128.0; 3])
    }

    pub fn validate(&self) -> Result<()> {
        if self.scale.iter().any(|&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::InvalidMapping(format!(
                "scale must be positive and finite, got {:?}",
                self.scale
            )));
        }
        if self.offset.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidMapping("offset must be finite".into()));
        }
        Ok(())
    }

    pub fn quantize(&self, axis: usize, force: f64) -> u8 {
        (force / self.scale[axis] + self.offset[axis]).round().clamp(0.0, 255.0) as u8
    }

    pub fn dequantize(&self, axis: usize, level: u8) -> f64 {
        (level as f64 - self.offset[axis]) * self.scale[axis]
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::UnreadableFile {
            path: path.to_owned(),
            source,
        })?;
        let m: Self = serde_json::from_str(&text).map_err(|e| Error::InvalidMapping(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(self).expect("mapping serializes");
        fs::write(path, text).map_err(|source| Error::UnwritableOutput {
            path: path.to_owned(),
            source,
        })
    }
}

/// Stacks `records` into a T×N force image (height T, width N).
pub fn force_to_frame(records: &[ForceRecord], mapping: &ForceImageMapping) -> Result<TactileFrame> {
    mapping.validate()?;
    let first = records.first().ok_or(Error::EmptySequence)?;
    let taxels = first.forces.len();
    if taxels == 0 {
        return Err(Error::InconsistentTaxelCount {
            expected: 1,
            found: 0,
            index: 0,
        });
    }
    let mut pixels = Vec::with_capacity(records.len() * taxels * CHANNELS);
    for (index, rec) in records.iter().enumerate() {
        if rec.forces.len() != taxels {
            return Err(Error::InconsistentTaxelCount {
                expected: taxels,
                found: rec.forces.len(),
                index,
            });
        }
        for f in &rec.forces {
            pixels.extend((0..3).map(|axis| mapping.quantize(axis, f[axis])));
        }
    }
    Ok(TactileFrame::new(taxels, records.len(), pixels, SensorKind::ForceStacked)?.with_mapping(*mapping))
}

/// Inverse of [`force_to_frame`]. The image carries no timestamps, so row `t`
/// is given timestamp `t` (in rows).
pub fn frame_to_force(frame: &TactileFrame, mapping: &ForceImageMapping) -> Result<Vec<ForceRecord>> {
    if frame.sensor_kind() != SensorKind::ForceStacked {
        return Err(Error::WrongSensorKind);
    }
    mapping.validate()?;
    let records = frame
        .pixels()
        .chunks_exact(frame.width() * CHANNELS)
        .enumerate()
        .map(|(t, row)| ForceRecord {
            timestamp: t as f64,
            forces: row
                .chunks_exact(CHANNELS)
                .map(|px| [0, 1, 2].map(|axis| mapping.dequantize(axis, px[axis])))
                .collect(),
        })
        .collect();
    Ok(records)
}

/// Checks the sequence invariants: constant taxel count, increasing time.
pub fn validate_sequence(records: &[ForceRecord]) -> Result<()> {
    let first = records.first().ok_or(Error::EmptySequence)?;
    for (i, r) in records.iter().enumerate() {
        if r.forces.len() != first.forces.len() {
            return Err(Error::InconsistentTaxelCount {
                expected: first.forces.len(),
                found: r.forces.len(),
                index: i,
            });
        }
        if !(r.timestamp >= 0.0) || (i > 0 && r.timestamp <= records[i - 1].timestamp) {
            return Err(Error::NonIncreasingTimestamp(i));
        }
    }
    Ok(())
}

/// Reads a force log with header `t,fx_0..fx_{N-1},fy_0..,fz_0..`.
pub fn read_force_csv(path: impl AsRef<Path>) -> Result<Vec<ForceRecord>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::UnreadableFile {
        path: path.to_owned(),
        source,
    })?;
    parse_force_csv(&text)
}

pub fn parse_force_csv(text: &str) -> Result<Vec<ForceRecord>> {
    let bad = |msg: String| Error::MalformedForceLog(msg);
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(text.as_bytes());
    let header = rdr.headers().map_err(|e| bad(e.to_string()))?.clone();
    let cols = header.len();
    if cols < 4 || (cols - 1) % 3 != 0 || &header[0] != "t" {
        return Err(bad(format!("header has {cols} columns; expected t followed by 3N force columns")));
    }
    let n = (cols - 1) / 3;
    for (axis, name) in ["fx", "fy", "fz"].iter().enumerate() {
        for i in 0..n {
            let want = format!("{name}_{i}");
            if header[1 + axis * n + i] != want {
                return Err(bad(format!("column {} is {:?}, expected {want}", 1 + axis * n + i, &header[1 + axis * n + i])));
            }
        }
    }
    let mut records = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row.map_err(|e| bad(e.to_string()))?;
        let num = |i: usize| -> Result<f64> {
            row[i]
                .trim()
                .parse::<f64>()
                .map_err(|_| bad(format!("row {}: {:?} is not a number", line + 1, &row[i])))
        };
        let timestamp = num(0)?;
        let mut forces = vec![[0.0; 3]; n];
        for axis in 0..3 {
            for (i, f) in forces.iter_mut().enumerate() {
                f[axis] = num(1 + axis * n + i)?;
            }
        }
        records.push(ForceRecord { timestamp, forces });
    }
    validate_sequence(&records)?;
    Ok(records)
}

pub fn format_force_csv(records: &[ForceRecord]) -> String {
    let n = records.first().map_or(0, |r| r.forces.len());
    let mut out = String::from("t");
    for name in ["fx", "fy", "fz"] {
        for i in 0..n {
            out.push_str(&format!(",{name}_{i}"));
        }
    }
    out.push('\n');
    for r in records {
        out.push_str(&r.timestamp.to_string());
        for axis in 0..3 {
            for f in &r.forces {
                out.push(',');
                out.push_str(&f[axis].to_string());
            }
        }
        out.push('\n');
    }
    out
}

/// Sidecar location for a frame file: `frame.ppm` → `frame.map.json`.
pub fn sidecar_path(frame_path: &Path) -> PathBuf {
    frame_path.with_extension("map.json")
}

/// Loads a raster and, when a mapping sidecar sits next to it, marks it
/// force-stacked.
pub fn load_frame_with_sidecar(path: impl AsRef<Path>) -> Result<TactileFrame> {
    let path = path.as_ref();
    let frame = frame::load_frame(path)?;
    let sidecar = sidecar_path(path);
    if sidecar.exists() {
        Ok(frame.with_mapping(ForceImageMapping::load(sidecar)?))
    } else {
        Ok(frame)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit() -> ForceImageMapping {
        ForceImageMapping::new([1.0; 3], [128.0; 3]).unwrap()
    }

    #[test]
    fn dims_follow_records_and_taxels() {
        let recs: Vec<_> = (0..200)
            .map(|t| ForceRecord {
                timestamp: t as f64 / 200.0,
                forces: vec![[0.0; 3]; 60],
            })
            .collect();
        let f = force_to_frame(&recs, &unit()).unwrap();
        assert_eq!((f.width(), f.height(), f.channels()), (60, 200, 3));
        assert_eq!(f.sensor_kind(), SensorKind::ForceStacked);
    }

    #[test]
    fn zero_force_hits_offset() {
        let recs = [ForceRecord {
            timestamp: 0.0,
            forces: vec![[0.0; 3]; 4],
        }];
        let f = force_to_frame(&recs, &unit()).unwrap();
        assert!(f.pixels().iter().all(|&v| v == 128));
    }

    #[test]
    fn hand_evaluated_pixel() {
        let m = ForceImageMapping::new([0.1; 3], [128.0; 3]).unwrap();
        let recs = [
            ForceRecord {
                timestamp: 0.0,
                forces: vec![[1.0, -1.0, 0.5]],
            },
            ForceRecord {
                timestamp: 0.005,
                forces: vec![[1.0, -1.0, 0.5]],
            },
        ];
        let f = force_to_frame(&recs, &m).unwrap();
        assert_eq!(f.pixel(0, 0), [138, 118, 133]);
        assert_eq!(f.pixel(0, 1), [138, 118, 133]);
    }

    #[test]
    fn errors() {
        assert!(matches!(force_to_frame(&[], &unit()), Err(Error::EmptySequence)));
        let recs = [
            ForceRecord {
                timestamp: 0.0,
                forces: vec![[0.0; 3]; 2],
            },
            ForceRecord {
                timestamp: 1.0,
                forces: vec![[0.0; 3]; 3],
            },
        ];
        assert!(matches!(
            force_to_frame(&recs, &unit()),
            Err(Error::InconsistentTaxelCount { index: 1, .. })
        ));
        let visuo = TactileFrame::filled(2, 2, [1, 2, 3]).unwrap();
        assert!(matches!(frame_to_force(&visuo, &unit()), Err(Error::WrongSensorKind)));
        assert!(ForceImageMapping::new([0.0, 1.0, 1.0], [0.0; 3]).is_err());
    }

    #[test]
    fn all_128_is_zero_force() {
        let f = TactileFrame::filled(3, 2, [128; 3]).unwrap().with_mapping(unit());
        let recs = frame_to_force(&f, &unit()).unwrap();
        assert_eq!(recs.len(), 2);
        assert!(recs.iter().flat_map(|r| r.forces.iter()).all(|v| *v == [0.0; 3]));
    }

    #[test]
    fn level_grid_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let scale = [0.0; 3].map(|_| rng.gen_range(1e-3..10.0));
            let offset = [0.0; 3].map(|_| rng.gen_range(-50.0..300.0));
            let m = ForceImageMapping::new(scale, offset).unwrap();
            for axis in 0..3 {
                for level in 0..=255u8 {
                    assert_eq!(m.quantize(axis, m.dequantize(axis, level)), level);
                }
            }
        }
    }

    #[test]
    fn csv_round_trip() {
        let recs = vec![
            ForceRecord {
                timestamp: 0.0,
                forces: vec![[0.5, -1.25, 3.0], [0.0, 0.0, 0.125]],
            },
            ForceRecord {
                timestamp: 0.005,
                forces: vec![[1.5, 2.0, -3.0], [7.0, 8.0, 9.0]],
            },
        ];
        let text = format_force_csv(&recs);
        assert!(text.starts_with("t,fx_0,fx_1,fy_0,fy_1,fz_0,fz_1\n"));
        assert_eq!(parse_force_csv(&text).unwrap(), recs);
    }

    #[test]
    fn csv_rejects_bad_input() {
        assert!(parse_force_csv("t,fx_0,fy_0\n0,1,2\n").is_err());
        assert!(parse_force_csv("t,fx_0,fy_0,fz_0\n0,1,2,x\n").is_err());
        assert!(matches!(
            parse_force_csv("t,fx_0,fy_0,fz_0\n1,0,0,0\n0.5,0,0,0\n"),
            Err(Error::NonIncreasingTimestamp(1))
        ));
    }
}
