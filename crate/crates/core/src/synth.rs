//! Deterministic synthetic tactile corpora.
//!
//! The real datasets are large downloads; these generators produce frames
//! with the same shapes and qualitatively similar statistics (smooth
//! illumination fields, localized contact imprints, sensor noise) for tests,
//! benchmarks and demos.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use std::path::{Path, PathBuf};

use crate::dataset::{DatasetManifest, ManifestEntry, Split};
use crate::error::{Error, Result};
use crate::force::{ForceImageMapping, ForceRecord};
use crate::frame::{save_ppm, SensorKind, TactileFrame};

/// (width, height) of the benchmark datasets, plus the ObjTac taxel tile
/// (5 rows of 12 taxels).
pub const TABLE1_RESOLUTIONS: [(usize, usize); 4] = [(640, 480), (120, 160), (240, 320), (12, 5)];

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn to_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Uniform white noise.
pub fn noise_frame(w: usize, h: usize, seed: u64) -> TactileFrame {
    let mut px = vec![0u8; w * h * 3];
    rng(seed).fill_bytes(&mut px);
    TactileFrame::visuo(w, h, px).expect("valid dims")
}

/// Smooth per-channel gradients and low-frequency waves plus Gaussian noise
/// of standard deviation `noise_sigma`.
pub fn smooth_frame(w: usize, h: usize, noise_sigma: f64, seed: u64) -> TactileFrame {
    let mut r = rng(seed);
    let params: Vec<[f64; 6]> = (0..3)
        .map(|_| {
            [
                r.gen_range(60.0..190.0),
                r.gen_range(-60.0..60.0),
                r.gen_range(-60.0..60.0),
                r.gen_range(5.0..30.0),
                r.gen_range(0.5..2.5),
                r.gen_range(0.0..std::f64::consts::TAU),
            ]
        })
        .collect();
    let noise = Normal::new(0.0, noise_sigma.max(1e-12)).expect("finite sigma");
    let mut px = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        let v = y as f64 / h.max(2) as f64;
        for x in 0..w {
            let u = x as f64 / w.max(2) as f64;
            for p in &params {
                let wave = p[3] * (std::f64::consts::TAU * p[4] * (u + 0.7 * v) + p[5]).sin();
                let base = p[0] + p[1] * (u - 0.5) + p[2] * (v - 0.5) + wave;
                let n = if noise_sigma > 0.0 { noise.sample(&mut r) } else { 0.0 };
                px.push(to_u8(base + n));
            }
        }
    }
    TactileFrame::visuo(w, h, px).expect("valid dims")
}

/// A GelSight/DIGIT-like frame: tinted illumination field with a few shaded
/// contact imprints and mild sensor noise.
pub fn tactile_frame(w: usize, h: usize, seed: u64) -> TactileFrame {
    let mut r = rng(seed);
    let tint = [r.gen_range(90.0..170.0), r.gen_range(90.0..170.0), r.gen_range(90.0..170.0)];
    let light = [r.gen_range(-40.0..40.0), r.gen_range(-40.0..40.0)];
    let contacts: Vec<[f64; 4]> = (0..r.gen_range(1..4))
        .map(|_| {
            [
                r.gen_range(0.2..0.8) * w as f64,
                r.gen_range(0.2..0.8) * h as f64,
                r.gen_range(0.05..0.2) * w.min(h).max(4) as f64,
                r.gen_range(20.0..70.0),
            ]
        })
        .collect();
    let noise = Normal::new(0.0, 1.5).expect("finite sigma");
    let mut px = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let (fx, fy) = (x as f64, y as f64);
            let u = fx / w.max(2) as f64 - 0.5;
            let v = fy / h.max(2) as f64 - 0.5;
            let mut shade = [0.0f64; 3];
            for c in &contacts {
                let dx = (fx - c[0]) / c[2];
                let dy = (fy - c[1]) / c[2];
                let g = (-(dx * dx + dy * dy)).exp();
                // gradient-shaded bump, lit from different sides per channel
                shade[0] += c[3] * g * (1.0 + dx);
                shade[1] += c[3] * g * (1.0 + dy);
                shade[2] += c[3] * g * (1.0 - 0.5 * dx - 0.5 * dy);
            }
            for ch in 0..3 {
                let base = tint[ch] + light[0] * u + light[1] * v;
                px.push(to_u8(base + shade[ch] + noise.sample(&mut r)));
            }
        }
    }
    TactileFrame::visuo(w, h, px).expect("valid dims")
}

/// `t` records of `taxels` smoothly varying 3-axis forces (Newtons), 200 Hz.
pub fn force_sequence(t: usize, taxels: usize, seed: u64) -> Vec<ForceRecord> {
    let mut r = rng(seed);
    let phase: Vec<[f64; 3]> = (0..taxels)
        .map(|_| [r.gen_range(0.0..6.3), r.gen_range(0.0..6.3), r.gen_range(0.0..6.3)])
        .collect();
    let noise = Normal::new(0.0, 0.01).expect("finite sigma");
    (0..t)
        .map(|i| {
            let time = i as f64 / 200.0;
            ForceRecord {
                timestamp: time,
                forces: phase
                    .iter()
                    .map(|p| {
                        [
                            0.8 * (3.0 * time + p[0]).sin() + noise.sample(&mut r),
                            0.8 * (2.0 * time + p[1]).cos() + noise.sample(&mut r),
                            1.5 + 1.0 * (1.5 * time + p[2]).sin() + noise.sample(&mut r),
                        ]
                    })
                    .collect(),
            }
        })
        .collect()
}

/// Mapping covering ±5 N on every axis.
pub fn default_force_mapping() -> ForceImageMapping {
    ForceImageMapping::from_full_scale([10.0; 3]).expect("positive range")
}

/// A named set of frames every codec test runs against.
pub fn fixtures() -> Vec<(String, TactileFrame)> {
    let force = crate::force::force_to_frame(&force_sequence(200, 60, 5), &default_force_mapping())
        .expect("consistent sequence");
    let tile = crate::force::force_to_frame(&force_sequence(5, 12, 6), &default_force_mapping())
        .expect("consistent sequence");
    vec![
        ("touch_640x480".into(), tactile_frame(640, 480, 1)),
        ("objectfolder_120x160".into(), tactile_frame(120, 160, 2)),
        ("ssvtp_240x320".into(), tactile_frame(240, 320, 3)),
        ("ycb_slide_320x240".into(), smooth_frame(320, 240, 2.0, 4)),
        ("gradient_64x64".into(), smooth_frame(64, 64, 0.0, 7)),
        ("objtac_force_60x200".into(), force),
        ("objtac_tile_12x5".into(), tile),
    ]
}

/// Frames of one class share a template; individual frames add a random
/// offset and noise. `spread` controls the noise relative to the class gap.
pub fn class_frame(class: usize, w: usize, h: usize, spread: f64, seed: u64) -> TactileFrame {
    let mut r = rng(seed);
    let noise = Normal::new(0.0, spread.max(1e-12)).expect("finite sigma");
    let offset = r.gen_range(-spread..=spread.max(1e-12));
    let mut px = Vec::with_capacity(w * h * 3);
    for y in 0..h {
        for x in 0..w {
            let u = x as f64 / w.max(2) as f64;
            let v = y as f64 / h.max(2) as f64;
            for ch in 0..3 {
                let k = (class * 3 + ch) as f64;
                let template = 128.0 + 60.0 * (std::f64::consts::TAU * ((k % 3.0 + 1.0) * u + (k % 2.0) * v) + k).sin();
                px.push(to_u8(template + offset + noise.sample(&mut r)));
            }
        }
    }
    TactileFrame::visuo(w, h, px).expect("valid dims")
}

/// One frame of a synthetic dataset with its label and trajectory.
#[derive(Debug, Clone)]
pub struct SynthEntry {
    pub label: String,
    pub trajectory_id: String,
    pub frame: TactileFrame,
}

/// Writes each frame as `<dir>/frames/NNNNN.ppm` plus `<dir>/manifest.json`
/// (relative paths, splits unassigned) and returns the manifest path.
pub fn write_dataset(dir: &Path, name: &str, entries: &[SynthEntry]) -> Result<PathBuf> {
    let frames_dir = dir.join("frames");
    std::fs::create_dir_all(&frames_dir).map_err(|source| Error::UnwritableOutput {
        path: frames_dir.clone(),
        source,
    })?;
    let mut manifest = DatasetManifest {
        name: name.to_string(),
        sensor_kind: SensorKind::VisuoTactile,
        entries: Vec::with_capacity(entries.len()),
    };
    for (i, e) in entries.iter().enumerate() {
        let rel = format!("frames/{i:05}.ppm");
        save_ppm(&e.frame, dir.join(&rel))?;
        manifest.entries.push(ManifestEntry {
            path: rel,
            label: e.label.clone(),
            trajectory_id: e.trajectory_id.clone(),
            split: Split::Unassigned,
        });
    }
    let path = dir.join("manifest.json");
    manifest.save(&path)?;
    Ok(path)
}

/// `n` noise-free smooth gradient frames, ten per trajectory.
pub fn gradient_corpus(n: usize, w: usize, h: usize, seed: u64) -> Vec<SynthEntry> {
    (0..n)
        .map(|i| SynthEntry {
            label: "gradient".into(),
            trajectory_id: format!("t{}", i / 10),
            frame: smooth_frame(w, h, 0.5, seed.wrapping_add(i as u64)),
        })
        .collect()
}

/// `classes × trajectories × per_trajectory` class frames; trajectory ids are
/// unique per class.
pub fn class_corpus(
    classes: usize,
    trajectories: usize,
    per_trajectory: usize,
    (w, h): (usize, usize),
    spread: f64,
    seed: u64,
) -> Vec<SynthEntry> {
    let mut out = Vec::with_capacity(classes * trajectories * per_trajectory);
    for c in 0..classes {
        for t in 0..trajectories {
            for j in 0..per_trajectory {
                let s = seed
                    .wrapping_mul(1_000_003)
                    .wrapping_add(((c * trajectories + t) * per_trajectory + j) as u64);
                out.push(SynthEntry {
                    label: format!("class{c}"),
                    trajectory_id: format!("c{c}-t{t}"),
                    frame: class_frame(c, w, h, spread, s),
                });
            }
        }
    }
    out
}
