//! Benchmark grid execution: every (codec, dataset, quality) becomes one row.

mod report;
pub mod svg;

pub use report::{emit_report, format_results_csv, RESULTS_HEADER};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::{Codec, CodecKind, CodecRegistry, CodecSpec, FrameShape};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::frame::TactileFrame;
use crate::metrics;

/// Frames encoded and decoded before timing starts.
pub const WARMUP_FRAMES: usize = 2;
/// Timed repetitions; the median is reported.
pub const TIMING_RUNS: usize = 3;
/// Fewest frames accepted by [`time_codec`].
pub const MIN_TIMING_FRAMES: usize = 10;

/// A codec given by registry id, or an external program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CodecEntry {
    Id(String),
    External(CodecSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    pub datasets: Vec<PathBuf>,
    pub codecs: Vec<CodecEntry>,
    #[serde(default)]
    pub threads: Option<usize>,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Run timing passes one job at a time after the parallel grid.
    #[serde(default)]
    pub serial_timing: bool,
    /// BD-Rate anchor; defaults to the first lossy codec by id.
    #[serde(default)]
    pub anchor: Option<String>,
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let c: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        if c.datasets.is_empty() {
            return Err(Error::Config("no datasets".into()));
        }
        if c.codecs.is_empty() {
            return Err(Error::Config("no codecs".into()));
        }
        if c.threads == Some(0) {
            return Err(Error::Config("threads must be at least 1".into()));
        }
        Ok(c)
    }

    /// Reads a config file; relative dataset and output paths resolve against
    /// its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut c = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for d in &mut c.datasets {
            if d.is_relative() {
                *d = base.join(&*d);
            }
        }
        if let Some(o) = &mut c.out {
            if o.is_relative() {
                *o = base.join(&*o);
            }
        }
        Ok(c)
    }

    /// Built-ins plus the config's external codecs, and the ids in config order.
    pub fn registry(&self) -> Result<(CodecRegistry, Vec<String>)> {
        let mut reg = CodecRegistry::with_builtins();
        let mut ids = Vec::new();
        for entry in &self.codecs {
            let id = match entry {
                CodecEntry::Id(id) => {
                    reg.get(id)?;
                    id.clone()
                }
                CodecEntry::External(spec) => {
                    reg.register_external(spec.clone())?;
                    spec.id.clone()
                }
            };
            if ids.contains(&id) {
                return Err(Error::DuplicateCodec(id));
            }
            ids.push(id);
        }
        Ok((reg, ids))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    LosslessViolation,
    ExternalFailure,
    CodecError,
}

impl RowStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RowStatus::Ok => "ok",
            RowStatus::LosslessViolation => "lossless_violation",
            RowStatus::ExternalFailure => "external_failure",
            RowStatus::CodecError => "codec_error",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub enc_kbps: f64,
    pub dec_kbps: f64,
    pub enc_fps: f64,
    pub dec_fps: f64,
    /// Seconds spent in the timed encode pass.
    pub enc_s: f64,
    pub dec_s: f64,
    /// `false` when the dataset had too few frames for the full protocol and
    /// a single untimed-warm-up pass was measured instead.
    pub full_protocol: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    /// Σ bits / Σ raw bytes over the dataset.
    pub bits_per_byte: f64,
    /// Mean of the per-frame bits/Byte.
    pub bits_per_byte_frame_mean: f64,
    pub ratio: f64,
    pub bpp: f64,
    /// Mean per-frame PSNR; infinite for exact reconstructions.
    pub psnr_db: f64,
    pub ms_ssim: Option<f64>,
    pub ms_ssim_scales: Option<usize>,
    pub total_bits: u64,
    pub raw_bytes: u64,
    pub timing: Timing,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub codec: String,
    pub kind: CodecKind,
    pub dataset: String,
    pub quality: String,
    pub frames: usize,
    pub status: RowStatus,
    pub message: Option<String>,
    pub metrics: Option<RowMetrics>,
    /// Wall-clock seconds for the whole job.
    pub wall_s: f64,
}

impl BenchResult {
    pub fn is_ok(&self) -> bool {
        self.status == RowStatus::Ok
    }
}

#[derive(Debug, Clone)]
pub struct BenchOutcome {
    pub results: Vec<BenchResult>,
    /// `|codecs| × |datasets| × |qualities per codec|`.
    pub grid_size: usize,
    pub anchor: Option<String>,
}

impl BenchOutcome {
    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| !r.is_ok()).count()
    }
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn rates(frames: usize, raw: usize, secs: f64) -> (f64, f64) {
    let s = secs.max(1e-9);
    (raw as f64 / 1024.0 / s, frames as f64 / s)
}

/// Encode and decode speed: warm-up on the first two frames, then the median
/// of three timed passes over the rest.
pub fn time_codec(codec: &dyn Codec, frames: &[TactileFrame], quality: &str) -> Result<Timing> {
    if frames.len() < MIN_TIMING_FRAMES {
        return Err(Error::TooFewFrames {
            needed: MIN_TIMING_FRAMES,
            found: frames.len(),
        });
    }
    for f in &frames[..WARMUP_FRAMES] {
        codec.decode(&codec.encode(f, quality)?, &f.into())?;
    }
    let timed = &frames[WARMUP_FRAMES..];
    let shapes: Vec<FrameShape> = timed.iter().map(FrameShape::from).collect();
    let mut enc = Vec::with_capacity(TIMING_RUNS);
    let mut dec = Vec::with_capacity(TIMING_RUNS);
    for _ in 0..TIMING_RUNS {
        let t = Instant::now();
        let streams = timed.iter().map(|f| codec.encode(f, quality)).collect::<Result<Vec<_>>>()?;
        enc.push(t.elapsed().as_secs_f64());
        let t = Instant::now();
        for (s, shape) in streams.iter().zip(&shapes) {
            codec.decode(s, shape)?;
        }
        dec.push(t.elapsed().as_secs_f64());
    }
    let raw: usize = timed.iter().map(TactileFrame::raw_len).sum();
    let (enc_s, dec_s) = (median(enc), median(dec));
    let (enc_kbps, enc_fps) = rates(timed.len(), raw, enc_s);
    let (dec_kbps, dec_fps) = rates(timed.len(), raw, dec_s);
    Ok(Timing {
        enc_kbps,
        dec_kbps,
        enc_fps,
        dec_fps,
        enc_s,
        dec_s,
        full_protocol: true,
    })
}

fn failure_status(e: &Error) -> RowStatus {
    match e {
        Error::ExternalCommandFailure(_) => RowStatus::ExternalFailure,
        Error::LosslessViolation { .. } => RowStatus::LosslessViolation,
        _ => RowStatus::CodecError,
    }
}

/// Compression pass over a dataset; also returns single-pass timings.
fn measure(codec: &dyn Codec, frames: &[TactileFrame], quality: &str) -> Result<RowMetrics> {
    let lossless = codec.kind().is_lossless();
    let mut total_bits = 0u64;
    let mut raw = 0u64;
    let mut pixels = 0u64;
    let mut frame_bpb = 0.0;
    let mut psnr_sum = 0.0;
    let mut ssim_sum = Some(0.0);
    let mut scales: Option<usize> = None;
    let (mut enc_s, mut dec_s) = (0.0, 0.0);
    for (i, f) in frames.iter().enumerate() {
        let t = Instant::now();
        let bytes = codec.encode(f, quality)?;
        enc_s += t.elapsed().as_secs_f64();
        let t = Instant::now();
        let back = codec.decode(&bytes, &f.into())?;
        dec_s += t.elapsed().as_secs_f64();
        if lossless && back != *f {
            return Err(Error::LosslessViolation {
                codec: codec.id().to_string(),
                frame: i,
            });
        }
        let bits = bytes.len() as u64 * 8;
        total_bits += bits;
        raw += f.raw_len() as u64;
        pixels += (f.width() * f.height()) as u64;
        frame_bpb += metrics::bits_per_byte(bits, f.raw_len() as u64)?;
        psnr_sum += metrics::psnr(f, &back)?;
        ssim_sum = match (ssim_sum, metrics::ms_ssim_with_scales(f, &back)) {
            (Some(s), Ok((v, m))) => {
                scales = Some(scales.map_or(m, |p: usize| p.min(m)));
                Some(s + v)
            }
            (_, Err(Error::TooSmallForAnyScale(..))) | (None, _) => None,
            (_, Err(e)) => return Err(e),
        };
    }
    let n = frames.len() as f64;
    let bits_per_byte = metrics::bits_per_byte(total_bits, raw)?;
    let (enc_kbps, enc_fps) = rates(frames.len(), raw as usize, enc_s);
    let (dec_kbps, dec_fps) = rates(frames.len(), raw as usize, dec_s);
    let ms_ssim = ssim_sum.map(|s| (s / n).clamp(0.0, 1.0));
    Ok(RowMetrics {
            bits_per_byte,
            bits_per_byte_frame_mean: frame_bpb / n,
            ratio: metrics::compression_ratio(bits_per_byte)?,
            bpp: total_bits as f64 / pixels as f64,
            psnr_db: psnr_sum / n,
            ms_ssim,
            ms_ssim_scales: ms_ssim.and(scales),
            total_bits,
            raw_bytes: raw,
            timing: Timing {
                enc_kbps,
                dec_kbps,
                enc_fps,
                dec_fps,
                enc_s,
                dec_s,
                full_protocol: false,
            },
        })
}

struct Job<'a> {
    codec: std::sync::Arc<dyn Codec>,
    dataset: &'a str,
    frames: &'a [TactileFrame],
    quality: String,
}

fn run_job(job: &Job<'_>, with_timing: bool) -> BenchResult {
    let start = Instant::now();
    let mut row = BenchResult {
        codec: job.codec.id().to_string(),
        kind: job.codec.kind(),
        dataset: job.dataset.to_string(),
        quality: job.quality.clone(),
        frames: job.frames.len(),
        status: RowStatus::Ok,
        message: None,
        metrics: None,
        wall_s: 0.0,
    };
    match measure(job.codec.as_ref(), job.frames, &job.quality) {
        Ok(mut m) => {
            if with_timing && job.frames.len() >= MIN_TIMING_FRAMES {
                match time_codec(job.codec.as_ref(), job.frames, &job.quality) {
                    Ok(t) => m.timing = t,
                    Err(e) => {
                        row.status = failure_status(&e);
                        row.message = Some(e.to_string());
                    }
                }
            }
            if row.status == RowStatus::Ok {
                row.metrics = Some(m);
            }
        }
        Err(e) => {
            row.status = failure_status(&e);
            row.message = Some(e.to_string());
        }
    }
    row.wall_s = start.elapsed().as_secs_f64();
    row
}

fn row_key(r: &BenchResult) -> (&str, &str, &str) {
    (&r.codec, &r.dataset, &r.quality)
}

/// Runs the whole grid on a pool of `config.threads` workers. Rows come back
/// sorted by (codec, dataset, quality) whatever the execution order.
pub fn run_benchmark(config: &BenchConfig) -> Result<BenchOutcome> {
    let (registry, ids) = config.registry()?;
    let datasets: Vec<Dataset> = config.datasets.iter().map(Dataset::load).collect::<Result<_>>()?;
    let frames: Vec<Vec<TactileFrame>> = datasets
        .iter()
        .map(|d| d.frames.iter().map(|f| f.frame.clone()).collect())
        .collect();
    for (d, f) in datasets.iter().zip(&frames) {
        if f.is_empty() {
            return Err(Error::Config(format!("dataset {} has no frames", d.name)));
        }
    }
    let mut names: Vec<&str> = datasets.iter().map(|d| d.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config("two datasets share a name".into()));
    }

    let mut jobs = Vec::new();
    for id in &ids {
        let codec = registry.get(id)?;
        for (d, f) in datasets.iter().zip(&frames) {
            for q in codec.qualities() {
                jobs.push(Job {
                    codec: codec.clone(),
                    dataset: &d.name,
                    frames: f,
                    quality: q,
                });
            }
        }
    }
    let grid_size = jobs.len();

    let threads = config
        .threads
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;

    let (tx, rx) = std::sync::mpsc::channel();
    pool.install(|| {
        jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, job)| {
            tx.send((i, run_job(job, !config.serial_timing))).expect("collector alive");
        })
    });
    let mut results: Vec<(usize, BenchResult)> = rx.into_iter().collect();

    if config.serial_timing {
        let serial = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        serial.install(|| {
            for (i, row) in results.iter_mut() {
                let job = &jobs[*i];
                if let (Some(m), true) = (row.metrics.as_mut(), job.frames.len() >= MIN_TIMING_FRAMES) {
                    match time_codec(job.codec.as_ref(), job.frames, &job.quality) {
                        Ok(t) => m.timing = t,
                        Err(e) => {
                            row.status = failure_status(&e);
                            row.message = Some(e.to_string());
                            row.metrics = None;
                        }
                    }
                }
            }
        });
    }

    let mut results: Vec<BenchResult> = results.into_iter().map(|(_, r)| r).collect();
    results.sort_by(|a, b| row_key(a).cmp(&row_key(b)));

    let anchor = match &config.anchor {
        Some(a) => {
            registry.get(a)?;
            Some(a.clone())
        }
        None => {
            let mut lossy: Vec<&String> = ids
                .iter()
                .filter(|id| registry.get(id).is_ok_and(|c| !c.kind().is_lossless()))
                .collect();
            lossy.sort();
            lossy.first().map(|s| s.to_string())
        }
    };
    Ok(BenchOutcome {
        results,
        grid_size,
        anchor,
    })
}
