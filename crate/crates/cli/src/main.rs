use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use taco_core::bench::{emit_report, run_benchmark, BenchConfig};
use taco_core::codec::{decode_container, CodecRegistry, LOSSLESS};
use taco_core::dataset::{split_dataset, Dataset, DatasetManifest, Split};
use taco_core::downstream::{accuracy_under_compression, write_accuracy, Classifier, DEFAULT_K};
use taco_core::force::{force_to_frame, read_force_csv, sidecar_path, load_frame_with_sidecar, ForceImageMapping};
use taco_core::frame::save_ppm;
use taco_core::metrics::{bd_rate_with, BdQuality, RdCurve, RdPoint};
use taco_core::{synth, Error};

mod bdcsv;

/// Tactile data compression toolkit.
#[derive(Parser)]
#[command(name = "taco", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    Psnr,
    MsSsim,
}

#[derive(Clone, Copy, ValueEnum)]
enum ClassifierArg {
    Knn,
    Linear,
    Both,
}

#[derive(Clone, Copy, ValueEnum)]
enum SynthKind {
    /// Smooth low-noise gradients, one label.
    Gradient,
    /// Separable class templates with per-frame noise.
    Classes,
}

#[derive(Subcommand)]
enum Command {
    /// Compress one frame into a self-describing container.
    Encode {
        #[arg(long)]
        codec: String,
        /// Quality token; defaults to the codec's finest.
        #[arg(long)]
        quality: Option<String>,
        input: PathBuf,
        output: PathBuf,
    },
    /// Decode a container back to a PPM frame.
    Decode { input: PathBuf, output: PathBuf },
    /// Run a benchmark grid and write results and a report.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// Output directory; overrides the config's `out`.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        serial_timing: bool,
    },
    /// BD-Rate of a test RD curve against an anchor curve (CSV with bpp and psnr_db columns).
    Bdrate {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
        /// Keep only rows of this codec in the anchor file.
        #[arg(long)]
        anchor_codec: Option<String>,
        /// Keep only rows of this codec in the test file.
        #[arg(long)]
        test_codec: Option<String>,
        /// Keep only rows of this dataset in both files.
        #[arg(long)]
        dataset: Option<String>,
        #[arg(long, value_enum, default_value = "psnr")]
        metric: Metric,
    },
    /// Map a force CSV log to a force-stacked image.
    Force2img {
        #[arg(long = "map")]
        mapping: PathBuf,
        input: PathBuf,
        output: PathBuf,
    },
    /// Classification accuracy of reconstructions across a codec's qualities.
    Classify {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        codec: String,
        /// Quality tokens; defaults to all of the codec's.
        #[arg(long = "quality")]
        qualities: Vec<String>,
        #[arg(long, value_enum, default_value = "both")]
        classifier: ClassifierArg,
        #[arg(long, default_value_t = DEFAULT_K)]
        k: usize,
        /// Train fraction used when the manifest has no split yet.
        #[arg(long, default_value_t = 0.6)]
        train_fraction: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Write a synthetic dataset (PPM frames and manifest.json).
    Synth {
        #[arg(value_enum)]
        kind: SynthKind,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "synthetic")]
        name: String,
        #[arg(long, default_value_t = 100)]
        frames: usize,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 3)]
        classes: usize,
        #[arg(long, default_value_t = 10)]
        trajectories: usize,
        #[arg(long, default_value_t = 3.0)]
        spread: f64,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_PARTIAL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}

fn run(command: Command) -> Result<ExitCode, Error> {
    match command {
        Command::Encode { codec, quality, input, output } => {
            let registry = CodecRegistry::with_builtins();
            let codec = registry.get(&codec)?;
            let frame = load_frame_with_sidecar(&input)?;
            let quality = quality
                .or_else(|| codec.qualities().pop())
                .unwrap_or_else(|| LOSSLESS.to_string());
            let bytes = codec.encode(&frame, &quality)?;
            write_file(&output, &bytes)?;
            eprintln!(
                "{}: {} -> {} bytes ({:.4} bpp)",
                codec.id(),
                frame.raw_len(),
                bytes.len(),
                (bytes.len() * 8) as f64 / (frame.width() * frame.height()) as f64
            );
        }
        Command::Decode { input, output } => {
            let data = std::fs::read(&input).map_err(|source| Error::UnreadableFile { path: input.clone(), source })?;
            let frame = decode_container(&data)?;
            save_ppm(&frame, &output)?;
            if let Some(m) = frame.mapping() {
                m.save(sidecar_path(&output))?;
            }
        }
        Command::Bench { config, out, threads, serial_timing } => {
            let mut cfg = BenchConfig::load(&config)?;
            if threads.is_some() {
                cfg.threads = threads;
            }
            if threads == Some(0) {
                return Err(Error::Config("threads must be at least 1".into()));
            }
            cfg.serial_timing |= serial_timing;
            let out = out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("bench-out"));
            let outcome = run_benchmark(&cfg)?;
            emit_report(&outcome, &out)?;
            let failures = outcome.failures();
            eprintln!(
                "{} rows, {} failed, grid {}; report in {}",
                outcome.results.len(),
                failures,
                outcome.grid_size,
                out.display()
            );
            if failures > 0 {
                return Ok(ExitCode::from(EXIT_PARTIAL));
            }
        }
        Command::Bdrate { anchor, test, anchor_codec, test_codec, dataset, metric } => {
            let quality = match metric {
                Metric::Psnr => BdQuality::Psnr,
                Metric::MsSsim => BdQuality::MsSsim,
            };
            let a = read_curve(&anchor, anchor_codec.as_deref(), dataset.as_deref())?;
            let t = read_curve(&test, test_codec.as_deref(), dataset.as_deref())?;
            let v = bd_rate_with(&a, &t, quality)?;
            println!("{v:.3}");
        }
        Command::Force2img { mapping, input, output } => {
            let mapping = ForceImageMapping::load(&mapping)?;
            let frame = force_to_frame(&read_force_csv(&input)?, &mapping)?;
            save_ppm(&frame, &output)?;
            mapping.save(sidecar_path(&output))?;
            eprintln!("{}x{} force image", frame.width(), frame.height());
        }
        Command::Classify { manifest, codec, qualities, classifier, k, train_fraction, seed, out } => {
            let mut m = DatasetManifest::load(&manifest)?;
            if m.entries.iter().any(|e| e.split == Split::Unassigned) {
                m = split_dataset(&m, train_fraction, seed)?;
            }
            let base = manifest.parent().unwrap_or(Path::new("."));
            let dataset = Dataset::from_manifest(&m, base)?;
            let registry = CodecRegistry::with_builtins();
            let codec = registry.get(&codec)?;
            let qualities = if qualities.is_empty() { codec.qualities() } else { qualities };
            let classifiers = match classifier {
                ClassifierArg::Knn => vec![Classifier::Knn],
                ClassifierArg::Linear => vec![Classifier::Linear],
                ClassifierArg::Both => vec![Classifier::Knn, Classifier::Linear],
            };
            let mut points = Vec::new();
            for c in classifiers {
                points.extend(accuracy_under_compression(&dataset, codec.as_ref(), &qualities, c, k)?);
            }
            write_accuracy(&points, &dataset.name, &out)?;
            for p in &points {
                println!("{} {} {} bpp={:.4} top1={:.4}", p.classifier.as_str(), p.codec, p.quality, p.bpp, p.top1);
            }
        }
        Command::Synth { kind, out, name, frames, width, height, classes, trajectories, spread, seed } => {
            let entries = match kind {
                SynthKind::Gradient => synth::gradient_corpus(frames, width, height, seed),
                SynthKind::Classes => {
                    let per = frames.div_ceil((classes * trajectories).max(1)).max(1);
                    synth::class_corpus(classes, trajectories, per, (width, height), spread, seed)
                }
            };
            let path = synth::write_dataset(&out, &name, &entries)?;
            println!("{}", path.display());
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    std::fs::write(path, bytes).map_err(|source| Error::UnwritableOutput { path: path.to_owned(), source })
}

fn read_curve(path: &Path, codec: Option<&str>, dataset: Option<&str>) -> Result<RdCurve, Error> {
    let text = std::fs::read_to_string(path).map_err(|source| Error::UnreadableFile { path: path.to_owned(), source })?;
    let points: Vec<RdPoint> = bdcsv::parse_points(&text, codec, dataset)?;
    RdCurve::new(path.display().to_string(), points)
}
