//! Acceptance suite: one PASS/FAIL line per criterion. Exits non-zero if any
//! criterion fails.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::type_complexity)]

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use taco_core::bench::{run_benchmark, BenchConfig};
use taco_core::codec::{Codec, StoreCodec, TacoLossyCodec};
use taco_core::dataset::{split_dataset, Dataset, DatasetManifest, Split};
use taco_core::downstream::{accuracy_under_compression, Classifier, DEFAULT_K};
use taco_core::entropy::{encode_symbols, FrequencyTable, ProbabilityModel};
use taco_core::force::{force_to_frame, frame_to_force, ForceImageMapping, ForceRecord};
use taco_core::frame::TactileFrame;
use taco_core::lossless::{decode_lossless, encode_lossless, LosslessConfig, Predictor};
use taco_core::lossy::transform::{dct2d, idct2d, ycocg_r_forward, ycocg_r_inverse, BLOCK_AREA};
use taco_core::lossy::{decode_lossy, encode_lossy, QualityPoint, LAMBDAS};
use taco_core::metrics::{
    bandwidth_mbps, bd_rate, bits_per_byte, compression_ratio, ms_ssim, mse, psnr, psnr_from_mse, rmse_map, RdCurve,
    RdPoint,
};
use taco_core::synth;

type Outcome = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn ok<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, String> {
    r.map_err(|e| e.to_string())
}

fn random_frame(r: &mut ChaCha8Rng, w: usize, h: usize) -> TactileFrame {
    let seed = r.next_u64();
    match r.gen_range(0..5) {
        0 => synth::noise_frame(w, h, seed),
        1 => synth::smooth_frame(w, h, r.gen_range(0.0..4.0), seed),
        2 => synth::tactile_frame(w, h, seed),
        3 => TactileFrame::filled(w, h, [r.gen(), r.gen(), r.gen()]).unwrap(),
        _ => {
            // sparse values near the 0/255 boundaries stress residual wrap-around
            let px = (0..w * h * 3).map(|_| if r.gen_bool(0.5) { r.gen_range(0..4) } else { r.gen_range(252..=255) }).collect();
            TactileFrame::visuo(w, h, px).unwrap()
        }
    }
}

fn c1_lossless_round_trip() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(1);
    let cfg = LosslessConfig::default();
    let mut n = 0usize;
    let mut bytes = 0usize;
    let mut check = |f: &TactileFrame, cfg: &LosslessConfig| -> Result<(), String> {
        let back = ok(decode_lossless(&ok(encode_lossless(f, cfg))?))?;
        ensure!(back.pixels() == f.pixels(), "{}x{} frame not bit-exact", f.width(), f.height());
        n += 1;
        bytes += f.raw_len();
        Ok(())
    };
    const TOTAL: usize = 10_000;
    for i in 0..TOTAL {
        let (w, h) = if i % 250 == 0 {
            synth::TABLE1_RESOLUTIONS[(i / 250) % synth::TABLE1_RESOLUTIONS.len()]
        } else {
            (r.gen_range(1..=72), r.gen_range(1..=72))
        };
        let f = random_frame(&mut r, w, h);
        check(&f, &cfg)?;
    }
    for (_, f) in synth::fixtures() {
        for predictor in [Predictor::MedianEdge, Predictor::Left, Predictor::Zero] {
            check(&f, &LosslessConfig { predictor, ..cfg })?;
        }
    }
    Ok(format!("{n} frames ({:.1} MB) bit-exact", bytes as f64 / 1e6))
}

fn shannon_entropy(p: &[f64]) -> f64 {
    let s: f64 = p.iter().sum();
    p.iter().filter(|&&x| x > 0.0).map(|&x| -(x / s) * (x / s).log2()).sum()
}

fn c2_entropy_coder() -> Outcome {
    const N: usize = 100_000;
    let mut r = ChaCha8Rng::seed_from_u64(2);
    let mut sources: Vec<(&str, Vec<f64>)> = vec![
        ("geometric(0.7)", (0..256).map(|i| 0.3 * 0.7f64.powi(i)).collect()),
        ("laplacian(8)", (0..256).map(|i: i32| (-((i - 128).abs() as f64) / 8.0).exp()).collect()),
        ("uniform-16", (0..256).map(|i| if i < 16 { 1.0 } else { 0.0 }).collect()),
        ("0.9 + 0.1 spread", (0..256).map(|i| if i == 0 { 0.9 } else { 0.1 / 255.0 }).collect()),
        ("binary(0.9)", (0..256).map(|i| [0.9, 0.1].get(i).copied().unwrap_or(0.0)).collect()),
    ];
    sources.push(("dirichlet-ish", (0..256).map(|_| r.gen::<f64>().powi(3)).collect()));
    let mut worst = 0.0f64;
    for (name, p) in &sources {
        let dist = WeightedIndex::new(p).unwrap();
        let symbols: Vec<u8> = (0..N).map(|_| dist.sample(&mut r) as u8).collect();
        let mut model = ProbabilityModel::fixed(ok(FrequencyTable::from_probabilities(p))?);
        let rate = encode_symbols(&symbols, &mut model).bit_len() as f64 / N as f64;
        let h = shannon_entropy(p);
        worst = worst.max(rate - h);
        ensure!((rate - h).abs() <= 0.02, "{name}: {rate:.4} bits/symbol vs entropy {h:.4}");
    }
    let symbols: Vec<u8> = (0..N).map(|_| r.gen()).collect();
    let rate = encode_symbols(&symbols, &mut ProbabilityModel::uniform()).bit_len() as f64 / N as f64;
    ensure!((rate - 8.0).abs() <= 0.01, "uniform-256 at {rate:.4} bits/symbol");
    Ok(format!("worst gap {worst:+.4} bits/symbol over {} sources; uniform-256 {rate:.4}", sources.len()))
}

fn c3_bits_per_byte() -> Outcome {
    let f = synth::tactile_frame(640, 480, 3);
    let stored = ok(StoreCodec.encode(&f, "lossless"))?;
    let bpb = ok(bits_per_byte((stored.len() * 8) as u64, f.raw_len() as u64))?;
    let header = stored.len() - f.raw_len();
    ensure!(stored.len() > f.raw_len(), "store codec produced no header");
    ensure!(
        (bpb - (8.0 + 8.0 * header as f64 / f.raw_len() as f64)).abs() < 1e-12,
        "store bits/Byte {bpb} does not equal 8 + header share"
    );
    let ratio = ok(compression_ratio(0.447))?;
    ensure!((ratio - 8.0 / 0.447).abs() < 1e-12, "ratio {ratio}");
    ensure!(format!("{ratio:.0}") == "18", "ratio prints as {ratio:.0}");
    ensure!(format!("{ratio:.1}") == "17.9", "ratio {ratio:.1}");
    Ok(format!("store = {bpb:.6} bits/Byte ({header} header bytes); 8/0.447 = {ratio:.3} → {ratio:.0}×"))
}

fn gzip_spec() -> String {
    r#"{ id = "gzip", kind = "external_lossless", encode_cmd = "gzip -9 -n -c {in} > {out}", decode_cmd = "gzip -d -c {in} > {out}" }"#
        .to_string()
}

fn c4_table2_ordering() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let manifest = ok(synth::write_dataset(dir.path(), "gradient", &synth::gradient_corpus(100, 64, 64, 40)))?;
    let cfg = ok(BenchConfig::from_toml(&format!(
        "datasets = [{:?}]\ncodecs = [\"store\", \"taco-ll-lite\", {}]\nthreads = 4\n",
        manifest.display().to_string(),
        gzip_spec()
    )))?;
    let outcome = ok(run_benchmark(&cfg))?;
    let bpb: BTreeMap<&str, f64> = outcome
        .results
        .iter()
        .map(|r| (r.codec.as_str(), r.metrics.as_ref().map_or(f64::NAN, |m| m.bits_per_byte)))
        .collect();
    let (ll, gz, store) = (bpb["taco-ll-lite"], bpb["gzip"], bpb["store"]);
    ensure!(outcome.failures() == 0, "{} failed rows", outcome.failures());
    ensure!(ll < gz && gz < 8.0 && gz < store, "ordering broken: ll {ll:.4}, gzip {gz:.4}, raw 8, store {store:.4}");
    Ok(format!("taco-ll-lite {ll:.3} < gzip {gz:.3} < raw 8 bits/Byte (100 frames)"))
}

fn curve(points: &[(f64, f64)]) -> RdCurve {
    RdCurve::new("c", points.iter().map(|&(bpp, psnr)| RdPoint { bpp, psnr, ms_ssim: None }).collect()).unwrap()
}

fn c5_bd_rate() -> Outcome {
    let anchor = [(0.11, 31.2), (0.23, 34.0), (0.45, 36.9), (0.92, 39.8), (1.6, 42.1)];
    let scaled = |k: f64| anchor.iter().map(|&(b, q)| (b * k, q)).collect::<Vec<_>>();
    let a = curve(&anchor);
    let same = ok(bd_rate(&a, &a))?;
    let double = ok(bd_rate(&a, &curve(&scaled(2.0))))?;
    let half = ok(bd_rate(&a, &curve(&scaled(0.5))))?;
    ensure!(same == 0.0 && format!("{same:.3}") == "0.000", "self BD-Rate {same}");
    ensure!((double - 100.0).abs() <= 0.1, "2x rate gives {double}");
    ensure!((half + 50.0).abs() <= 0.1, "0.5x rate gives {half}");
    Ok(format!("self {same:.3}%, 2x {double:+.3}%, 0.5x {half:+.3}%"))
}

fn c6_bandwidth() -> Outcome {
    let v = ok(bandwidth_mbps(0.22, 640.0, 480.0, 30.0))?;
    ensure!((v - 2.03).abs() <= 0.01, "{v} Mbps");
    let raw = ok(bandwidth_mbps(24.0, 640.0, 480.0, 30.0))?;
    ensure!((raw - 221.184).abs() < 1e-9, "raw {raw}");
    Ok(format!("0.22 bpp @ 640x480x30 = {v:.4} Mbps; 24 bpp = {raw:.1} Mbps"))
}

fn c7_rd_monotonicity() -> Outcome {
    let qs = QualityPoint::all();
    let lambdas: Vec<f64> = qs.iter().map(|q| q.lambda).collect();
    ensure!(lambdas == [0.0018, 0.0067, 0.025, 0.0483] && LAMBDAS == lambdas[..], "lambda set {lambdas:?}");
    let mut checked = 0;
    for (name, f) in synth::fixtures() {
        let mut prev: Option<(usize, f64)> = None;
        for q in &qs {
            let bits = ok(encode_lossy(&f, q))?;
            let e = ok(mse(&f, &ok(decode_lossy(&bits))?))?;
            if let Some((pb, pe)) = prev {
                ensure!(bits.bit_len() > pb, "{name}: bpp not increasing at λ={}", q.lambda);
                ensure!(e < pe, "{name}: MSE not decreasing at λ={} ({e} vs {pe})", q.lambda);
            }
            prev = Some((bits.bit_len(), e));
        }
        checked += 1;
    }
    Ok(format!("{checked} fixtures x 4 λ, zero violations"))
}

fn c8_transform() -> Outcome {
    let mut r = ChaCha8Rng::seed_from_u64(8);
    let mut max_err = 0.0f64;
    let mut max_energy = 0.0f64;
    for _ in 0..10_000 {
        let mut block = [0.0f64; BLOCK_AREA];
        for v in &mut block {
            *v = r.gen_range(-256.0..256.0);
        }
        let c = dct2d(&block);
        let back = idct2d(&c);
        for (a, b) in block.iter().zip(&back) {
            max_err = max_err.max((a - b).abs());
        }
        let e_in: f64 = block.iter().map(|v| v * v).sum();
        let e_out: f64 = c.iter().map(|v| v * v).sum();
        max_energy = max_energy.max((e_in - e_out).abs() / e_in.max(1e-300));
    }
    ensure!(max_err <= 1e-9, "DCT round trip error {max_err:e}");
    ensure!(max_energy <= 1e-6, "Parseval relative error {max_energy:e}");
    for rgb in 0..(1u32 << 24) {
        let (rr, g, b) = ((rgb >> 16) as i32, ((rgb >> 8) & 255) as i32, (rgb & 255) as i32);
        let (y, co, cg) = ycocg_r_forward(rr, g, b);
        ensure!(ycocg_r_inverse(y, co, cg) == (rr, g, b), "YCoCg-R fails at {rr},{g},{b}");
    }
    Ok(format!("DCT max error {max_err:.2e}, Parseval {max_energy:.2e}, YCoCg-R exact on 2^24 colours"))
}

fn c9_force_mapping() -> Outcome {
    let mapping = synth::default_force_mapping();
    let f = ok(force_to_frame(&synth::force_sequence(200, 60, 9), &mapping))?;
    ensure!((f.width(), f.height(), f.channels()) == (60, 200, 3), "force image {}x{}", f.width(), f.height());
    for axis in 0..3 {
        for level in 0..=255u8 {
            ensure!(mapping.quantize(axis, mapping.dequantize(axis, level)) == level, "level {level} axis {axis}");
        }
    }
    let mut r = ChaCha8Rng::seed_from_u64(9);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let scale = [r.gen_range(0.001..0.1), r.gen_range(0.001..0.1), r.gen_range(0.001..0.1)];
        let offset = [r.gen_range(0.0..255.0f64).round(), 128.0, r.gen_range(0.0..255.0f64).round()];
        let m = ok(ForceImageMapping::new(scale, offset))?;
        let n = r.gen_range(1..=60);
        let t = r.gen_range(1..=20);
        let records: Vec<ForceRecord> = (0..t)
            .map(|i| ForceRecord {
                timestamp: i as f64 * 0.005,
                forces: (0..n)
                    .map(|_| std::array::from_fn(|a| r.gen_range(-offset[a] * scale[a]..(255.0 - offset[a]) * scale[a])))
                    .collect(),
            })
            .collect();
        let img = ok(force_to_frame(&records, &m))?;
        let back = ok(frame_to_force(&img, &m))?;
        for (orig, rec) in records.iter().zip(&back) {
            for (fo, fr) in orig.forces.iter().zip(&rec.forces) {
                for a in 0..3 {
                    let rel = (fo[a] - fr[a]).abs() / scale[a];
                    worst = worst.max(rel);
                    ensure!(rel <= 0.5 + 1e-9, "error {rel} x scale on axis {a}");
                }
            }
        }
        let again = ok(force_to_frame(&back, &m))?;
        ensure!(again.pixels() == img.pixels(), "frame→force→frame not bit-exact");
    }
    Ok(format!("60x200x3 image, 256-level grid exact, worst error {worst:.3} x scale over 1000 sequences"))
}

fn c10_metric_identities() -> Outcome {
    let black = TactileFrame::filled(64, 48, [0; 3]).unwrap();
    let white = TactileFrame::filled(64, 48, [255; 3]).unwrap();
    let p = ok(psnr(&black, &white))?;
    ensure!(format!("{p:.2}") == "0.00", "psnr(all-0, all-255) = {p}");
    let one = psnr_from_mse(1.0);
    ensure!((one - 48.13).abs() <= 0.01, "MSE 1 → {one}");
    let mut worst = 1.0f64;
    for (name, f) in synth::fixtures() {
        if f.width().min(f.height()) > 10 {
            let s = ok(ms_ssim(&f, &f))?;
            worst = worst.min(s);
            ensure!(s == 1.0, "ms_ssim(a,a) = {s} on {name}");
        }
        let map = ok(rmse_map(&f, &f))?;
        ensure!(map.values.iter().all(|&v| v == 0.0), "rmse map of {name} not zero");
    }
    Ok(format!("psnr {p:.2} dB, MSE=1 → {one:.4} dB, ms_ssim(a,a) = {worst}, zero RMSE maps"))
}

fn c11_classification() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let path = ok(synth::write_dataset(dir.path(), "classes", &synth::class_corpus(3, 10, 4, (32, 32), 3.0, 11)))?;
    let manifest = ok(split_dataset(&ok(DatasetManifest::load(&path))?, 0.6, 11))?;
    let mut per_traj: BTreeMap<&str, Split> = BTreeMap::new();
    for e in &manifest.entries {
        ensure!(*per_traj.entry(&e.trajectory_id).or_insert(e.split) == e.split, "trajectory {} straddles", e.trajectory_id);
    }
    let train = per_traj.values().filter(|s| **s == Split::Train).count();
    ensure!(train == 18 && per_traj.len() == 30, "{train} of {} trajectories in train", per_traj.len());
    let ds = ok(Dataset::from_manifest(&manifest, dir.path()))?;
    let qs: Vec<String> = (0..4).map(|q| q.to_string()).collect();
    let mut summary = Vec::new();
    for c in [Classifier::Knn, Classifier::Linear] {
        let store = ok(accuracy_under_compression(&ds, &StoreCodec, &["lossless".into()], c, DEFAULT_K))?;
        ensure!(store[0].top1 == 1.0, "{} uncompressed accuracy {}", c.as_str(), store[0].top1);
        ensure!(store[1].top1.to_bits() == store[0].top1.to_bits(), "store codec accuracy differs from baseline");
        let lossy = ok(accuracy_under_compression(&ds, &TacoLossyCodec, &qs, c, DEFAULT_K))?;
        let (coarse, fine) = (lossy[1].top1, lossy[4].top1);
        ensure!(fine >= coarse - 0.05, "{}: finest {fine} < coarsest {coarse} - 0.05", c.as_str());
        summary.push(format!("{} raw {:.2} coarse {coarse:.2} fine {fine:.2}", c.as_str(), store[0].top1));
    }
    Ok(format!("18/30 trajectories train; {}", summary.join("; ")))
}

const TIMING_COLUMNS: [&str; 5] = ["enc_kbps", "dec_kbps", "enc_fps", "dec_fps", "wall_s"];

fn strip_timing(csv: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    let keep: Vec<usize> = (0..header.len()).filter(|&i| !TIMING_COLUMNS.contains(&header[i])).collect();
    std::iter::once(header.join(","))
        .chain(lines.map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            keep.iter().map(|&i| f.get(i).copied().unwrap_or("")).collect::<Vec<_>>().join(",")
        }))
        .collect()
}

fn run_bench(config: &Path, out: &Path, threads: usize) -> Result<(String, serde_json::Value), String> {
    let status = ok(Command::new(env!("CARGO_BIN_EXE_taco"))
        .args(["bench", "--config"])
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(["--threads", &threads.to_string()])
        .output())?;
    ensure!(
        matches!(status.status.code(), Some(0) | Some(2)),
        "taco bench exited {:?}: {}",
        status.status.code(),
        String::from_utf8_lossy(&status.stderr)
    );
    let csv = ok(std::fs::read_to_string(out.join("results.csv")))?;
    let json = ok(serde_json::from_str(&ok(std::fs::read_to_string(out.join("results.json")))?))?;
    Ok((csv, json))
}

fn c12_determinism() -> Outcome {
    let dir = ok(tempfile::tempdir())?;
    let d = dir.path();
    ok(synth::write_dataset(&d.join("grad"), "gradient", &synth::gradient_corpus(12, 48, 40, 12)))?;
    ok(synth::write_dataset(&d.join("cls"), "classes", &synth::class_corpus(2, 3, 2, (40, 24), 3.0, 12)))?;
    let config = d.join("bench.toml");
    ok(std::fs::write(
        &config,
        format!(
            "datasets = [\"grad/manifest.json\", \"cls/manifest.json\"]\n\
             codecs = [\"taco-l-lite\", \"store\", \"taco-ll-lite\", {}, \
             {{ id = \"missing-tool\", kind = \"external_lossless\", encode_cmd = \"no-such-binary-xyz {{in}} {{out}}\", decode_cmd = \"cat {{in}} > {{out}}\" }}]\n",
            gzip_spec()
        ),
    ))?;
    let (a, ja) = run_bench(&config, &d.join("out1"), 1)?;
    let (b, _) = run_bench(&config, &d.join("out4"), 4)?;
    let (sa, sb) = (strip_timing(&a), strip_timing(&b));
    ensure!(sa == sb, "non-timing columns differ between 1 and 4 threads");
    let rows = ja["rows"].as_array().map_or(0, Vec::len);
    let failures = ja["failures"].as_u64().unwrap_or(u64::MAX) as usize;
    let grid = ja["grid_size"].as_u64().unwrap_or(0) as usize;
    let ok_rows = sa.len() - 1 - failures;
    // 1 lossy codec x 4 qualities + 4 lossless codecs, over 2 datasets
    ensure!(grid == 2 * (4 + 4), "grid size {grid}");
    ensure!(ok_rows + failures == grid && rows == grid, "{ok_rows} rows + {failures} failures != grid {grid}");
    ensure!(failures == 2, "expected the missing tool to fail on both datasets, saw {failures} failures");
    Ok(format!("1 vs 4 threads identical over {} rows; {ok_rows} ok + {failures} failures = grid {grid}", sa.len() - 1))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("lossless round trip", c1_lossless_round_trip),
        ("entropy-coder optimality", c2_entropy_coder),
        ("bits/Byte definitions", c3_bits_per_byte),
        ("lossless ordering on gradient corpus", c4_table2_ordering),
        ("BD-Rate oracle", c5_bd_rate),
        ("bandwidth arithmetic", c6_bandwidth),
        ("RD monotonicity", c7_rd_monotonicity),
        ("transform numerics", c8_transform),
        ("force mapping", c9_force_mapping),
        ("metric identities", c10_metric_identities),
        ("classification protocol", c11_classification),
        ("harness determinism", c12_determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            Err(p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string())).unwrap_or_else(|| "panic".into()))
        });
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{secs:.2}s]", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
