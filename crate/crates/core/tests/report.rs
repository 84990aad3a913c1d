use std::path::Path;

use taco_core::bench::{emit_report, run_benchmark, BenchConfig, RESULTS_HEADER};
use taco_core::synth;

fn bench(dir: &Path, codecs: &str, frames: usize) -> taco_core::BenchOutcome {
    let manifest = synth::write_dataset(&dir.join("data"), "grad", &synth::gradient_corpus(frames, 40, 32, 2)).unwrap();
    let cfg = BenchConfig::from_toml(&format!(
        "datasets = [{:?}]\ncodecs = [{codecs}]\nthreads = 2\n",
        manifest.display().to_string()
    ))
    .unwrap();
    run_benchmark(&cfg).unwrap()
}

fn polyline_points(svg: &str, series: &str) -> usize {
    let line = svg.lines().find(|l| l.contains(&format!("data-series=\"{series}\""))).expect("series present");
    let pts = line.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    pts.split_whitespace().count()
}

#[test]
fn single_lossless_row_gives_one_row_csv_and_no_plot() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = bench(dir.path(), "\"store\"", 3);
    let out = dir.path().join("out");
    emit_report(&outcome, &out).unwrap();
    let csv = std::fs::read_to_string(out.join("results.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines, [RESULTS_HEADER, lines[1]]);
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields.len(), RESULTS_HEADER.split(',').count());
    assert_eq!((fields[0], fields[1], fields[2], fields[6]), ("store", "grad", "lossless", "inf"));
    assert!(fields[3].parse::<f64>().unwrap() > 8.0);
    assert!(!std::fs::read_dir(&out).unwrap().any(|e| e.unwrap().path().extension().is_some_and(|x| x == "svg")));
}

#[test]
fn lossy_sweep_plots_four_points_and_ranks_lossless_codecs() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = bench(dir.path(), "\"store\", \"taco-ll-lite\", \"taco-l-lite\"", 12);
    assert_eq!(outcome.grid_size, 6);
    assert_eq!(outcome.anchor.as_deref(), Some("taco-l-lite"));
    let out = dir.path().join("out");
    emit_report(&outcome, &out).unwrap();
    let svg = std::fs::read_to_string(out.join("rd_grad.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
    assert_eq!(polyline_points(&svg, "taco-l-lite"), 4);

    let md = std::fs::read_to_string(out.join("report.md")).unwrap();
    let row = |codec: &str| md.lines().find(|l| l.starts_with(&format!("| {codec} |"))).unwrap().to_string();
    assert!(row("taco-ll-lite").contains("| **"), "{}", row("taco-ll-lite"));
    assert!(row("store").contains("| _"), "{}", row("store"));
    assert!(md.contains("BD-Rate"));

    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("results.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
    assert_eq!(json["bd_rate_interpolation"], "pchip-fritsch-carlson");
}

#[test]
fn compression_columns_repeat_exactly() {
    let dir = tempfile::tempdir().unwrap();
    let a = bench(dir.path(), "\"taco-ll-lite\", \"taco-l-lite\"", 4);
    let b = bench(dir.path(), "\"taco-l-lite\", \"taco-ll-lite\"", 4);
    let key = |o: &taco_core::BenchOutcome| -> Vec<(String, String, u64, String)> {
        o.results
            .iter()
            .map(|r| {
                let m = r.metrics.as_ref().unwrap();
                (r.codec.clone(), r.quality.clone(), m.total_bits, format!("{:.12}", m.psnr_db))
            })
            .collect()
    };
    assert_eq!(key(&a), key(&b));
}
