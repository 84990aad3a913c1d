use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use super::svg::{line_chart, Chart, Series};
use super::{BenchOutcome, BenchResult};
use crate::error::{Error, Result};
use crate::metrics::{bd_rate_with, format_real, BdQuality, RdCurve, RdPoint};

pub const RESULTS_HEADER: &str =
    "codec,dataset,quality,bits_per_byte,ratio,bpp,psnr_db,ms_ssim,enc_kbps,dec_kbps,enc_fps,dec_fps,frames,wall_s,status";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// `results.csv` text. Failure rows keep their identifying columns and
/// leave the measurements empty.
pub fn format_results_csv(results: &[BenchResult]) -> String {
    let mut out = String::from(RESULTS_HEADER);
    out.push('\n');
    for r in results {
        let id = format!("{},{},{}", csv_field(&r.codec), csv_field(&r.dataset), csv_field(&r.quality));
        let body = match &r.metrics {
            Some(m) => format!(
                "{},{},{},{},{},{:.3},{:.3},{:.3},{:.3}",
                format_real(m.bits_per_byte, 6),
                format_real(m.ratio, 4),
                format_real(m.bpp, 6),
                format_real(m.psnr_db, 4),
                m.ms_ssim.map(|v| format_real(v, 6)).unwrap_or_default(),
                m.timing.enc_kbps,
                m.timing.dec_kbps,
                m.timing.enc_fps,
                m.timing.dec_fps,
            ),
            None => ",,,,,,,,".to_string(),
        };
        let _ = writeln!(out, "{id},{body},{},{:.4},{}", r.frames, r.wall_s, r.status.as_str());
    }
    out
}

fn write(path: PathBuf, text: &str) -> Result<()> {
    std::fs::write(&path, text).map_err(|source| Error::UnwritableOutput { path, source })
}

fn file_stem(name: &str) -> String {
    name.chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect()
}

/// Best value in bold, second best in italics (lower is better).
fn rank_marks(values: &[Option<f64>]) -> Vec<&'static str> {
    let mut order: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.filter(|x| x.is_finite()).map(|x| (i, x)))
        .collect();
    order.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    let mut marks = vec![""; values.len()];
    if let Some(&(i, _)) = order.first() {
        marks[i] = "**";
    }
    if let Some(&(i, _)) = order.get(1) {
        marks[i] = "_";
    }
    marks
}

fn marked(text: String, mark: &str) -> String {
    if mark.is_empty() {
        text
    } else {
        format!("{mark}{text}{mark}")
    }
}

/// Lossy rows of one dataset grouped into RD curves by codec.
fn curves(rows: &[&BenchResult]) -> BTreeMap<String, Vec<RdPoint>> {
    let mut out: BTreeMap<String, Vec<RdPoint>> = BTreeMap::new();
    for r in rows.iter().filter(|r| !r.kind.is_lossless()) {
        if let Some(m) = &r.metrics {
            out.entry(r.codec.clone()).or_default().push(RdPoint {
                bpp: m.bpp,
                psnr: m.psnr_db,
                ms_ssim: m.ms_ssim,
            });
        }
    }
    out
}

fn bd_cell(anchor: &[RdPoint], test: &[RdPoint], q: BdQuality) -> std::result::Result<f64, String> {
    let a = RdCurve::new("anchor", anchor.to_vec()).map_err(|e| e.to_string())?;
    let t = RdCurve::new("test", test.to_vec()).map_err(|e| e.to_string())?;
    bd_rate_with(&a, &t, q).map_err(|e| e.to_string())
}

fn dataset_section(md: &mut String, name: &str, rows: &[&BenchResult], anchor: Option<&str>) -> Option<String> {
    let _ = writeln!(md, "## {name}\n");
    let lossless: Vec<&&BenchResult> = rows.iter().filter(|r| r.kind.is_lossless() && r.is_ok()).collect();
    if !lossless.is_empty() {
        let bpb: Vec<Option<f64>> = lossless.iter().map(|r| r.metrics.as_ref().map(|m| m.bits_per_byte)).collect();
        let marks = rank_marks(&bpb);
        let _ = writeln!(md, "| Codec | bits/Byte | Ratio | Enc KB/s | Dec KB/s | Enc FPS | Dec FPS |");
        let _ = writeln!(md, "|---|---:|---:|---:|---:|---:|---:|");
        for (r, mark) in lossless.iter().zip(marks) {
            let m = r.metrics.as_ref().expect("ok row");
            let _ = writeln!(
                md,
                "| {} | {} | {:.1}× | {:.1} | {:.1} | {:.2} | {:.2} |",
                r.codec,
                marked(format!("{:.3}", m.bits_per_byte), mark),
                m.ratio,
                m.timing.enc_kbps,
                m.timing.dec_kbps,
                m.timing.enc_fps,
                m.timing.dec_fps
            );
        }
        md.push('\n');
    }

    let lossy: Vec<&&BenchResult> = rows.iter().filter(|r| !r.kind.is_lossless() && r.is_ok()).collect();
    let mut svg = None;
    if !lossy.is_empty() {
        let _ = writeln!(md, "| Codec | Quality | bpp | PSNR (dB) | MS-SSIM | Enc FPS | Dec FPS |");
        let _ = writeln!(md, "|---|---|---:|---:|---:|---:|---:|");
        for r in &lossy {
            let m = r.metrics.as_ref().expect("ok row");
            let _ = writeln!(
                md,
                "| {} | {} | {:.4} | {} | {} | {:.2} | {:.2} |",
                r.codec,
                r.quality,
                m.bpp,
                format_real(m.psnr_db, 2),
                m.ms_ssim.map(|v| format!("{v:.4}")).unwrap_or_else(|| "n/a".into()),
                m.timing.enc_fps,
                m.timing.dec_fps
            );
        }
        md.push('\n');

        let curves = curves(rows);
        if let Some(anchor_pts) = anchor.and_then(|a| curves.get(a)) {
            let anchor = anchor.expect("checked");
            let _ = writeln!(
                md,
                "BD-Rate against `{anchor}` (monotone piecewise-cubic Hermite fit of log10 bpp over quality; negative = fewer bits):\n"
            );
            let _ = writeln!(md, "| Codec | BD-Rate PSNR | BD-Rate MS-SSIM |");
            let _ = writeln!(md, "|---|---:|---:|");
            let ids: Vec<&String> = curves.keys().collect();
            let cells: Vec<(std::result::Result<f64, String>, std::result::Result<f64, String>)> = ids
                .iter()
                .map(|id| {
                    (
                        bd_cell(anchor_pts, &curves[*id], BdQuality::Psnr),
                        bd_cell(anchor_pts, &curves[*id], BdQuality::MsSsim),
                    )
                })
                .collect();
            let marks = rank_marks(&cells.iter().map(|c| c.0.clone().ok()).collect::<Vec<_>>());
            let show = |c: &std::result::Result<f64, String>| match c {
                Ok(v) => format!("{v:+.2}%"),
                Err(e) => format!("n/a ({e})"),
            };
            for ((id, (p, s)), mark) in ids.iter().zip(&cells).zip(marks) {
                let p_text = match p {
                    Ok(_) => marked(show(p), mark),
                    Err(_) => show(p),
                };
                let _ = writeln!(md, "| {id} | {p_text} | {} |", show(s));
            }
            md.push('\n');
        }

        let series: Vec<Series> = curves
            .iter()
            .map(|(id, pts)| {
                let mut p: Vec<(f64, f64)> = pts.iter().map(|p| (p.bpp, p.psnr)).collect();
                p.sort_by(|a, b| a.0.total_cmp(&b.0));
                Series { label: id.clone(), points: p }
            })
            .collect();
        let title = format!("Rate-distortion: {name}");
        svg = Some(line_chart(
            &Chart { title: &title, x_label: "bits per pixel (log scale)", y_label: "PSNR (dB)", log_x: true },
            &series,
        ));
        let _ = writeln!(md, "![RD curves](rd_{}.svg)\n", file_stem(name));
    }
    svg
}

/// Writes `results.csv`, `results.json`, `report.md` and one `rd_<dataset>.svg`
/// per dataset with lossy rows.
pub fn emit_report(outcome: &BenchOutcome, out_dir: &Path) -> Result<Vec<PathBuf>> {
    if outcome.results.is_empty() {
        return Err(Error::EmptyInput);
    }
    std::fs::create_dir_all(out_dir).map_err(|source| Error::UnwritableOutput {
        path: out_dir.to_owned(),
        source,
    })?;
    let mut written = Vec::new();

    let csv = out_dir.join("results.csv");
    write(csv.clone(), &format_results_csv(&outcome.results))?;
    written.push(csv);

    let json = out_dir.join("results.json");
    write(
        json.clone(),
        &serde_json::to_string_pretty(&serde_json::json!({
            "grid_size": outcome.grid_size,
            "failures": outcome.failures(),
            "anchor": outcome.anchor,
            "bd_rate_interpolation": "pchip-fritsch-carlson",
            "rows": outcome.results,
        }))
        .expect("results serialize"),
    )?;
    written.push(json);

    let mut by_dataset: BTreeMap<&str, Vec<&BenchResult>> = BTreeMap::new();
    for r in &outcome.results {
        by_dataset.entry(&r.dataset).or_default().push(r);
    }
    let mut md = String::from("# Benchmark report\n\n");
    let _ = writeln!(
        md,
        "{} rows ({} failed) over a grid of {}. Lowest bits/Byte and lowest BD-Rate in **bold**, runner-up in _italics_.\n",
        outcome.results.len(),
        outcome.failures(),
        outcome.grid_size
    );
    for (name, rows) in &by_dataset {
        if let Some(svg) = dataset_section(&mut md, name, rows, outcome.anchor.as_deref()) {
            let path = out_dir.join(format!("rd_{}.svg", file_stem(name)));
            write(path.clone(), &svg)?;
            written.push(path);
        }
    }
    let failed: Vec<&BenchResult> = outcome.results.iter().filter(|r| !r.is_ok()).collect();
    if !failed.is_empty() {
        let _ = writeln!(md, "## Failures\n");
        for r in failed {
            let _ = writeln!(
                md,
                "- `{}` / `{}` / `{}`: {}: {}",
                r.codec,
                r.dataset,
                r.quality,
                r.status.as_str(),
                r.message.as_deref().unwrap_or("")
            );
        }
    }
    let path = out_dir.join("report.md");
    write(path.clone(), &md)?;
    written.push(path);
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn marks_best_and_second() {
        assert_eq!(rank_marks(&[Some(3.0), Some(1.0), None, Some(2.0)]), ["", "**", "", "_"]);
        assert_eq!(rank_marks(&[Some(1.0)]), ["**"]);
    }

    #[test]
    fn csv_quoting() {
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
