//! Classification under compression.
//!
//! Frames are reduced to 16×16×3 box-filtered features and classified with
//! k-nearest neighbours or a ridge-regularized one-vs-rest least-squares
//! model. Sweeping a codec's qualities gives top-1 accuracy as a function of
//! bits per pixel.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bench::svg::{line_chart, Chart, Series};
use crate::codec::{Codec, FrameShape};
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::frame::{TactileFrame, CHANNELS};

pub const FEATURE_SIDE: usize = 16;
pub const FEATURE_LEN: usize = FEATURE_SIDE * FEATURE_SIDE * CHANNELS;
pub const DEFAULT_K: usize = 5;
pub const RIDGE: f64 = 1e-6;
pub const BASELINE_CODEC: &str = "uncompressed";
pub const BASELINE_BPP: f64 = 24.0;

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: usize,
}

/// Overlap weights of source cells `[x, x+1)` with each of `out` equal bins
/// spanning `[0, n)`.
fn bin_weights(n: usize, out: usize) -> Vec<Vec<(usize, f64)>> {
    let step = n as f64 / out as f64;
    (0..out)
        .map(|j| {
            let lo = j as f64 * step;
            let hi = lo + step;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(n);
            (first..last)
                .filter_map(|x| {
                    let w = (hi.min(x as f64 + 1.0) - lo.max(x as f64)).max(0.0);
                    (w > 0.0).then_some((x, w))
                })
                .collect()
        })
        .collect()
}

/// Area-weighted box downsample to 16×16 per channel, channel-interleaved,
/// scaled to [0, 1]. Frames smaller than 16 pixels on a side are upsampled
/// by the same rule.
pub fn extract_features(frame: &TactileFrame) -> Vec<f64> {
    let (w, h) = (frame.width(), frame.height());
    let wx = bin_weights(w, FEATURE_SIDE);
    let wy = bin_weights(h, FEATURE_SIDE);
    let px = frame.pixels();
    let mut rows = vec![0.0f64; h * FEATURE_SIDE * CHANNELS];
    for y in 0..h {
        for (j, bins) in wx.iter().enumerate() {
            for &(x, wgt) in bins {
                let src = (y * w + x) * CHANNELS;
                let dst = (y * FEATURE_SIDE + j) * CHANNELS;
                for c in 0..CHANNELS {
                    rows[dst + c] += wgt * px[src + c] as f64;
                }
            }
        }
    }
    let area = (w as f64 / FEATURE_SIDE as f64) * (h as f64 / FEATURE_SIDE as f64);
    let mut out = vec![0.0f64; FEATURE_LEN];
    for (i, bins) in wy.iter().enumerate() {
        for &(y, wgt) in bins {
            for j in 0..FEATURE_SIDE {
                for c in 0..CHANNELS {
                    out[(i * FEATURE_SIDE + j) * CHANNELS + c] += wgt * rows[(y * FEATURE_SIDE + j) * CHANNELS + c];
                }
            }
        }
    }
    for v in &mut out {
        *v = (*v / (area * 255.0)).clamp(0.0, 1.0);
    }
    out
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn lexical(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(std::cmp::Ordering::Equal)
}

/// Majority label of the `k` nearest training points.
///
/// Neighbours are ranked by (distance, label, feature values), so the result
/// does not depend on training-set order. Vote ties go to the smaller mean
/// distance, then to the lower label.
pub fn knn_classify(train: &[FeatureVector], query: &[f64], k: usize) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    if k == 0 || k > train.len() {
        return Err(Error::InvalidArgument(format!("k = {k} with {} training points", train.len())));
    }
    let mut ranked: Vec<(f64, &FeatureVector)> = train.iter().map(|f| (distance(&f.values, query), f)).collect();
    ranked.sort_by(|a, b| {
        a.0.total_cmp(&b.0)
            .then(a.1.label.cmp(&b.1.label))
            .then_with(|| lexical(&a.1.values, &b.1.values))
    });
    let mut votes: BTreeMap<usize, (usize, f64)> = BTreeMap::new();
    for (d, f) in &ranked[..k] {
        let e = votes.entry(f.label).or_default();
        e.0 += 1;
        e.1 += d;
    }
    let best = votes
        .into_iter()
        .map(|(label, (n, sum))| (label, n, sum / n as f64))
        .min_by(|a, b| b.1.cmp(&a.1).then(a.2.total_cmp(&b.2)).then(a.0.cmp(&b.0)))
        .expect("k >= 1");
    Ok(best.0)
}

/// One-vs-rest least squares on one-hot targets with a bias column.
#[derive(Debug, Clone)]
pub struct LinearClassifier {
    weights: DMatrix<f64>,
    classes: Vec<usize>,
}

impl LinearClassifier {
    pub fn fit(train: &[FeatureVector]) -> Result<Self> {
        Self::fit_with_ridge(train, RIDGE)
    }

    /// `ridge = 0` solves the plain normal equations and may fail with
    /// `SingularSystem`.
    pub fn fit_with_ridge(train: &[FeatureVector], ridge: f64) -> Result<Self> {
        let first = train.first().ok_or(Error::EmptyTrainSet)?;
        let d = first.values.len();
        if train.iter().any(|f| f.values.len() != d) {
            return Err(Error::InvalidArgument("feature lengths differ".into()));
        }
        let classes: Vec<usize> = train.iter().map(|f| f.label).collect::<BTreeSet<_>>().into_iter().collect();
        let col: BTreeMap<usize, usize> = classes.iter().enumerate().map(|(i, &c)| (c, i)).collect();
        let x = DMatrix::from_fn(train.len(), d + 1, |r, c| if c == d { 1.0 } else { train[r].values[c] });
        let y = DMatrix::from_fn(train.len(), classes.len(), |r, c| f64::from(u8::from(col[&train[r].label] == c)));
        let mut gram = x.transpose() * &x;
        for i in 0..=d {
            gram[(i, i)] += ridge;
        }
        let rhs = x.transpose() * y;
        let weights = gram.cholesky().ok_or(Error::SingularSystem)?.solve(&rhs);
        Ok(Self { weights, classes })
    }

    pub fn scores(&self, query: &[f64]) -> Vec<f64> {
        let d = self.weights.nrows() - 1;
        let mut q = DVector::from_element(d + 1, 1.0);
        q.rows_mut(0, d).copy_from_slice(&query[..d]);
        (self.weights.transpose() * q).iter().copied().collect()
    }

    /// Highest score wins; equal scores go to the lower label.
    pub fn predict(&self, query: &[f64]) -> usize {
        let scores = self.scores(query);
        let mut best = 0;
        for (i, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = i;
            }
        }
        self.classes[best]
    }
}

pub fn linear_classify(train: &[FeatureVector], query: &[f64]) -> Result<usize> {
    Ok(LinearClassifier::fit(train)?.predict(query))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Knn,
    Linear,
}

impl Classifier {
    pub fn as_str(self) -> &'static str {
        match self {
            Classifier::Knn => "knn",
            Classifier::Linear => "linear",
        }
    }
}

impl std::str::FromStr for Classifier {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "knn" | "k-nn" => Ok(Classifier::Knn),
            "linear" => Ok(Classifier::Linear),
            other => Err(Error::InvalidArgument(format!("unknown classifier {other}"))),
        }
    }
}

/// Top-1 accuracy of `classifier` trained on `train` over `test`.
pub fn top1_accuracy(train: &[FeatureVector], test: &[FeatureVector], classifier: Classifier, k: usize) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::InvalidArgument("test set is empty".into()));
    }
    let predictions: Vec<usize> = match classifier {
        Classifier::Knn => test
            .par_iter()
            .map(|q| knn_classify(train, &q.values, k))
            .collect::<Result<_>>()?,
        Classifier::Linear => {
            let model = LinearClassifier::fit(train)?;
            test.iter().map(|q| model.predict(&q.values)).collect()
        }
    };
    let hits = predictions.iter().zip(test).filter(|(p, q)| **p == q.label).count();
    Ok(hits as f64 / test.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracyPoint {
    pub codec: String,
    pub quality: String,
    pub bpp: f64,
    pub top1: f64,
    pub classifier: Classifier,
}

/// Sorted distinct labels; a label's class id is its index here.
pub fn class_names(dataset: &Dataset) -> Result<Vec<String>> {
    if dataset.frames.iter().any(|f| f.label.is_empty()) || dataset.frames.is_empty() {
        return Err(Error::UnlabeledManifest);
    }
    Ok(dataset
        .frames
        .iter()
        .map(|f| f.label.clone())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect())
}

struct Partition {
    train: Vec<FeatureVector>,
    test: Vec<FeatureVector>,
}

fn partition(dataset: &Dataset, frames: &[TactileFrame], names: &[String]) -> Result<Partition> {
    let mut p = Partition { train: Vec::new(), test: Vec::new() };
    let feats: Vec<Vec<f64>> = frames.par_iter().map(extract_features).collect();
    for (lf, values) in dataset.frames.iter().zip(feats) {
        let label = names.binary_search(&lf.label).expect("label listed");
        let fv = FeatureVector { values, label };
        match lf.split {
            Split::Train => p.train.push(fv),
            Split::Test => p.test.push(fv),
            Split::Unassigned => {}
        }
    }
    if p.train.is_empty() {
        return Err(Error::EmptyTrainSet);
    }
    if p.test.is_empty() {
        return Err(Error::InvalidArgument("no test-split frames".into()));
    }
    Ok(p)
}

/// Compresses every frame (train and test) at each quality, classifies the
/// reconstructions and reports test top-1 with the mean bpp. A 24 bpp
/// uncompressed baseline comes first.
pub fn accuracy_under_compression(
    dataset: &Dataset,
    codec: &dyn Codec,
    qualities: &[String],
    classifier: Classifier,
    k: usize,
) -> Result<Vec<AccuracyPoint>> {
    let names = class_names(dataset)?;
    let originals: Vec<TactileFrame> = dataset.frames.iter().map(|f| f.frame.clone()).collect();
    let base = partition(dataset, &originals, &names)?;
    let mut points = vec![AccuracyPoint {
        codec: BASELINE_CODEC.into(),
        quality: "raw".into(),
        bpp: BASELINE_BPP,
        top1: top1_accuracy(&base.train, &base.test, classifier, k)?,
        classifier,
    }];
    for q in qualities {
        let coded: Vec<(TactileFrame, f64)> = originals
            .par_iter()
            .map(|f| {
                let bytes = codec.encode(f, q)?;
                let recon = codec.decode(&bytes, &FrameShape::from(f))?;
                f.same_dims(&recon)?;
                Ok((recon, (bytes.len() * 8) as f64 / (f.width() * f.height()) as f64))
            })
            .collect::<Result<_>>()?;
        let bpp = coded.iter().map(|c| c.1).sum::<f64>() / coded.len() as f64;
        let recon: Vec<TactileFrame> = coded.into_iter().map(|c| c.0).collect();
        let part = partition(dataset, &recon, &names)?;
        points.push(AccuracyPoint {
            codec: codec.id().to_string(),
            quality: q.clone(),
            bpp,
            top1: top1_accuracy(&part.train, &part.test, classifier, k)?,
            classifier,
        });
    }
    Ok(points)
}

pub const ACCURACY_HEADER: &str = "codec,quality,bpp,classifier,top1";

pub fn format_accuracy_csv(points: &[AccuracyPoint]) -> String {
    let mut s = format!("{ACCURACY_HEADER}\n");
    for p in points {
        let _ = writeln!(s, "{},{},{:.6},{},{:.6}", p.codec, p.quality, p.bpp, p.classifier.as_str(), p.top1);
    }
    s
}

/// bpp–accuracy chart, one curve per (codec, classifier). The baseline is
/// drawn as its own single-point series.
pub fn accuracy_chart(title: &str, points: &[AccuracyPoint]) -> String {
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for p in points {
        groups
            .entry(format!("{} ({})", p.codec, p.classifier.as_str()))
            .or_default()
            .push((p.bpp, p.top1));
    }
    let series: Vec<Series> = groups
        .into_iter()
        .map(|(label, mut pts)| {
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            Series { label, points: pts }
        })
        .collect();
    line_chart(
        &Chart { title, x_label: "bits per pixel (log scale)", y_label: "top-1 accuracy", log_x: true },
        &series,
    )
}

/// Writes `accuracy.csv` and `accuracy_<dataset>.svg`.
pub fn write_accuracy(points: &[AccuracyPoint], dataset: &str, out_dir: &Path) -> Result<()> {
    let io = |path: std::path::PathBuf| move |source| Error::UnwritableOutput { path, source };
    std::fs::create_dir_all(out_dir).map_err(io(out_dir.to_owned()))?;
    let csv = out_dir.join("accuracy.csv");
    std::fs::write(&csv, format_accuracy_csv(points)).map_err(io(csv.clone()))?;
    let stem: String = dataset
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' })
        .collect();
    let svg = out_dir.join(format!("accuracy_{stem}.svg"));
    std::fs::write(&svg, accuracy_chart(&format!("Accuracy under compression: {dataset}"), points))
        .map_err(io(svg.clone()))?;
    Ok(())
}
