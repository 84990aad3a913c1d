//! Dataset manifests, trajectory-level splits and frame loading.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::force::{self, ForceImageMapping};
use crate::frame::{SensorKind, TactileFrame};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
    #[default]
    Unassigned,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    #[serde(default)]
    pub label: String,
    pub trajectory_id: String,
    #[serde(default)]
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub name: String,
    pub sensor_kind: SensorKind,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.path.as_str()) {
                return Err(Error::DuplicatePath(e.path.clone()));
            }
        }
        let mut splits: BTreeMap<&str, Split> = BTreeMap::new();
        for e in &self.entries {
            match splits.insert(&e.trajectory_id, e.split) {
                Some(prev) if prev != e.split => {
                    return Err(Error::MalformedManifest(format!(
                        "trajectory {} straddles splits",
                        e.trajectory_id
                    )))
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text).map_err(|e| Error::MalformedManifest(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|source| Error::UnreadableFile {
            path: path.to_owned(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_json()).map_err(|source| Error::UnwritableOutput {
            path: path.to_owned(),
            source,
        })
    }

    /// Distinct trajectory ids in sorted order.
    pub fn trajectories(&self) -> Vec<&str> {
        self.entries
            .iter()
            .map(|e| e.trajectory_id.as_str())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }
}

/// Assigns whole trajectories to Train/Test.
///
/// `round(train_fraction × #trajectories)` (ties up) trajectories go to Train,
/// chosen by a seeded shuffle of the sorted trajectory ids.
pub fn split_dataset(manifest: &DatasetManifest, train_fraction: f64, seed: u64) -> Result<DatasetManifest> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction {train_fraction} outside (0, 1)"
        )));
    }
    let mut ids = manifest.trajectories();
    if ids.len() < 2 {
        return Err(Error::TooFewTrajectories(ids.len()));
    }
    let n_train = (train_fraction * ids.len() as f64 + 0.5).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ids.shuffle(&mut rng);
    let train: HashSet<&str> = ids[..n_train].iter().copied().collect();

    let mut out = manifest.clone();
    for e in &mut out.entries {
        e.split = if train.contains(e.trajectory_id.as_str()) {
            Split::Train
        } else {
            Split::Test
        };
    }
    Ok(out)
}

/// A frame loaded from a manifest entry.
#[derive(Debug, Clone)]
pub struct LabeledFrame {
    pub frame: TactileFrame,
    pub label: String,
    pub trajectory_id: String,
    pub split: Split,
}

/// A manifest with its frames in memory.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub sensor_kind: SensorKind,
    pub frames: Vec<LabeledFrame>,
}

impl Dataset {
    /// Loads every entry; relative paths resolve against the manifest's directory.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        if !manifest_path.exists() {
            return Err(Error::MissingDataset(manifest_path.to_owned()));
        }
        let manifest = DatasetManifest::load(manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        Self::from_manifest(&manifest, base)
    }

    pub fn from_manifest(manifest: &DatasetManifest, base: &Path) -> Result<Self> {
        let frames = manifest
            .entries
            .iter()
            .map(|e| {
                let path = resolve(base, &e.path);
                let frame = load_entry(&path, manifest.sensor_kind)?;
                Ok(LabeledFrame {
                    frame,
                    label: e.label.clone(),
                    trajectory_id: e.trajectory_id.clone(),
                    split: e.split,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            name: manifest.name.clone(),
            sensor_kind: manifest.sensor_kind,
            frames,
        })
    }

    pub fn raw_bytes(&self) -> usize {
        self.frames.iter().map(|f| f.frame.raw_len()).sum()
    }
}

fn resolve(base: &Path, p: &str) -> PathBuf {
    let p = Path::new(p);
    if p.is_absolute() {
        p.to_owned()
    } else {
        base.join(p)
    }
}

fn load_entry(path: &Path, kind: SensorKind) -> Result<TactileFrame> {
    let is_csv = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    if is_csv {
        let mapping = ForceImageMapping::load(force::sidecar_path(path))?;
        return force::force_to_frame(&force::read_force_csv(path)?, &mapping);
    }
    let mut frame = force::load_frame_with_sidecar(path)?;
    if kind == SensorKind::ForceStacked && frame.sensor_kind() != SensorKind::ForceStacked {
        frame.set_meta(SensorKind::ForceStacked, None);
    }
    Ok(frame)
}
