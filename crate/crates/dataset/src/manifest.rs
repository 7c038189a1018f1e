//! Dataset layout `<root>/<split>/<class>/<ordinal>.pgm` plus `manifest.json`.

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use oam_core::seed::derive_seed;
use oam_core::Image8;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{DatasetError, Result};
use crate::labels::LabelSpace;
use crate::synth::{synth_sample, Augmentation, SimConfig};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }

    fn id(self) -> u64 {
        self as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub val: usize,
    pub test: usize,
}

impl SplitCounts {
    pub fn get(&self, split: Split) -> usize {
        match split {
            Split::Train => self.train,
            Split::Val => self.val,
            Split::Test => self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub labels: LabelSpace,
    pub sim: SimConfig,
    /// per class
    pub counts: SplitCounts,
    pub master_seed: u64,
}

impl DatasetConfig {
    /// 86/10/10 images per class over all 65 classes.
    pub fn full(master_seed: u64) -> Self {
        DatasetConfig {
            labels: LabelSpace::full(),
            sim: SimConfig::default(),
            counts: SplitCounts {
                train: 86,
                val: 10,
                test: 10,
            },
            master_seed,
        }
    }

    /// 40/10/10 per class over the 9 desk classes.
    pub fn desk(master_seed: u64) -> Self {
        DatasetConfig {
            labels: LabelSpace::desk(),
            counts: SplitCounts {
                train: 40,
                val: 10,
                test: 10,
            },
            ..DatasetConfig::full(master_seed)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if Split::ALL.iter().any(|&s| self.counts.get(s) == 0) {
            return Err(DatasetError::Validation("every split needs at least one sample per class".into()));
        }
        self.sim.validate()
    }

    /// Seed of one sample: `derive_seed(master, [class, split, ordinal])`.
    pub fn sample_seed(&self, class_index: usize, split: Split, ordinal: usize) -> u64 {
        derive_seed(self.master_seed, &[class_index as u64, split.id(), ordinal as u64])
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(serde_json::to_string(self)?.as_bytes()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Units {
    pub length: String,
    pub cn2: String,
    pub spatial_frequency: String,
}

impl Default for Units {
    fn default() -> Self {
        Units {
            length: "m".into(),
            cn2: "m^-2/3".into(),
            spatial_frequency: "rad/m".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    /// relative to the dataset root, `/`-separated
    pub path: String,
    pub class_index: usize,
    pub ell: u32,
    pub z: f64,
    pub ordinal: usize,
    pub seed: u64,
    pub augmentation: Augmentation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitListing {
    pub train: Vec<Entry>,
    pub val: Vec<Entry>,
    pub test: Vec<Entry>,
}

impl SplitListing {
    pub fn get(&self, split: Split) -> &[Entry] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format_version: u32,
    pub units: Units,
    pub config: DatasetConfig,
    pub config_hash: String,
    pub splits: SplitListing,
}

impl DatasetManifest {
    pub fn labels(&self) -> &LabelSpace {
        &self.config.labels
    }

    /// Canonical text form; this is exactly what `manifest.json` holds.
    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }

    pub fn hash(&self) -> Result<String> {
        Ok(sha256_hex(self.to_json()?.as_bytes()))
    }

    /// Structural checks: split sizes, class balance, unique paths and seeds,
    /// labels consistent with the label space.
    pub fn check(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(DatasetError::Manifest(format!("unsupported format version {}", self.format_version)));
        }
        if self.config.hash()? != self.config_hash {
            return Err(DatasetError::Manifest("config hash does not match config".into()));
        }
        let labels = self.labels();
        let mut paths = HashSet::new();
        let mut seeds = HashSet::new();
        for split in Split::ALL {
            let mut per_class = vec![0usize; labels.len()];
            for e in self.splits.get(split) {
                if labels.class_index(e.ell, e.z)? != e.class_index {
                    return Err(DatasetError::Manifest(format!("{}: label does not match class", e.path)));
                }
                if !paths.insert(e.path.as_str()) {
                    return Err(DatasetError::Manifest(format!("{} listed twice", e.path)));
                }
                if !seeds.insert(e.seed) {
                    return Err(DatasetError::Manifest(format!("seed {} reused", e.seed)));
                }
                per_class[e.class_index] += 1;
            }
            let want = self.config.counts.get(split);
            if let Some(c) = per_class.iter().position(|&n| n != want) {
                return Err(DatasetError::Manifest(format!(
                    "{} split has {} samples of class {c}, expected {want}",
                    split.name(),
                    per_class[c]
                )));
            }
        }
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

fn relative_path(split: Split, class_index: usize, ordinal: usize) -> String {
    format!("{}/{class_index}/{ordinal}.pgm", split.name())
}

fn prepare_root(root: &Path, overwrite: bool) -> Result<()> {
    if root.exists() {
        let mut entries = fs::read_dir(root).map_err(|e| DatasetError::io(root, e))?;
        if entries.next().is_some() {
            if !overwrite {
                return Err(DatasetError::Validation(format!(
                    "{} already exists and is not empty (pass overwrite to replace it)",
                    root.display()
                )));
            }
            for split in Split::ALL {
                let dir = root.join(split.name());
                if dir.exists() {
                    fs::remove_dir_all(&dir).map_err(|e| DatasetError::io(&dir, e))?;
                }
            }
            let m = root.join(MANIFEST_FILE);
            if m.exists() {
                fs::remove_file(&m).map_err(|e| DatasetError::io(&m, e))?;
            }
        }
    }
    fs::create_dir_all(root).map_err(|e| DatasetError::io(root, e))
}

/// Synthesize every sample, write the images and the manifest under `root`.
///
/// An existing non-empty `root` is an error unless `overwrite` is set, in
/// which case its split directories and manifest are replaced.
pub fn generate_dataset(config: &DatasetConfig, root: &Path, overwrite: bool) -> Result<DatasetManifest> {
    config.validate()?;
    prepare_root(root, overwrite)?;
    let mut jobs = Vec::new();
    for label in config.labels.labels() {
        for split in Split::ALL {
            for ordinal in 0..config.counts.get(split) {
                jobs.push((label, split, ordinal));
            }
        }
    }
    log::info!("generating {} samples into {}", jobs.len(), root.display());
    let mut done: Vec<(Split, Entry)> = jobs
        .par_iter()
        .map(|&(label, split, ordinal)| {
            let seed = config.sample_seed(label.class_index, split, ordinal);
            let sample = synth_sample(label, &config.sim, seed)?;
            let rel = relative_path(split, label.class_index, ordinal);
            let path = root.join(&rel);
            let dir = path.parent().expect("sample path has a parent");
            fs::create_dir_all(dir).map_err(|e| DatasetError::io(dir, e))?;
            let file = fs::File::create(&path).map_err(|e| DatasetError::io(&path, e))?;
            sample
                .image
                .write_pgm(std::io::BufWriter::new(file))
                .map_err(|e| DatasetError::Optics {
                    context: path.display().to_string(),
                    source: e,
                })?;
            Ok((
                split,
                Entry {
                    path: rel,
                    class_index: label.class_index,
                    ell: label.ell,
                    z: label.z,
                    ordinal,
                    seed,
                    augmentation: sample.augmentation,
                },
            ))
        })
        .collect::<Result<_>>()?;
    done.sort_by_key(|(split, e)| (*split, e.class_index, e.ordinal));
    let mut splits = SplitListing {
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for (split, e) in done {
        match split {
            Split::Train => splits.train.push(e),
            Split::Val => splits.val.push(e),
            Split::Test => splits.test.push(e),
        }
    }
    let manifest = DatasetManifest {
        format_version: FORMAT_VERSION,
        units: Units::default(),
        config: config.clone(),
        config_hash: config.hash()?,
        splits,
    };
    let path = root.join(MANIFEST_FILE);
    fs::write(&path, manifest.to_json()?).map_err(|e| DatasetError::io(&path, e))?;
    Ok(manifest)
}

pub fn load_manifest(root: &Path) -> Result<DatasetManifest> {
    let path = root.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| DatasetError::io(&path, e))?;
    let m: DatasetManifest = serde_json::from_str(&text)?;
    m.check()?;
    Ok(m)
}

/// Check that every listed image exists under `root`.
pub fn verify_files(root: &Path, manifest: &DatasetManifest) -> Result<()> {
    for split in Split::ALL {
        for e in manifest.splits.get(split) {
            if !root.join(&e.path).is_file() {
                return Err(DatasetError::Manifest(format!("missing image {}", e.path)));
            }
        }
    }
    Ok(())
}

pub fn read_image(root: &Path, entry: &Entry) -> Result<Image8> {
    let path: PathBuf = root.join(&entry.path);
    let file = fs::File::open(&path).map_err(|e| DatasetError::io(&path, e))?;
    Image8::read_pgm(std::io::BufReader::new(file)).map_err(|e| DatasetError::Optics {
        context: path.display().to_string(),
        source: e,
    })
}

/// Images of one split with their class indices, in manifest order.
pub fn load_split(root: &Path, manifest: &DatasetManifest, split: Split) -> Result<Vec<(Image8, usize)>> {
    manifest
        .splits
        .get(split)
        .par_iter()
        .map(|e| Ok((read_image(root, e)?, e.class_index)))
        .collect()
}
