//! Synthetic vortex-beam image datasets over the (l, z) class grid.

pub mod error;
pub mod labels;
pub mod manifest;
pub mod synth;

pub use error::{DatasetError, Result};
pub use labels::{Label, LabelSpace};
pub use manifest::{
    generate_dataset, load_manifest, load_split, read_image, verify_files, DatasetConfig, DatasetManifest, Entry, Split,
    SplitCounts,
};
pub use synth::{synth_sample, Augmentation, Sample, SimConfig, TurbulenceConfig, DEFAULT_CN2};
