//! The (l, z) class grid.

use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, Result};

/// Tolerance when matching a distance against the grid, metres.
pub const Z_MATCH: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelSpace {
    ells: Vec<u32>,
    /// metres
    zs: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Label {
    pub ell: u32,
    pub z: f64,
    pub class_index: usize,
}

impl LabelSpace {
    pub fn new(ells: Vec<u32>, zs: Vec<f64>) -> Result<Self> {
        if ells.is_empty() || zs.is_empty() {
            return Err(DatasetError::Validation("label space needs at least one l and one z".into()));
        }
        if ells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DatasetError::Validation(format!("charges must be strictly increasing: {ells:?}")));
        }
        if zs.windows(2).any(|w| w[1].is_nan() || w[0].is_nan() || w[1] - w[0] <= Z_MATCH) {
            return Err(DatasetError::Validation(format!("distances must be strictly increasing: {zs:?}")));
        }
        if zs.iter().any(|z| !(z.is_finite() && *z > 0.0)) {
            return Err(DatasetError::Validation("distances must be positive".into()));
        }
        if *ells.last().unwrap() > oam_core::beam::MAX_ELL {
            return Err(DatasetError::Validation(format!("charge above {}", oam_core::beam::MAX_ELL)));
        }
        Ok(LabelSpace { ells, zs })
    }

    /// l = 1..5, z = 0.40..1.00 m in 5 cm steps: 65 classes.
    pub fn full() -> Self {
        LabelSpace {
            ells: (1..=5).collect(),
            zs: (0..13).map(|i| (40 + 5 * i) as f64 / 100.0).collect(),
        }
    }

    /// l in {1, 2, 3}, z in {0.40, 0.70, 1.00} m: 9 classes.
    pub fn desk() -> Self {
        LabelSpace {
            ells: vec![1, 2, 3],
            zs: vec![0.4, 0.7, 1.0],
        }
    }

    pub fn ells(&self) -> &[u32] {
        &self.ells
    }

    pub fn zs(&self) -> &[f64] {
        &self.zs
    }

    pub fn len(&self) -> usize {
        self.ells.len() * self.zs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `rank(l) * |zs| + rank(z)`.
    pub fn class_index(&self, ell: u32, z: f64) -> Result<usize> {
        let i = self
            .ells
            .iter()
            .position(|&e| e == ell)
            .ok_or_else(|| DatasetError::Validation(format!("l = {ell} is not in the label space")))?;
        let j = self
            .zs
            .iter()
            .position(|&v| (v - z).abs() <= Z_MATCH)
            .ok_or_else(|| DatasetError::Validation(format!("z = {z} m is not in the label space")))?;
        Ok(i * self.zs.len() + j)
    }

    pub fn label(&self, class_index: usize) -> Result<Label> {
        if class_index >= self.len() {
            return Err(DatasetError::Validation(format!(
                "class {class_index} out of range for {} classes",
                self.len()
            )));
        }
        let nz = self.zs.len();
        Ok(Label {
            ell: self.ells[class_index / nz],
            z: self.zs[class_index % nz],
            class_index,
        })
    }

    pub fn labels(&self) -> impl Iterator<Item = Label> + '_ {
        (0..self.len()).map(|c| self.label(c).expect("index in range"))
    }

    /// Short display name such as `l3_z0.70m`.
    pub fn class_name(&self, class_index: usize) -> Result<String> {
        let l = self.label(class_index)?;
        Ok(format!("l{}_z{:.2}m", l.ell, l.z))
    }
}

impl Default for LabelSpace {
    fn default() -> Self {
        LabelSpace::full()
    }
}
