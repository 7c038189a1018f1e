//! One simulated camera frame per call.

use oam_core::beam::{source_vortex_offset, BeamParams, DEFAULT_WAIST, HE_NE_WAVELENGTH};
use oam_core::seed::derive_seed;
use oam_core::turbulence::{DEFAULT_INNER_SCALE, DEFAULT_OUTER_SCALE, DEFAULT_SUBHARMONICS};
use oam_core::{apply_phase, generate_screen, propagate_spectral, render_image, GridSpec, Image8, TurbulenceParams};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DatasetError, Result};
use crate::labels::Label;

/// Default turbulence strength, 5e-10 mm^(-2/3), in m^(-2/3).
pub const DEFAULT_CN2: f64 = 5e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceConfig {
    /// m^(-2/3)
    pub cn2: f64,
    /// rad/m
    pub kappa0: f64,
    /// rad/m
    pub kappam: f64,
    pub subharmonics: u32,
    /// Path length for the Fried parameter; the sample's own z when absent.
    pub path_override: Option<f64>,
}

impl Default for TurbulenceConfig {
    fn default() -> Self {
        TurbulenceConfig {
            cn2: DEFAULT_CN2,
            kappa0: 2.0 * std::f64::consts::PI / DEFAULT_OUTER_SCALE,
            kappam: 5.92 / DEFAULT_INNER_SCALE,
            subharmonics: DEFAULT_SUBHARMONICS,
            path_override: None,
        }
    }
}

/// Optical and rendering settings shared by every sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub grid_n: usize,
    /// metres
    pub grid_extent: f64,
    pub waist: f64,
    pub wavelength: f64,
    /// stored image side, pixels
    pub image_size: usize,
    /// physical side of the rendered window, metres
    pub crop_extent: f64,
    /// half-width of the uniform beam offset per axis, metres
    pub misalignment: f64,
    pub turbulence: Option<TurbulenceConfig>,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            grid_n: GridSpec::DEFAULT_N,
            grid_extent: GridSpec::DEFAULT_EXTENT,
            waist: DEFAULT_WAIST,
            wavelength: HE_NE_WAVELENGTH,
            image_size: 360,
            crop_extent: 6.0e-3,
            misalignment: 0.2e-3,
            turbulence: Some(TurbulenceConfig::default()),
        }
    }
}

impl SimConfig {
    /// No turbulence and no misalignment.
    pub fn clean() -> Self {
        SimConfig {
            misalignment: 0.0,
            turbulence: None,
            ..SimConfig::default()
        }
    }

    pub fn grid(&self) -> Result<GridSpec> {
        Ok(GridSpec::new(self.grid_n, self.grid_extent)?)
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        BeamParams::new(0, self.waist, self.wavelength)?;
        if self.image_size < 8 {
            return Err(DatasetError::Validation(format!("image size {} below 8 px", self.image_size)));
        }
        if !(self.crop_extent > 0.0 && self.crop_extent <= grid.extent()) {
            return Err(DatasetError::Validation(format!(
                "crop extent {} m must lie in (0, {}] m",
                self.crop_extent,
                grid.extent()
            )));
        }
        if !(self.misalignment.is_finite() && self.misalignment >= 0.0) {
            return Err(DatasetError::Validation(format!("misalignment {} m must be >= 0", self.misalignment)));
        }
        if let Some(t) = &self.turbulence {
            // manifests are JSON, which has no infinity
            if !t.kappam.is_finite() {
                return Err(DatasetError::Validation("dataset inner-scale cutoff must be finite".into()));
            }
            self.turbulence_params(t, 1.0, 0)?;
        }
        Ok(())
    }

    fn turbulence_params(&self, t: &TurbulenceConfig, z: f64, seed: u64) -> Result<TurbulenceParams> {
        let path = t.path_override.unwrap_or(z);
        Ok(TurbulenceParams::new(t.cn2, path, seed)?
            .with_kappa0(t.kappa0)?
            .with_kappam(t.kappam)?
            .with_subharmonics(t.subharmonics)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Augmentation {
    /// metres
    pub offset_x: f64,
    pub offset_y: f64,
    pub turbulence: bool,
    /// m^(-2/3), when turbulence is on
    pub cn2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub image: Image8,
    pub class_index: usize,
    pub ell: u32,
    pub z: f64,
    pub seed: u64,
    pub augmentation: Augmentation,
}

/// Draw the augmentation of a sample from its seed.
pub fn draw_augmentation(config: &SimConfig, seed: u64) -> Augmentation {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[0]));
    let b = config.misalignment;
    let mut offset = || if b > 0.0 { rng.random_range(-b..=b) } else { 0.0 };
    let (offset_x, offset_y) = (offset(), offset());
    Augmentation {
        offset_x,
        offset_y,
        turbulence: config.turbulence.is_some(),
        cn2: config.turbulence.map(|t| t.cn2),
    }
}

/// Source with a random lateral offset, optional phase screen, Fresnel
/// propagation to `label.z`, intensity, rendering.
pub fn synth_sample(label: Label, config: &SimConfig, seed: u64) -> Result<Sample> {
    let context = |e: oam_core::OpticsError| DatasetError::Optics {
        context: format!("sample l={} z={} m seed={seed}", label.ell, label.z),
        source: e,
    };
    let grid = config.grid()?;
    let params = BeamParams::new(label.ell, config.waist, config.wavelength).map_err(context)?;
    let aug = draw_augmentation(config, seed);
    let mut field = source_vortex_offset(&params, &grid, (aug.offset_x, aug.offset_y));
    if let Some(t) = &config.turbulence {
        let tp = config.turbulence_params(t, label.z, derive_seed(seed, &[1]))?;
        let screen = generate_screen(&grid, &tp, config.wavelength).map_err(context)?;
        field = apply_phase(&field, &screen).map_err(context)?;
    }
    let out = propagate_spectral(&field, label.z).map_err(context)?;
    let image = render_image(&out.intensity(), config.image_size, config.crop_extent).map_err(context)?;
    Ok(Sample {
        image,
        class_index: label.class_index,
        ell: label.ell,
        z: label.z,
        seed,
        augmentation: aug,
    })
}
