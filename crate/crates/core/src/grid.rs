use crate::error::{OpticsError, Result};

/// Uniform square sampling of the transverse plane, centred on the optical axis.
///
/// Sample `i` sits at `(i - n/2) * pitch`, so index `n/2` is the axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    n: usize,
    extent: f64,
}

impl GridSpec {
    /// Samples per side of the default simulation grid.
    pub const DEFAULT_N: usize = 1024;
    /// Physical side length of the default simulation grid, metres.
    pub const DEFAULT_EXTENT: f64 = 0.026;

    pub fn new(n: usize, extent: f64) -> Result<Self> {
        if n < 8 {
            return Err(OpticsError::validation(format!(
                "grid needs at least 8 samples per side, got {n}"
            )));
        }
        if !(extent.is_finite() && extent > 0.0) {
            return Err(OpticsError::validation(format!(
                "grid extent must be a positive length, got {extent} m"
            )));
        }
        Ok(GridSpec { n, extent })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn extent(&self) -> f64 {
        self.extent
    }

    pub fn pitch(&self) -> f64 {
        self.extent / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the on-axis sample.
    pub fn center(&self) -> usize {
        self.n / 2
    }

    /// Physical coordinate of sample index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.pitch()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Spatial frequency (cycles/m) of DFT bin `k` in unshifted order.
    pub fn frequency(&self, k: usize) -> f64 {
        let signed = if k < self.n.div_ceil(2) {
            k as f64
        } else {
            k as f64 - self.n as f64
        };
        signed / self.extent
    }

    /// Fresnel transfer-function sampling criterion `extent^2 >= lambda z n`.
    pub fn supports_transfer_function(&self, wavelength: f64, z: f64) -> bool {
        self.extent * self.extent >= wavelength * z * self.n as f64
    }
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            n: Self::DEFAULT_N,
            extent: Self::DEFAULT_EXTENT,
        }
    }
}

/// Build a grid, validating `n >= 8` and `extent > 0`.
pub fn make_grid(n: usize, extent: f64) -> Result<GridSpec> {
    GridSpec::new(n, extent)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pitch_of_default_grid() {
        let g = make_grid(1024, 0.026).unwrap();
        assert!((g.pitch() - 2.539_062_5e-5).abs() < 1e-15);
    }

    #[test]
    fn centring_convention() {
        let g = make_grid(8, 1.0).unwrap();
        assert_eq!(g.coord(0), -0.5);
        assert_eq!(g.coord(4), 0.0);
        assert_eq!(g.coord(7), 0.375);
    }

    #[test]
    fn rejects_small_or_degenerate_grids() {
        assert!(make_grid(7, 0.026).unwrap_err().is_validation());
        assert!(make_grid(64, 0.0).is_err());
        assert!(make_grid(64, -1.0).is_err());
        assert!(make_grid(64, f64::NAN).is_err());
    }

    #[test]
    fn default_grid_meets_transfer_function_criterion_at_one_metre() {
        let g = GridSpec::default();
        assert!(g.supports_transfer_function(632.8e-9, 1.0));
        assert!(!g.supports_transfer_function(632.8e-9, 1.1));
    }

    #[test]
    fn frequency_layout() {
        let g = make_grid(8, 2.0).unwrap();
        let f: Vec<f64> = (0..8).map(|k| g.frequency(k)).collect();
        assert_eq!(f, vec![0.0, 0.5, 1.0, 1.5, -2.0, -1.5, -1.0, -0.5]);
    }
}
