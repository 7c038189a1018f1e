use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{OpticsError, Result};
use crate::grid::GridSpec;

/// Complex scalar field sampled on a [`GridSpec`], row-major with row index
/// along y.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    wavelength: f64,
    values: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, wavelength: f64, values: Vec<Complex64>) -> Result<Self> {
        check_wavelength(wavelength)?;
        if values.len() != grid.len() {
            return Err(OpticsError::validation(format!(
                "field has {} samples, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(OpticsError::numeric(format!("non-finite field sample at index {i}")));
        }
        Ok(ComplexField {
            grid,
            wavelength,
            values,
        })
    }

    /// Sample `f(x, y)` at every grid point. Rows are evaluated in parallel;
    /// each value depends only on its own coordinates.
    pub fn from_fn<F>(grid: GridSpec, wavelength: f64, f: F) -> Result<Self>
    where
        F: Fn(f64, f64) -> Complex64 + Sync,
    {
        let n = grid.n();
        let coords = grid.coords();
        let mut values = vec![Complex64::default(); grid.len()];
        values.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            let y = coords[iy];
            for (v, &x) in row.iter_mut().zip(&coords) {
                *v = f(x, y);
            }
        });
        ComplexField::new(grid, wavelength, values)
    }

    pub(crate) fn from_parts_unchecked(grid: GridSpec, wavelength: f64, values: Vec<Complex64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        ComplexField {
            grid,
            wavelength,
            values,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wave_number(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.wavelength
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> Complex64 {
        self.values[iy * self.grid.n() + ix]
    }

    /// Power functional `sum |E|^2 * pitch^2`.
    pub fn power(&self) -> f64 {
        let p = self.grid.pitch();
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() * p * p
    }

    pub fn scale(&self, alpha: Complex64) -> ComplexField {
        ComplexField {
            grid: self.grid,
            wavelength: self.wavelength,
            values: self.values.iter().map(|v| v * alpha).collect(),
        }
    }

    pub fn intensity(&self) -> IntensityMap {
        intensity(self)
    }
}

/// Sampled irradiance `|E|^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct IntensityMap {
    grid: GridSpec,
    values: Vec<f64>,
}

impl IntensityMap {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(OpticsError::validation(format!(
                "intensity map has {} samples, grid expects {}",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(OpticsError::validation(format!(
                "intensity sample {i} is negative or non-finite ({})",
                values[i]
            )));
        }
        Ok(IntensityMap { grid, values })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n() + ix]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// `|E|^2` at every sample.
pub fn intensity(field: &ComplexField) -> IntensityMap {
    IntensityMap {
        grid: field.grid,
        values: field.values.iter().map(|v| v.norm_sqr()).collect(),
    }
}

pub(crate) fn check_wavelength(wavelength: f64) -> Result<()> {
    if wavelength.is_finite() && wavelength > 0.0 {
        Ok(())
    } else {
        Err(OpticsError::validation(format!(
            "wavelength must be a positive length, got {wavelength} m"
        )))
    }
}

/// Relative L2 distance `||a - b|| / ||b||` between two fields on the same grid.
pub fn relative_l2(a: &ComplexField, b: &ComplexField) -> Result<f64> {
    if a.grid != b.grid {
        return Err(OpticsError::validation("fields live on different grids"));
    }
    let (num, den) = a
        .values
        .iter()
        .zip(&b.values)
        .fold((0.0, 0.0), |(num, den), (x, y)| {
            (num + (x - y).norm_sqr(), den + y.norm_sqr())
        });
    Ok((num / den).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::new(8, 1.0).unwrap()
    }

    #[test]
    fn intensity_of_unit_field() {
        let f = ComplexField::new(grid(), 1e-6, vec![Complex64::new(1.0, 0.0); 64]).unwrap();
        assert!(f.intensity().values().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn intensity_of_zero_and_three_four_i() {
        let mut v = vec![Complex64::default(); 64];
        v[9] = Complex64::new(3.0, 4.0);
        let map = ComplexField::new(grid(), 1e-6, v).unwrap().intensity();
        assert_eq!(map.values()[9], 25.0);
        assert_eq!(map.values().iter().filter(|&&x| x == 0.0).count(), 63);
    }

    #[test]
    fn rejects_shape_mismatch_and_nan() {
        assert!(ComplexField::new(grid(), 1e-6, vec![Complex64::default(); 63]).is_err());
        let mut v = vec![Complex64::default(); 64];
        v[3] = Complex64::new(f64::NAN, 0.0);
        assert!(ComplexField::new(grid(), 1e-6, v).is_err());
        assert!(ComplexField::new(grid(), 0.0, vec![Complex64::default(); 64]).is_err());
        assert!(IntensityMap::new(grid(), vec![-1.0; 64]).is_err());
    }

    #[test]
    fn power_is_phase_invariant() {
        let f = ComplexField::from_fn(grid(), 1e-6, |x, y| Complex64::new(x + 1.0, y * y)).unwrap();
        let g = f.scale(Complex64::from_polar(1.0, 0.7));
        assert!((f.power() - g.power()).abs() <= 1e-15 * f.power());
    }
}
