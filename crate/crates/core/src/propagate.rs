//! Free-space Fresnel propagation: transfer-function method and a direct
//! quadrature oracle.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{OpticsError, Result};
use crate::fft::Fft2;
use crate::field::ComplexField;
use crate::grid::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Spectral,
    Quadrature,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationConfig {
    pub z: f64,
    pub method: Method,
    /// Zero transfer-function frequencies the sampled chirp cannot represent.
    pub band_limit: bool,
}

impl PropagationConfig {
    pub fn new(z: f64, method: Method, band_limit: bool) -> Result<Self> {
        check_z(z, false)?;
        Ok(PropagationConfig { z, method, band_limit })
    }

    pub fn spectral(z: f64) -> Result<Self> {
        PropagationConfig::new(z, Method::Spectral, false)
    }
}

fn check_z(z: f64, strict: bool) -> Result<()> {
    let ok = z.is_finite() && if strict { z > 0.0 } else { z >= 0.0 };
    if ok {
        Ok(())
    } else {
        Err(OpticsError::validation(format!(
            "propagation distance must be {} 0, got {z} m",
            if strict { ">" } else { ">=" }
        )))
    }
}

/// Propagate the whole grid with the method named in `config`.
///
/// The quadrature route evaluates the Fresnel sum at every output node; it is
/// separable and costs O(n^3).
pub fn propagate(field: &ComplexField, config: &PropagationConfig) -> Result<ComplexField> {
    match config.method {
        Method::Spectral => propagate_spectral_with(field, config.z, config.band_limit),
        Method::Quadrature => {
            check_z(config.z, false)?;
            if config.z == 0.0 {
                return Ok(field.clone());
            }
            propagate_quadrature_grid(field, config.z)
        }
    }
}

/// Transfer-function propagation over distance `z`, no band limiting.
pub fn propagate_spectral(field: &ComplexField, z: f64) -> Result<ComplexField> {
    propagate_spectral_with(field, z, false)
}

/// `H(fx, fy) = exp(-ikz) exp(i pi lambda z (fx^2 + fy^2))` applied in the
/// Fourier domain. With `band_limit`, bins with `|f| > extent / (2 lambda z)`
/// along either axis are zeroed.
pub fn propagate_spectral_with(field: &ComplexField, z: f64, band_limit: bool) -> Result<ComplexField> {
    check_z(z, false)?;
    if z == 0.0 {
        return Ok(field.clone());
    }
    let grid = *field.grid();
    let lambda = field.wavelength();
    if !grid.supports_transfer_function(lambda, z) {
        log::warn!(
            "grid {}x{} over {} m undersamples the transfer function at z = {z} m (extent^2 < lambda z n)",
            grid.n(),
            grid.n(),
            grid.extent()
        );
    }
    let n = grid.n();
    let freqs: Vec<f64> = (0..n).map(|k| grid.frequency(k)).collect();
    let f_max = grid.extent() / (2.0 * lambda * z);
    let chirp: Vec<Complex64> = freqs
        .iter()
        .map(|&f| {
            if band_limit && f.abs() > f_max {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::from_polar(1.0, PI * lambda * z * f * f)
            }
        })
        .collect();
    let k = field.wave_number();
    let scale = Complex64::from_polar(1.0 / (n * n) as f64, -(k * z).rem_euclid(2.0 * PI));

    let mut data = field.values().to_vec();
    Fft2::forward(n).process(&mut data);
    data.par_chunks_mut(n).enumerate().for_each(|(ky, row)| {
        let hy = chirp[ky] * scale;
        for (v, hx) in row.iter_mut().zip(&chirp) {
            *v *= hx * hy;
        }
    });
    Fft2::inverse(n).process(&mut data);
    ComplexField::new(grid, lambda, data)
}

/// Trapezoid weights times the 1-D Fresnel kernel `exp(-ik (s - s1)^2 / 2z)`.
fn kernel_row(coords: &[f64], s1: f64, k: f64, z: f64, pitch: f64) -> Vec<Complex64> {
    let last = coords.len() - 1;
    coords
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let w = if i == 0 || i == last { 0.5 * pitch } else { pitch };
            Complex64::from_polar(w, -k * (s - s1) * (s - s1) / (2.0 * z))
        })
        .collect()
}

fn quadrature_prefactor(lambda: f64, z: f64) -> Complex64 {
    let k = 2.0 * PI / lambda;
    Complex64::new(0.0, 1.0 / (lambda * z)) * Complex64::from_polar(1.0, -(k * z).rem_euclid(2.0 * PI))
}

/// Direct trapezoid evaluation of the Fresnel diffraction integral over the
/// full source grid at polar output points `(r1, theta1)`.
pub fn propagate_quadrature(field: &ComplexField, z: f64, points: &[(f64, f64)]) -> Result<Vec<Complex64>> {
    check_z(z, true)?;
    let grid = *field.grid();
    let half = grid.extent() / 2.0;
    for &(r1, theta1) in points {
        let (x1, y1) = (r1 * theta1.cos(), r1 * theta1.sin());
        if !(r1.is_finite() && theta1.is_finite()) || x1.abs() > half || y1.abs() > half {
            return Err(OpticsError::validation(format!(
                "output point (r = {r1} m, theta = {theta1}) lies outside the grid"
            )));
        }
    }
    let n = grid.n();
    let k = field.wave_number();
    let coords = grid.coords();
    let pref = quadrature_prefactor(field.wavelength(), z);
    let values = field.values();
    Ok(points
        .par_iter()
        .map(|&(r1, theta1)| {
            let kx = kernel_row(&coords, r1 * theta1.cos(), k, z, grid.pitch());
            let ky = kernel_row(&coords, r1 * theta1.sin(), k, z, grid.pitch());
            let mut acc = Complex64::new(0.0, 0.0);
            for (row, wy) in values.chunks_exact(n).zip(&ky) {
                let inner: Complex64 = row.iter().zip(&kx).map(|(v, w)| v * w).sum();
                acc += wy * inner;
            }
            pref * acc
        })
        .collect())
}

/// Quadrature at every grid node: `K E K^T` with the separable kernel matrix.
fn propagate_quadrature_grid(field: &ComplexField, z: f64) -> Result<ComplexField> {
    let grid: GridSpec = *field.grid();
    let n = grid.n();
    let k = field.wave_number();
    let coords = grid.coords();
    let kernel: Vec<Vec<Complex64>> = coords
        .par_iter()
        .map(|&s1| kernel_row(&coords, s1, k, z, grid.pitch()))
        .collect();
    let values = field.values();
    // rows: t[y][x1] = sum_x E[y][x] K[x1][x]
    let mut t = vec![Complex64::default(); n * n];
    t.par_chunks_mut(n).enumerate().for_each(|(y, out)| {
        let row = &values[y * n..(y + 1) * n];
        for (o, kr) in out.iter_mut().zip(&kernel) {
            *o = row.iter().zip(kr).map(|(v, w)| v * w).sum();
        }
    });
    let pref = quadrature_prefactor(field.wavelength(), z);
    let mut out = vec![Complex64::default(); n * n];
    out.par_chunks_mut(n).enumerate().for_each(|(y1, orow)| {
        let ky = &kernel[y1];
        for (y, w) in ky.iter().enumerate() {
            let trow = &t[y * n..(y + 1) * n];
            for (o, v) in orow.iter_mut().zip(trow) {
                *o += w * v;
            }
        }
        for o in orow.iter_mut() {
            *o *= pref;
        }
    });
    ComplexField::new(grid, field.wavelength(), out)
}
