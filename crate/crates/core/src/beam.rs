//! Vortex-beam construction: the Gaussian-illuminated spiral-phase source and
//! its closed-form free-space propagation (hypergeometric-Gaussian mode).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{OpticsError, Result};
use crate::field::{check_wavelength, ComplexField};
use crate::grid::GridSpec;
use crate::special::{kummer_1f1_real, log_gamma};
use crate::turbulence::PhaseScreen;

/// He-Ne wavelength, metres.
pub const HE_NE_WAVELENGTH: f64 = 632.8e-9;
/// Collimated Gaussian waist at the modulator, metres.
pub const DEFAULT_WAIST: f64 = 2.0e-3;
/// Largest topological charge the closed form is validated for.
pub const MAX_ELL: u32 = 12;

/// `sqrt(2/pi)`, the source amplitude on axis.
pub const SOURCE_AMPLITUDE: f64 = 0.797_884_560_802_865_4;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    ell: u32,
    waist: f64,
    wavelength: f64,
}

impl BeamParams {
    pub fn new(ell: u32, waist: f64, wavelength: f64) -> Result<Self> {
        if ell > MAX_ELL {
            return Err(OpticsError::validation(format!(
                "topological charge {ell} outside supported range 0..={MAX_ELL}"
            )));
        }
        if !(waist.is_finite() && waist > 0.0) {
            return Err(OpticsError::validation(format!("beam waist must be positive, got {waist} m")));
        }
        check_wavelength(wavelength)?;
        Ok(BeamParams {
            ell,
            waist,
            wavelength,
        })
    }

    /// Charge `ell` with the default 2 mm waist at 632.8 nm.
    pub fn with_ell(ell: u32) -> Result<Self> {
        BeamParams::new(ell, DEFAULT_WAIST, HE_NE_WAVELENGTH)
    }

    pub fn ell(&self) -> u32 {
        self.ell
    }

    pub fn waist(&self) -> f64 {
        self.waist
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    pub fn wave_number(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.waist * self.waist / self.wavelength
    }
}

/// Source field `sqrt(2/pi) exp(-r^2/w0^2) exp(-i l theta)` on the grid.
///
/// For `l >= 1` the on-axis sample is 0, the average of the spiral phase over
/// a cell centred on the singularity.
pub fn source_vortex(params: &BeamParams, grid: &GridSpec) -> ComplexField {
    source_vortex_offset(params, grid, (0.0, 0.0))
}

/// Source with the Gaussian illumination displaced by `offset` (metres)
/// while the spiral phase stays centred: a beam hitting the modulator off
/// centre.
pub fn source_vortex_offset(params: &BeamParams, grid: &GridSpec, offset: (f64, f64)) -> ComplexField {
    let w2 = params.waist * params.waist;
    let ell = params.ell as f64;
    let (ox, oy) = offset;
    let singular = params.ell > 0;
    ComplexField::from_fn(*grid, params.wavelength, |x, y| {
        if singular && x == 0.0 && y == 0.0 {
            return Complex64::new(0.0, 0.0);
        }
        let amp = SOURCE_AMPLITUDE * (-((x - ox).powi(2) + (y - oy).powi(2)) / w2).exp();
        let theta = if x == 0.0 && y == 0.0 { 0.0 } else { y.atan2(x) };
        Complex64::from_polar(amp, -ell * theta)
    })
    .expect("source samples are finite by construction")
}

/// Multiply a field by `exp(i * phase)` sample by sample.
pub fn apply_phase(field: &ComplexField, screen: &PhaseScreen) -> Result<ComplexField> {
    if field.grid() != screen.grid() {
        return Err(OpticsError::validation(
            "phase screen and field are sampled on different grids",
        ));
    }
    let values = field
        .values()
        .iter()
        .zip(screen.values())
        .map(|(v, &phi)| v * Complex64::from_polar(1.0, phi))
        .collect();
    Ok(ComplexField::from_parts_unchecked(*field.grid(), field.wavelength(), values))
}

/// Intermediate quantities of the propagated mode at output radius `r1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HyggTerms {
    /// `k r1 / 2z`
    pub b1: f64,
    /// `1/w0^2 + i k / 2z`
    pub eps1: Complex64,
}

impl HyggTerms {
    pub fn new(params: &BeamParams, z: f64, r1: f64) -> HyggTerms {
        let k = params.wave_number();
        HyggTerms {
            b1: k * r1 / (2.0 * z),
            eps1: Complex64::new(1.0 / (params.waist * params.waist), k / (2.0 * z)),
        }
    }
}

/// `i^n` without going through a complex power.
fn i_pow(n: u32) -> Complex64 {
    match n % 4 {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

fn check_distance(z: f64) -> Result<()> {
    if z.is_finite() && z > 0.0 {
        Ok(())
    } else {
        Err(OpticsError::validation(format!(
            "closed-form propagation needs z > 0, got {z} m"
        )))
    }
}

/// Radially dependent part of the propagated mode (everything except
/// `exp(-i l theta1)`), with the constant prefactor precomputed.
struct RadialMode {
    params: BeamParams,
    z: f64,
    prefactor: Complex64,
    a: f64,
    b: f64,
}

impl RadialMode {
    fn new(params: &BeamParams, z: f64) -> Result<Self> {
        check_distance(z)?;
        let l = params.ell as f64;
        let k = params.wave_number();
        let gamma_ratio = (log_gamma(l / 2.0 + 1.0)? - log_gamma(l + 1.0)?).exp();
        let axial_phase = Complex64::from_polar(1.0, -(k * z).rem_euclid(2.0 * PI));
        let prefactor = SOURCE_AMPLITUDE * i_pow(params.ell + 1) * (PI / (params.wavelength * z))
            * axial_phase
            * gamma_ratio;
        Ok(RadialMode {
            params: *params,
            z,
            prefactor,
            a: (l + 2.0) / 2.0,
            b: l + 1.0,
        })
    }

    fn eval(&self, r1: f64) -> Result<Complex64> {
        let ell = self.params.ell;
        if ell > 0 && r1 == 0.0 {
            return Ok(Complex64::new(0.0, 0.0));
        }
        let HyggTerms { b1, eps1 } = HyggTerms::new(&self.params, self.z, r1);
        let k = self.params.wave_number();
        let curvature = Complex64::from_polar(1.0, -k * r1 * r1 / (2.0 * self.z));
        let power = b1.powi(ell as i32) / eps1.powf(1.0 + ell as f64 / 2.0);
        let hyper = kummer_1f1_real(self.a, self.b, -(b1 * b1) / eps1)?;
        Ok(self.prefactor * curvature * power * hyper)
    }
}

/// Closed-form propagated field at polar output coordinates `(r1, theta1)`.
pub fn hygg_value(params: &BeamParams, z: f64, r1: f64, theta1: f64) -> Result<Complex64> {
    let radial = RadialMode::new(params, z)?.eval(r1)?;
    Ok(radial * Complex64::from_polar(1.0, -(params.ell as f64) * theta1))
}

/// Closed-form propagated field of [`source_vortex`] sampled on `grid`.
///
/// The radial factor is evaluated once per distinct squared index radius
/// `i^2 + j^2`; every sample sharing that radius reuses the same value.
pub fn hygg_field(params: &BeamParams, grid: &GridSpec, z: f64) -> Result<ComplexField> {
    let mode = RadialMode::new(params, z)?;
    let n = grid.n();
    let c = grid.center() as i64;
    let half = (n as i64 - c).max(c) as u64;
    let mut radii: Vec<u64> = (0..=half)
        .flat_map(|i| (0..=i).map(move |j| i * i + j * j))
        .collect();
    radii.sort_unstable();
    radii.dedup();
    let pitch = grid.pitch();
    let radial: Vec<Complex64> = radii
        .par_iter()
        .map(|&s| mode.eval((s as f64).sqrt() * pitch))
        .collect::<Result<_>>()?;
    let ell = params.ell as f64;
    let coords = grid.coords();
    let mut values = vec![Complex64::default(); grid.len()];
    values.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
        let dy = iy as i64 - c;
        for (ix, v) in row.iter_mut().enumerate() {
            let dx = ix as i64 - c;
            let s = (dx * dx + dy * dy) as u64;
            let r = radial[radii.binary_search(&s).expect("radius table covers the grid")];
            let theta = if dx == 0 && dy == 0 { 0.0 } else { coords[iy].atan2(coords[ix]) };
            *v = r * Complex64::from_polar(1.0, -ell * theta);
        }
    });
    ComplexField::new(*grid, params.wavelength, values)
}

/// Propagated fundamental Gaussian from the complex beam parameter
/// `q(z) = z + i zR`: `sqrt(2/pi) (q0/q) exp(-ikz) exp(-i k r^2 / 2q)`.
///
/// Independent of the hypergeometric route; the `l = 0` reference.
pub fn gaussian_beam_value(waist: f64, wavelength: f64, z: f64, r: f64) -> Complex64 {
    let k = 2.0 * PI / wavelength;
    let zr = PI * waist * waist / wavelength;
    let q0 = Complex64::new(0.0, zr);
    let q = Complex64::new(z, zr);
    let axial = Complex64::from_polar(1.0, -(k * z).rem_euclid(2.0 * PI));
    SOURCE_AMPLITUDE * (q0 / q) * axial * (Complex64::new(0.0, -k * r * r / 2.0) / q).exp()
}

/// Gaussian beam radius `w0 sqrt(1 + (z/zR)^2)`.
pub fn gaussian_beam_radius(waist: f64, wavelength: f64, z: f64) -> f64 {
    let zr = PI * waist * waist / wavelength;
    waist * (1.0 + (z / zr).powi(2)).sqrt()
}
