//! Von Karman phase screens and their statistics.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{OpticsError, Result};
use crate::fft::Fft2;
use crate::field::check_wavelength;
use crate::grid::GridSpec;
use crate::seed::derive_seed;

/// Outer scale used for the default `kappa0 = 2 pi / L0`, metres.
pub const DEFAULT_OUTER_SCALE: f64 = 10.0;
/// Inner scale used for the default `kappam = 5.92 / l0`, metres.
pub const DEFAULT_INNER_SCALE: f64 = 0.01;
/// Subharmonic levels added below the FFT grid's lowest frequency.
pub const DEFAULT_SUBHARMONICS: u32 = 3;

/// `(0.423 k^2 Cn2 z)^(-3/5)`.
pub fn fried_parameter(k: f64, cn2: f64, z: f64) -> Result<f64> {
    for (name, v) in [("wave number", k), ("Cn2", cn2), ("path length", z)] {
        if !(v.is_finite() && v > 0.0) {
            return Err(OpticsError::validation(format!("{name} must be positive, got {v}")));
        }
    }
    Ok((0.423 * k * k * cn2 * z).powf(-0.6))
}

/// `0.023 r0^(-5/3) (kappa^2 + kappa0^2)^(-11/6) exp(-kappa^2 / kappam^2)`.
///
/// `kappam` may be infinite (no inner-scale roll-off).
pub fn von_karman_psd(kappa: f64, r0: f64, kappa0: f64, kappam: f64) -> Result<f64> {
    if !(r0.is_finite() && r0 > 0.0) {
        return Err(OpticsError::validation(format!("r0 must be positive, got {r0}")));
    }
    if kappam.is_nan() || kappam <= 0.0 || kappa0.is_nan() || kappa.is_nan() {
        return Err(OpticsError::validation(format!(
            "invalid spectrum arguments kappa={kappa}, kappa0={kappa0}, kappam={kappam}"
        )));
    }
    Ok(psd_unchecked(kappa * kappa, r0, kappa0, kappam))
}

fn psd_unchecked(kappa2: f64, r0: f64, kappa0: f64, kappam: f64) -> f64 {
    0.023 * r0.powf(-5.0 / 3.0) * (kappa2 + kappa0 * kappa0).powf(-11.0 / 6.0) * (-kappa2 / (kappam * kappam)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TurbulenceParams {
    /// m^(-2/3)
    pub cn2: f64,
    pub z: f64,
    /// rad/m
    pub kappa0: f64,
    /// rad/m; `f64::INFINITY` disables the inner-scale roll-off
    pub kappam: f64,
    pub seed: u64,
    pub subharmonics: u32,
}

impl TurbulenceParams {
    /// Default outer and inner scales, three subharmonic levels.
    pub fn new(cn2: f64, z: f64, seed: u64) -> Result<Self> {
        let p = TurbulenceParams {
            cn2,
            z,
            kappa0: 2.0 * PI / DEFAULT_OUTER_SCALE,
            kappam: 5.92 / DEFAULT_INNER_SCALE,
            seed,
            subharmonics: DEFAULT_SUBHARMONICS,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kappa0(self, kappa0: f64) -> Result<Self> {
        let p = TurbulenceParams { kappa0, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_kappam(self, kappam: f64) -> Result<Self> {
        let p = TurbulenceParams { kappam, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn with_seed(self, seed: u64) -> Self {
        TurbulenceParams { seed, ..self }
    }

    pub fn with_subharmonics(self, subharmonics: u32) -> Result<Self> {
        let p = TurbulenceParams { subharmonics, ..self };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.cn2.is_finite() && self.cn2 > 0.0) {
            return Err(OpticsError::validation(format!("Cn2 must be positive, got {}", self.cn2)));
        }
        if !(self.z.is_finite() && self.z > 0.0) {
            return Err(OpticsError::validation(format!("path length must be positive, got {}", self.z)));
        }
        if !(self.kappa0.is_finite() && self.kappa0 >= 0.0) {
            return Err(OpticsError::validation(format!("kappa0 must be >= 0, got {}", self.kappa0)));
        }
        if self.kappam.is_nan() || self.kappam <= self.kappa0 {
            return Err(OpticsError::validation(format!(
                "kappam ({}) must exceed kappa0 ({})",
                self.kappam, self.kappa0
            )));
        }
        if self.subharmonics > 8 {
            return Err(OpticsError::validation(format!(
                "at most 8 subharmonic levels, got {}",
                self.subharmonics
            )));
        }
        Ok(())
    }

    pub fn fried_parameter(&self, wavelength: f64) -> Result<f64> {
        check_wavelength(wavelength)?;
        fried_parameter(2.0 * PI / wavelength, self.cn2, self.z)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    grid: GridSpec,
    values: Vec<f64>,
    params: Option<TurbulenceParams>,
    r0: Option<f64>,
}

impl PhaseScreen {
    /// Wrap an arbitrary phase map (radians).
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(OpticsError::validation(format!(
                "expected {} phase samples, got {}",
                grid.len(),
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(OpticsError::validation("phase screen contains non-finite values"));
        }
        Ok(PhaseScreen {
            grid,
            values,
            params: None,
            r0: None,
        })
    }

    pub(crate) fn with_params(mut self, params: TurbulenceParams, r0: f64) -> Self {
        self.params = Some(params);
        self.r0 = Some(r0);
        self
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn params(&self) -> Option<&TurbulenceParams> {
        self.params.as_ref()
    }

    pub fn r0(&self) -> Option<f64> {
        self.r0
    }

    pub fn at(&self, ix: usize, iy: usize) -> f64 {
        self.values[iy * self.grid.n() + ix]
    }
}

/// Integral of the spectrum over a square cell of side `d` centred on
/// `(fx, fy)`, by 24 x 24 midpoint sub-cells.
fn cell_weight(fx: f64, fy: f64, d: f64, psd: &impl Fn(f64) -> f64) -> f64 {
    const M: usize = 24;
    let h = d / M as f64;
    let mut acc = 0.0;
    for a in 0..M {
        let x = fx - d / 2.0 + (a as f64 + 0.5) * h;
        for b in 0..M {
            let y = fy - d / 2.0 + (b as f64 + 0.5) * h;
            acc += psd(x * x + y * y);
        }
    }
    acc * h * h
}

fn complex_normal(rng: &mut ChaCha8Rng) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// Draw a phase screen `Re{ sum_f M(f) sqrt(Phi(f)) df e^(i 2 pi f . x) }`.
///
/// The spectrum is sampled on spatial frequency `f` in cycles/m, with the
/// wave-number scales converted as `kappa / 2 pi`. The eight bins around DC
/// carry the spectrum integrated over their cell, and each subharmonic level
/// `p` adds eight more cells of width `df / 3^p`. DC is zeroed and the mean
/// removed.
pub fn generate_screen(grid: &GridSpec, params: &TurbulenceParams, wavelength: f64) -> Result<PhaseScreen> {
    params.validate()?;
    let r0 = params.fried_parameter(wavelength)?;
    let f0 = params.kappa0 / (2.0 * PI);
    let fm = params.kappam / (2.0 * PI);
    let psd = |f2: f64| psd_unchecked(f2, r0, f0, fm);
    let n = grid.n();
    let df = 1.0 / grid.extent();
    let freqs: Vec<f64> = (0..n).map(|k| grid.frequency(k)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);

    let mut spec = vec![Complex64::default(); n * n];
    for (ky, row) in spec.chunks_exact_mut(n).enumerate() {
        for (kx, v) in row.iter_mut().enumerate() {
            *v = complex_normal(&mut rng);
            let (fx, fy) = (freqs[kx], freqs[ky]);
            let near_dc = fx.abs() < 1.5 * df && fy.abs() < 1.5 * df;
            let w = if kx == 0 && ky == 0 {
                0.0
            } else if near_dc {
                cell_weight(fx, fy, df, &psd)
            } else {
                psd(fx * fx + fy * fy) * df * df
            };
            *v *= w.sqrt();
        }
    }
    Fft2::inverse(n).process(&mut spec);
    let mut values: Vec<f64> = spec.iter().map(|c| c.re).collect();

    let coords = grid.coords();
    for p in 1..=params.subharmonics {
        let dfp = df / 3f64.powi(p as i32);
        for (a, b) in [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)] {
            let (fx, fy) = (a as f64 * dfp, b as f64 * dfp);
            let amp = complex_normal(&mut rng) * cell_weight(fx, fy, dfp, &psd).sqrt();
            let ex: Vec<Complex64> = coords.iter().map(|&x| Complex64::from_polar(1.0, 2.0 * PI * fx * x)).collect();
            values.par_chunks_mut(n).zip(&coords).for_each(|(row, &y)| {
                let ey = amp * Complex64::from_polar(1.0, 2.0 * PI * fy * y);
                for (v, e) in row.iter_mut().zip(&ex) {
                    *v += (ey * e).re;
                }
            });
        }
    }

    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v -= mean);
    Ok(PhaseScreen::from_values(*grid, values)?.with_params(*params, r0))
}

/// Seed of screen `index` in an ensemble rooted at `master`.
pub fn screen_seed(master: u64, index: u64) -> u64 {
    derive_seed(master, &[index])
}

/// Ensemble structure function `<(phi(x + dr) - phi(x))^2>` over horizontal
/// sample pairs of `n_screens` screens with seeds `screen_seed(params.seed, i)`.
///
/// Separations are rounded to whole samples; the returned separation is the
/// realised lag.
pub fn structure_function(
    params: &TurbulenceParams,
    grid: &GridSpec,
    wavelength: f64,
    n_screens: usize,
    separations: &[f64],
) -> Result<Vec<(f64, f64)>> {
    if n_screens < 50 {
        return Err(OpticsError::validation(format!(
            "structure function needs at least 50 screens, got {n_screens}"
        )));
    }
    let lags = lags_for(grid, separations)?;
    let per_screen: Vec<Vec<f64>> = (0..n_screens as u64)
        .into_par_iter()
        .map(|i| {
            let p = params.with_seed(screen_seed(params.seed, i));
            generate_screen(grid, &p, wavelength).map(|s| screen_structure(&s, &lags))
        })
        .collect::<Result<_>>()?;
    Ok(lags
        .iter()
        .enumerate()
        .map(|(j, &m)| {
            let mean = per_screen.iter().map(|d| d[j]).sum::<f64>() / n_screens as f64;
            (m as f64 * grid.pitch(), mean)
        })
        .collect())
}

/// Whole-sample lags nearest to `separations` (metres).
pub fn lags_for(grid: &GridSpec, separations: &[f64]) -> Result<Vec<usize>> {
    separations
        .iter()
        .map(|&s| {
            if !(s.is_finite() && s >= 0.0) || s >= grid.extent() {
                return Err(OpticsError::validation(format!(
                    "separation {s} m outside [0, {}) m",
                    grid.extent()
                )));
            }
            Ok((s / grid.pitch()).round() as usize)
        })
        .collect()
}

/// Mean squared horizontal phase difference of one screen at each lag.
pub fn screen_structure(screen: &PhaseScreen, lags: &[usize]) -> Vec<f64> {
    let n = screen.grid().n();
    lags.iter()
        .map(|&m| {
            if m == 0 {
                return 0.0;
            }
            let mut acc = 0.0;
            for row in screen.values().chunks_exact(n) {
                acc += row.iter().zip(&row[m..]).map(|(a, b)| (b - a) * (b - a)).sum::<f64>();
            }
            acc / ((n - m) * n) as f64
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const LAMBDA: f64 = 632.8e-9;

    #[test]
    fn fried_parameter_power_laws() {
        let k = 2.0 * PI / LAMBDA;
        let r0 = fried_parameter(k, 5e-8, 1.0).unwrap();
        assert!((fried_parameter(k, 5e-8, 2.0).unwrap() / r0 - 2f64.powf(-0.6)).abs() < 1e-12);
        assert!((fried_parameter(k, 2e-7, 1.0).unwrap() / r0 - 4f64.powf(-0.6)).abs() < 1e-12);
        assert!(fried_parameter(k, 0.0, 1.0).unwrap_err().is_validation());
        assert!(fried_parameter(-k, 1e-8, 1.0).is_err());
    }

    #[test]
    fn psd_pure_power_law_ratio() {
        let a = von_karman_psd(50.0, 1e-3, 0.0, f64::INFINITY).unwrap();
        let b = von_karman_psd(100.0, 1e-3, 0.0, f64::INFINITY).unwrap();
        assert!((b / a - 2f64.powf(-11.0 / 3.0)).abs() < 1e-12);
        assert!(von_karman_psd(1.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn params_validation() {
        assert!(TurbulenceParams::new(0.0, 1.0, 1).is_err());
        assert!(TurbulenceParams::new(1e-8, -1.0, 1).is_err());
        let p = TurbulenceParams::new(1e-8, 1.0, 1).unwrap();
        assert!(p.with_kappam(0.1).is_err());
        assert!(p.with_kappa0(0.0).is_ok());
        assert!(p.with_subharmonics(9).is_err());
    }

    #[test]
    fn screens_are_deterministic_and_zero_mean() {
        let g = GridSpec::new(64, 0.01).unwrap();
        let p = TurbulenceParams::new(5e-8, 1.0, 42).unwrap();
        let a = generate_screen(&g, &p, LAMBDA).unwrap();
        let b = generate_screen(&g, &p, LAMBDA).unwrap();
        assert_eq!(a, b);
        let c = generate_screen(&g, &p.with_seed(43), LAMBDA).unwrap();
        assert_ne!(a.values(), c.values());
        let mean = a.values().iter().sum::<f64>() / a.values().len() as f64;
        assert!(mean.abs() < 1e-9);
        assert!((a.r0().unwrap() - 1.6163e-4).abs() < 1e-7);
    }

    #[test]
    fn zero_lag_structure_is_zero() {
        let g = GridSpec::new(32, 0.01).unwrap();
        let p = TurbulenceParams::new(5e-8, 1.0, 7).unwrap();
        let d = structure_function(&p, &g, LAMBDA, 50, &[0.0, 0.001]).unwrap();
        assert_eq!(d[0], (0.0, 0.0));
        assert!(d[1].1 > 0.0);
        assert!(structure_function(&p, &g, LAMBDA, 50, &[0.02]).unwrap_err().is_validation());
        assert!(structure_function(&p, &g, LAMBDA, 10, &[0.001]).is_err());
    }

    #[test]
    fn kolmogorov_law_on_small_grid() {
        let g = GridSpec::new(128, 0.0065).unwrap();
        let p = TurbulenceParams::new(5e-8, 1.0, 11)
            .unwrap()
            .with_kappam(f64::INFINITY)
            .unwrap();
        let r0 = p.fried_parameter(LAMBDA).unwrap();
        let seps: Vec<f64> = [8.0, 12.0, 16.0].iter().map(|m| m * g.pitch()).collect();
        for (s, d) in structure_function(&p, &g, LAMBDA, 200, &seps).unwrap() {
            let law = 6.88 * (s / r0).powf(5.0 / 3.0);
            assert!((d / law - 1.0).abs() < 0.2, "sep {s}: {d} vs {law}");
        }
    }
}
