//! Self-checks against closed forms and invariants, one line per check.

use std::time::Instant;

use anyhow::Result;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oam_classifier::{backward, cross_entropy, forward, Architecture, Mode, Model, Tensor};
use oam_core::beam::{hygg_field, source_vortex, BeamParams, HE_NE_WAVELENGTH};
use oam_core::io::{read_field, write_field};
use oam_core::profile::{DETECTABLE_HALF_WIDTH, LOBE_THRESHOLD};
use oam_core::{
    count_side_lobes, cross_section, fried_parameter, propagate_spectral, relative_l2, ring_peak_radius,
    second_moment_radius, structure_function, ComplexField, GridSpec, TurbulenceParams,
};

use crate::cli::Suite;

struct Check {
    name: &'static str,
    run: fn() -> Result<(bool, String)>,
}

fn default_grid() -> Result<GridSpec> {
    Ok(GridSpec::new(GridSpec::DEFAULT_N, GridSpec::DEFAULT_EXTENT)?)
}

fn fried() -> Result<(bool, String)> {
    let k = 2.0 * std::f64::consts::PI / HE_NE_WAVELENGTH;
    let r0 = fried_parameter(k, 5e-8, 1.0)?;
    let direct = (0.423 * k * k * 5e-8_f64).powf(-0.6);
    let ok = (r0 - direct).abs() <= 1e-12 * direct && (r0 - 1.62e-4).abs() < 1e-6;
    Ok((ok, format!("r0 = {r0:.6e} m")))
}

fn unitarity() -> Result<(bool, String)> {
    let grid = GridSpec::new(256, 0.013)?;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let values = (0..grid.len())
        .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
        .collect();
    let field = ComplexField::new(grid, HE_NE_WAVELENGTH, values)?;
    let out = propagate_spectral(&field, 0.7)?;
    let rel = (out.power() - field.power()).abs() / field.power();
    Ok((rel <= 1e-10, format!("relative power change {rel:.2e}")))
}

fn gaussian_law() -> Result<(bool, String)> {
    let p = BeamParams::new(0, 2e-3, HE_NE_WAVELENGTH)?;
    let out = propagate_spectral(&source_vortex(&p, &default_grid()?), 1.0)?;
    let w = second_moment_radius(&out.intensity());
    let zr = std::f64::consts::PI * 4e-6 / HE_NE_WAVELENGTH;
    let expect = 2e-3 * (1.0 + (1.0 / zr).powi(2)).sqrt();
    let rel = (w - expect).abs() / expect;
    Ok((rel <= 1e-3, format!("w(1 m) = {:.5} mm, closed form {:.5} mm", w * 1e3, expect * 1e3)))
}

fn closure_case(ell: u32, z: f64) -> Result<f64> {
    let grid = default_grid()?;
    let p = BeamParams::new(ell, 2e-3, HE_NE_WAVELENGTH)?;
    let analytic = hygg_field(&p, &grid, z)?;
    let numeric = propagate_spectral(&source_vortex(&p, &grid), z)?;
    Ok(relative_l2(&numeric, &analytic)?)
}

fn closure_one() -> Result<(bool, String)> {
    let e = closure_case(1, 0.4)?;
    Ok((e <= 2e-2, format!("l=1 z=0.40 m relative L2 {e:.4}")))
}

fn closure_low() -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    for ell in 1..=3 {
        for z in [0.4, 0.7, 1.0] {
            worst = worst.max(closure_case(ell, z)?);
        }
    }
    Ok((worst <= 2e-2, format!("l=1..3, worst relative L2 {worst:.4}")))
}

fn lobes() -> Result<(bool, String)> {
    let mut parts = Vec::new();
    let mut ok = true;
    for (ell, z, want) in [(3, 0.7, 4), (4, 0.5, 6)] {
        let p = BeamParams::new(ell, 2e-3, HE_NE_WAVELENGTH)?;
        let map = hygg_field(&p, &default_grid()?, z)?.intensity();
        let c = count_side_lobes(&cross_section(&map), DETECTABLE_HALF_WIDTH, LOBE_THRESHOLD);
        ok &= c.left == want && c.right == want;
        parts.push(format!("l={ell} z={z}: {}/{}", c.left, c.right));
    }
    Ok((ok, parts.join(", ")))
}

fn monotonic() -> Result<(bool, String)> {
    let grid = default_grid()?;
    let zs = [0.4, 0.55, 0.7, 0.85, 1.0];
    let mut radii = vec![vec![0.0; zs.len()]; 5];
    for ell in 1..=5u32 {
        let p = BeamParams::new(ell, 2e-3, HE_NE_WAVELENGTH)?;
        for (j, &z) in zs.iter().enumerate() {
            radii[ell as usize - 1][j] = ring_peak_radius(&hygg_field(&p, &grid, z)?.intensity());
        }
    }
    let along_z = radii.iter().all(|r| r.windows(2).all(|w| w[1] > w[0]));
    let along_l = (0..zs.len()).all(|j| (1..5).all(|i| radii[i][j] > radii[i - 1][j]));
    Ok((along_z && along_l, format!("ring radius {:.3}..{:.3} mm", radii[0][0] * 1e3, radii[4][4] * 1e3)))
}

fn turbulence() -> Result<(bool, String)> {
    let grid = GridSpec::new(128, 6.5e-3)?;
    let params = TurbulenceParams::new(5e-8, 1.0, 3)?.with_kappam(f64::INFINITY)?;
    let r0 = params.fried_parameter(HE_NE_WAVELENGTH)?;
    let seps: Vec<f64> = [4.0, 8.0, 16.0].iter().map(|m| m * grid.pitch()).collect();
    let d = structure_function(&params, &grid, HE_NE_WAVELENGTH, 50, &seps)?;
    let ratios: Vec<f64> = d.iter().map(|&(r, v)| v / (6.88 * (r / r0).powf(5.0 / 3.0))).collect();
    let ok = ratios.iter().all(|q| (q - 1.0).abs() <= 0.2);
    Ok((ok, format!("D / Kolmogorov = {ratios:.3?}")))
}

fn field_io() -> Result<(bool, String)> {
    let grid = GridSpec::new(32, 1e-3)?;
    let f = source_vortex(&BeamParams::new(2, 2e-4, HE_NE_WAVELENGTH)?, &grid);
    let mut buf = Vec::new();
    write_field(&mut buf, &f)?;
    let back = read_field(buf.as_slice())?;
    Ok((back == f, format!("{} bytes", buf.len())))
}

fn loss_sanity() -> Result<(bool, String)> {
    let model = Model::<f32>::zeroed(Architecture::standard(65)?, 0.5)?;
    let batch = Tensor::new(vec![65, 1, 64, 64], vec![0.5f32; 65 * 64 * 64])?;
    let (probs, _) = forward(&model, &batch, Mode::Eval, 0)?;
    let labels: Vec<usize> = (0..65).collect();
    let loss = cross_entropy(&probs, &labels)? as f64 / 65.0;
    Ok(((loss - 65f64.ln()).abs() <= 1e-3, format!("per-sample loss {loss:.6}")))
}

fn gradients() -> Result<(bool, String)> {
    let model = Model::<f64>::init(Architecture::new(8, [2, 3, 4], 9)?, 0.5, 7)?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let batch = Tensor::new(vec![2, 1, 8, 8], (0..128).map(|_| rng.random::<f64>()).collect())?;
    let labels = [1, 7];
    let (probs, cache) = forward(&model, &batch, Mode::Train, 3)?;
    let grads = backward(&model, &cache, &probs, &labels)?;
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for t in 0..grads.tensors.len() {
        // first and last entry of every tensor
        for k in [0, grads.tensors[t].len() - 1] {
            let loss = |delta: f64| -> Result<f64> {
                let mut m = model.clone();
                m.params_mut().tensors[t].data_mut()[k] += delta;
                let (p, _) = forward(&m, &batch, Mode::Train, 3)?;
                Ok(cross_entropy(&p, &labels)?)
            };
            let numeric = (loss(h)? - loss(-h)?) / (2.0 * h);
            let analytic = grads.tensors[t].data()[k];
            worst = worst.max((numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6));
        }
    }
    Ok((worst <= 1e-4, format!("worst relative error {worst:.2e}")))
}

fn checks(suite: Suite) -> Vec<Check> {
    let mut v = vec![
        Check { name: "fried-parameter", run: fried },
        Check { name: "unitarity", run: unitarity },
        Check { name: "gaussian-law", run: gaussian_law },
        Check { name: "closure", run: closure_one },
        Check { name: "side-lobes", run: lobes },
        Check { name: "field-io", run: field_io },
        Check { name: "loss-sanity", run: loss_sanity },
        Check { name: "gradients", run: gradients },
    ];
    if suite == Suite::Full {
        v.push(Check { name: "closure-low-charge", run: closure_low });
        v.push(Check { name: "ring-monotonicity", run: monotonic });
        v.push(Check { name: "structure-function", run: turbulence });
    }
    v
}

/// Run a suite, print one line per check, and report whether all passed.
pub fn run(suite: Suite) -> bool {
    let mut all = true;
    for c in checks(suite) {
        let t = Instant::now();
        let (ok, detail) = match (c.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e:#}")),
        };
        all &= ok;
        println!(
            "{} {:<20} {} ({:.1} s)",
            if ok { "PASS" } else { "FAIL" },
            c.name,
            detail,
            t.elapsed().as_secs_f64()
        );
    }
    all
}
