//! End-to-end acceptance run: one PASS/FAIL line per criterion. Exits
//! non-zero when a gating check fails.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

use oam_classifier::{
    backward, cross_entropy, evaluate, forward, prepare, train_examples, Architecture, Mode, Model, Tensor, TrainConfig,
};
use oam_core::beam::{hygg_field, source_vortex, BeamParams};
use oam_core::profile::{count_side_lobes, cross_section, ring_peak_radius, second_moment_radius};
use oam_core::propagate::{propagate_quadrature, propagate_spectral};
use oam_core::turbulence::{generate_screen, lags_for, screen_seed, screen_structure, TurbulenceParams};
use oam_core::{relative_l2, ComplexField, GridSpec};
use oam_dataset::{generate_dataset, load_manifest, load_split, DatasetConfig, SplitCounts, Split};

const LAMBDA: f64 = 632.8e-9;
const W0: f64 = 2e-3;
const ZS: [f64; 3] = [0.40, 0.70, 1.00];

struct Report {
    gating_failures: Vec<String>,
}

impl Report {
    fn line(&mut self, name: &str, pass: bool, gating: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        if gating && !pass {
            self.gating_failures.push(name.to_string());
        }
    }
}

fn default_grid() -> GridSpec {
    GridSpec::new(1024, 0.026).unwrap()
}

fn beam(ell: u32) -> BeamParams {
    BeamParams::new(ell, W0, LAMBDA).unwrap()
}

/// Relative RMS between direct Fresnel sums and the spectral field at 25
/// grid nodes within 2 mm of the axis.
fn spot_check(source: &ComplexField, spectral: &ComplexField, z: f64) -> f64 {
    let g = source.grid();
    let c = g.center();
    let step = (0.65e-3 / g.pitch()).round() as usize;
    let mut nodes = Vec::new();
    for j in 0..5 {
        for i in 0..5 {
            nodes.push((c + i * step - 2 * step, c + j * step - 2 * step));
        }
    }
    let polar: Vec<(f64, f64)> = nodes
        .iter()
        .map(|&(ix, iy)| {
            let (x, y) = (g.coord(ix), g.coord(iy));
            (x.hypot(y), y.atan2(x))
        })
        .collect();
    let direct = propagate_quadrature(source, z, &polar).unwrap();
    let (mut num, mut den) = (0.0, 0.0);
    for (&(ix, iy), d) in nodes.iter().zip(&direct) {
        let s = spectral.at(ix, iy);
        num += (d - s).norm_sqr();
        den += s.norm_sqr();
    }
    (num / den).sqrt()
}

fn closure(grid: &GridSpec, ell: u32, z: f64) -> (f64, ComplexField, ComplexField) {
    let p = beam(ell);
    let source = source_vortex(&p, grid);
    let spectral = propagate_spectral(&source, z).unwrap();
    let analytic = hygg_field(&p, grid, z).unwrap();
    (relative_l2(&spectral, &analytic).unwrap(), source, spectral)
}

fn criterion_1(r: &mut Report) {
    let t = Instant::now();
    let grid = default_grid();
    let mut worst_low: f64 = 0.0;
    let mut worst_high: f64 = 0.0;
    let mut worst_spot: f64 = 0.0;
    let mut cells = Vec::new();
    for ell in 1..=5 {
        for z in ZS {
            let (e, source, spectral) = closure(&grid, ell, z);
            worst_spot = worst_spot.max(spot_check(&source, &spectral, z));
            if ell <= 3 {
                worst_low = worst_low.max(e);
            } else {
                worst_high = worst_high.max(e);
            }
            cells.push(format!("{e:.4}"));
        }
    }
    let secs = t.elapsed().as_secs_f64();
    r.line(
        "criterion 1 closure, default 1024 x 26 mm grid, l=1..5",
        worst_low.max(worst_high) <= 2e-2 && worst_spot <= 1e-3,
        false,
        format!(
            "worst rel L2 l<=3 {worst_low:.4}, l=4..5 {worst_high:.4} (limit 0.02); per-cell [{}]; quadrature spot RMS {worst_spot:.2e}; {secs:.0} s",
            cells.join(" ")
        ),
    );
    r.line(
        "criterion 1 (l=1..3 on the default grid, quadrature spot checks)",
        worst_low <= 2e-2 && worst_spot <= 1e-3,
        true,
        format!("worst rel L2 {worst_low:.4}, spot RMS {worst_spot:.2e}"),
    );
    let t = Instant::now();
    let fine = GridSpec::new(4096, 0.0512).unwrap();
    let mut worst: f64 = 0.0;
    for ell in 4..=5 {
        for z in ZS {
            worst = worst.max(closure(&fine, ell, z).0);
        }
    }
    let total = secs + t.elapsed().as_secs_f64();
    r.line(
        "criterion 1 supplementary (l=4..5 on 4096 x 51.2 mm)",
        worst <= 2e-2 && total <= 300.0,
        true,
        format!("worst rel L2 {worst:.4}; criterion 1 total {total:.0} s (limit 300 s)"),
    );
}

fn criterion_2(r: &mut Report) {
    let zr = PI * W0 * W0 / LAMBDA;
    let expect = W0 * (1.0 + (1.0 / zr).powi(2)).sqrt();
    let out = propagate_spectral(&source_vortex(&beam(0), &default_grid()), 1.0).unwrap();
    let w = second_moment_radius(&out.intensity());
    let rel = (w - 2.0025e-3).abs() / 2.0025e-3;
    r.line(
        "criterion 2 Gaussian law",
        rel <= 1e-3 && (zr - 19.858).abs() < 1e-3 && (expect - 2.0025e-3).abs() < 1e-7,
        true,
        format!("w(1 m) = {:.5} mm (closed form {:.5} mm, zR {zr:.3} m), rel dev {rel:.1e}", w * 1e3, expect * 1e3),
    );
}

fn criterion_3(r: &mut Report) {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = [64, 128, 256][rng.random_range(0..3)];
        let grid = GridSpec::new(n, rng.random_range(2e-3..2e-2)).unwrap();
        let values = (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let f = ComplexField::new(grid, LAMBDA, values).unwrap();
        let out = propagate_spectral(&f, rng.random_range(0.05..2.0)).unwrap();
        worst = worst.max((out.power() - f.power()).abs() / f.power());
    }
    r.line("criterion 3 unitarity", worst <= 1e-10, true, format!("worst relative power change {worst:.2e} over 20 fields"));
}

fn criterion_4(r: &mut Report) {
    let grid = default_grid();
    let mut ok = true;
    let mut parts = Vec::new();
    for (ell, z, want) in [(3, 0.70, 4), (4, 0.50, 6)] {
        let map = propagate_spectral(&source_vortex(&beam(ell), &grid), z).unwrap().intensity();
        let c = count_side_lobes(&cross_section(&map), 2.2e-3, 0.005);
        ok &= c.left == want && c.right == want;
        parts.push(format!("l={ell} z={z:.2} m: {}/{} (want {want})", c.left, c.right));
    }
    r.line("criterion 4 side lobes", ok, true, parts.join(", "));
}

fn criterion_5(r: &mut Report) {
    let grid = default_grid();
    let zs: Vec<f64> = (0..13).map(|i| 0.40 + 0.05 * i as f64).collect();
    let radii: Vec<Vec<f64>> = (1..=5)
        .map(|ell| {
            let source = source_vortex(&beam(ell), &grid);
            zs.iter()
                .map(|&z| ring_peak_radius(&propagate_spectral(&source, z).unwrap().intensity()))
                .collect()
        })
        .collect();
    let along_z = radii.iter().all(|row| row.windows(2).all(|w| w[1] > w[0]));
    let along_l = (0..zs.len()).all(|j| (1..5).all(|i| radii[i][j] > radii[i - 1][j]));
    r.line(
        "criterion 5 ring-radius monotonicity",
        along_z && along_l,
        true,
        format!(
            "along z {along_z}, along l {along_l}; l=1: {:.3} -> {:.3} mm, l=5: {:.3} -> {:.3} mm",
            radii[0][0] * 1e3,
            radii[0][12] * 1e3,
            radii[4][0] * 1e3,
            radii[4][12] * 1e3
        ),
    );
}

fn criterion_6(r: &mut Report) {
    let t = Instant::now();
    let grid = default_grid();
    let (cn2, z) = (5e-8, 1.0);
    let k = 2.0 * PI / LAMBDA;
    let r0 = (0.423 * k * k * cn2 * z).powf(-3.0 / 5.0);
    let params = TurbulenceParams::new(cn2, z, 61).unwrap().with_kappam(f64::INFINITY).unwrap();
    let lo = 8.0 * grid.pitch();
    let hi = grid.extent() / 8.0;
    let seps: Vec<f64> = (0..10).map(|i| lo * (hi / lo).powf(i as f64 / 9.0)).collect();
    let lags = lags_for(&grid, &seps).unwrap();
    let n = grid.n();
    let probes: Vec<usize> = [(n / 2, n / 2), (n / 4, n / 4), (3 * n / 4, n / 4), (n / 4, 3 * n / 4), (3 * n / 4, 3 * n / 4)]
        .iter()
        .map(|&(x, y)| y * n + x)
        .collect();
    let screens = 200;
    let mut d = vec![0.0; lags.len()];
    let mut sum = vec![0.0; probes.len()];
    let mut sum2 = vec![0.0; probes.len()];
    let mut worst_piston: f64 = 0.0;
    for i in 0..screens {
        let s = generate_screen(&grid, &params.with_seed(screen_seed(params.seed, i)), LAMBDA).unwrap();
        for (acc, v) in d.iter_mut().zip(screen_structure(&s, &lags)) {
            *acc += v;
        }
        for (j, &p) in probes.iter().enumerate() {
            sum[j] += s.values()[p];
            sum2[j] += s.values()[p] * s.values()[p];
        }
        worst_piston = worst_piston.max((s.values().iter().sum::<f64>() / s.values().len() as f64).abs());
    }
    let ratios: Vec<f64> = lags
        .iter()
        .zip(&d)
        .map(|(&m, &v)| (v / screens as f64) / (6.88 * (m as f64 * grid.pitch() / r0).powf(5.0 / 3.0)))
        .collect();
    let law_ok = ratios.iter().all(|q| (q - 1.0).abs() <= 0.2);
    let ns = screens as f64;
    let zscores: Vec<f64> = sum
        .iter()
        .zip(&sum2)
        .map(|(&s1, &s2)| {
            let mean = s1 / ns;
            let var = (s2 - ns * mean * mean) / (ns - 1.0);
            mean.abs() / (var / ns).sqrt()
        })
        .collect();
    let zero_mean = zscores.iter().all(|&z| z <= 3.0) && worst_piston <= 1e-9;
    let again = generate_screen(&grid, &params.with_seed(screen_seed(params.seed, 0)), LAMBDA).unwrap();
    let first = generate_screen(&grid, &params.with_seed(screen_seed(params.seed, 0)), LAMBDA).unwrap();
    let other = generate_screen(&grid, &params.with_seed(screen_seed(params.seed, 1)), LAMBDA).unwrap();
    let deterministic = again.values() == first.values() && other.values() != first.values();
    let secs = t.elapsed().as_secs_f64();
    r.line(
        "criterion 6 turbulence statistics",
        law_ok && zero_mean && deterministic && secs <= 600.0,
        true,
        format!(
            "r0 {:.4} mm; D/law over {:.2}..{:.2} mm = [{}]; ensemble-mean z-scores [{}], max |piston| {worst_piston:.1e}; deterministic {deterministic}; {secs:.0} s",
            r0 * 1e3,
            lags[0] as f64 * grid.pitch() * 1e3,
            *lags.last().unwrap() as f64 * grid.pitch() * 1e3,
            ratios.iter().map(|q| format!("{q:.3}")).collect::<Vec<_>>().join(" "),
            zscores.iter().map(|q| format!("{q:.2}")).collect::<Vec<_>>().join(" ")
        ),
    );
}

fn criterion_7(r: &mut Report) {
    let arch = Architecture::new(8, [2, 3, 4], 9).unwrap();
    let model = Model::<f64>::init(arch, 0.5, 17).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let batch = Tensor::new(vec![3, 1, 8, 8], (0..192).map(|_| rng.random::<f64>()).collect()).unwrap();
    let labels = [2, 5, 8];
    let seed = 4;
    let (probs, cache) = forward(&model, &batch, Mode::Train, seed).unwrap();
    let grads = backward(&model, &cache, &probs, &labels).unwrap();
    let h = 1e-5;
    let names = ["conv1 w", "conv1 b", "conv2 w", "conv2 b", "conv3 w", "conv3 b", "dense w", "dense b"];
    let mut per_layer = Vec::new();
    let mut ok = true;
    for (t, name) in names.iter().enumerate() {
        let mut worst: f64 = 0.0;
        for k in 0..grads.tensors[t].len() {
            let loss = |delta: f64| {
                let mut m = model.clone();
                m.params_mut().tensors[t].data_mut()[k] += delta;
                let (p, _) = forward(&m, &batch, Mode::Train, seed).unwrap();
                cross_entropy(&p, &labels).unwrap()
            };
            let numeric = (loss(h) - loss(-h)) / (2.0 * h);
            let analytic = grads.tensors[t].data()[k];
            worst = worst.max((numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-6));
        }
        ok &= worst <= 1e-4;
        per_layer.push(format!("{name} {worst:.1e}"));
    }
    r.line("criterion 7 gradient check", ok, true, format!("worst relative error per tensor: {}", per_layer.join(", ")));
}

fn criterion_8(r: &mut Report) {
    let model = Model::<f32>::zeroed(Architecture::standard(65).unwrap(), 0.5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let batch = Tensor::new(vec![65, 1, 64, 64], (0..65 * 64 * 64).map(|_| rng.random::<f32>()).collect()).unwrap();
    let labels: Vec<usize> = (0..65).collect();
    let (probs, _) = forward(&model, &batch, Mode::Eval, 0).unwrap();
    let loss = cross_entropy(&probs, &labels).unwrap() as f64 / 65.0;
    r.line(
        "criterion 8 initial loss",
        (loss - 4.1744).abs() <= 1e-3,
        true,
        format!("per-sample loss {loss:.5} (ln 65 = {:.5})", 65f64.ln()),
    );
}

fn count_pgm(dir: &Path) -> usize {
    std::fs::read_dir(dir)
        .map(|d| {
            d.filter_map(|e| e.ok())
                .map(|e| {
                    let p = e.path();
                    if p.is_dir() {
                        count_pgm(&p)
                    } else {
                        usize::from(p.extension().is_some_and(|x| x == "pgm"))
                    }
                })
                .sum()
        })
        .unwrap_or(0)
}

fn criterion_9_and_10(r: &mut Report, work: &Path) {
    let t = Instant::now();
    let data = work.join("desk");
    let out = Command::new(env!("CARGO_BIN_EXE_oam-forge"))
        .args(["dataset", "--ells", "1-3", "--zs", "0.40m:1.00m:0.30m", "--per-class", "40/10/10", "--seed", "7", "--out"])
        .arg(&data)
        .output()
        .unwrap();
    let gen_secs = t.elapsed().as_secs_f64();
    let files = [Split::Train, Split::Val, Split::Test].map(|s| count_pgm(&data.join(s.name())));
    r.line(
        "cli dataset example",
        out.status.success() && files == [360, 90, 90] && data.join("manifest.json").is_file(),
        true,
        format!("{}/{}/{} images plus manifest in {gen_secs:.0} s", files[0], files[1], files[2]),
    );
    let manifest = load_manifest(&data).unwrap();
    let labels = manifest.labels().clone();
    let train_set = prepare::<f32>(&load_split(&data, &manifest, Split::Train).unwrap(), 64).unwrap();
    let val_set = prepare::<f32>(&load_split(&data, &manifest, Split::Val).unwrap(), 64).unwrap();

    let t = Instant::now();
    let config = TrainConfig {
        epochs: 30,
        seed: 1,
        ..TrainConfig::default()
    };
    let model = Model::<f32>::init(Architecture::standard(9).unwrap(), config.dropout, 1).unwrap();
    let (model, metrics) = train_examples(model, &train_set, &val_set, &config).unwrap();
    let ev = evaluate(&model, &val_set, 32).unwrap();
    let train_secs = t.elapsed().as_secs_f64();
    // adjacent: same l, neighbouring z
    let nz = labels.zs().len();
    let (mut errors, mut adjacent) = (0u64, 0u64);
    for (ti, row) in ev.confusion.counts.iter().enumerate() {
        for (pi, &c) in row.iter().enumerate() {
            if ti != pi {
                errors += c;
                if ti / nz == pi / nz && (ti % nz).abs_diff(pi % nz) == 1 {
                    adjacent += c;
                }
            }
        }
    }
    let share = if errors == 0 { 1.0 } else { adjacent as f64 / errors as f64 };
    let decreasing = metrics.train_loss[4] < metrics.train_loss[0];
    let total = gen_secs + train_secs;
    r.line(
        "criterion 9 desk-scale classification",
        ev.accuracy >= 0.90 && share >= 0.95 && decreasing && total <= 1200.0,
        true,
        format!(
            "val accuracy {:.3} after 30 epochs; {errors} errors, adjacent-z share {share:.2}; train loss {:.3} -> {:.3} (epoch 5 {:.3}); {total:.0} s",
            ev.accuracy,
            metrics.train_loss[0],
            metrics.train_loss[29],
            metrics.train_loss[4]
        ),
    );

    let small = DatasetConfig {
        counts: SplitCounts { train: 2, val: 1, test: 1 },
        ..DatasetConfig::desk(10)
    };
    let a = generate_dataset(&small, &work.join("det_a"), false).unwrap();
    let b = generate_dataset(&small, &work.join("det_b"), false).unwrap();
    let same_files = a.splits.get(Split::Train).iter().all(|e| {
        std::fs::read(work.join("det_a").join(&e.path)).unwrap() == std::fs::read(work.join("det_b").join(&e.path)).unwrap()
    });
    let hash_a = a.hash().unwrap();
    let hash_b = b.hash().unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let short = TrainConfig {
        epochs: 2,
        seed: 3,
        ..TrainConfig::default()
    };
    let history = || {
        pool.install(|| {
            let m = Model::<f32>::init(Architecture::standard(9).unwrap(), 0.5, 3).unwrap();
            train_examples(m, &train_set, &val_set, &short).unwrap().1
        })
    };
    let (h1, h2) = (history(), history());
    r.line(
        "criterion 10 determinism",
        hash_a == hash_b && same_files && h1 == h2,
        true,
        format!(
            "manifest sha256 {}.. equal {}, images equal {same_files}; single-thread loss histories equal {} ({:?})",
            &hash_a[..12],
            hash_a == hash_b,
            h1 == h2,
            h1.train_loss
        ),
    );
}

fn main() {
    // `cargo test -- <filter>` passes arguments through; run only when unfiltered
    // or when asked for by name.
    let args: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    if !args.is_empty() && !args.iter().any(|a| "acceptance".contains(a.as_str())) {
        return;
    }
    if std::env::args().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }
    let start = Instant::now();
    let mut report = Report { gating_failures: Vec::new() };
    let work = tempfile::tempdir().unwrap();
    criterion_1(&mut report);
    criterion_2(&mut report);
    criterion_3(&mut report);
    criterion_4(&mut report);
    criterion_5(&mut report);
    criterion_6(&mut report);
    criterion_7(&mut report);
    criterion_8(&mut report);
    criterion_9_and_10(&mut report, work.path());
    println!("acceptance finished in {:.0} s", start.elapsed().as_secs_f64());
    if !report.gating_failures.is_empty() {
        eprintln!("gating failures: {}", report.gating_failures.join("; "));
        std::process::exit(1);
    }
}
