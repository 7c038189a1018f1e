use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use serde::Serialize;

use oam_classifier::{
    evaluate_split, train_with_state, Architecture, Metrics, Model, TrainConfig,
};
use oam_core::beam::{hygg_field, source_vortex, BeamParams};
use oam_core::io::{read_field, write_field, write_screen};
use oam_core::propagate::{propagate, propagate_spectral, Method, PropagationConfig};
use oam_core::turbulence::{generate_screen, lags_for, screen_seed, screen_structure, TurbulenceParams};
use oam_core::{count_side_lobes, cross_section, render_image, ComplexField, GridSpec};
use oam_core::profile::{DETECTABLE_HALF_WIDTH, LOBE_THRESHOLD};
use oam_dataset::{generate_dataset, load_manifest, DatasetConfig, LabelSpace, SimConfig, Split, SplitCounts, TurbulenceConfig};

use crate::cli::*;
use crate::error::CliError;
use crate::units::{parse_counts, parse_ells, parse_zs};

/// Shared output options.
pub struct Output {
    pub stamp: bool,
}

impl Output {
    fn stamp_line(&self) -> Option<String> {
        self.stamp.then(|| {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            format!("# generated_unix={secs}\n")
        })
    }

    fn write_csv(&self, path: &Path, header: &str, rows: &[String]) -> Result<()> {
        let mut w = BufWriter::new(create(path)?);
        if let Some(s) = self.stamp_line() {
            w.write_all(s.as_bytes())?;
        }
        writeln!(w, "{header}")?;
        for r in rows {
            writeln!(w, "{r}")?;
        }
        w.flush()?;
        Ok(())
    }

    fn write_json<T: Serialize>(&self, path: &Path, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if self.stamp {
            let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
            if let Some(obj) = v.as_object_mut() {
                obj.insert("generated_unix".into(), secs.into());
            }
        }
        let mut text = serde_json::to_string_pretty(&v)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }
}

fn create(path: &Path) -> Result<File> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn with_suffix(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn grid_of(g: &GridArgs) -> Result<GridSpec> {
    Ok(GridSpec::new(g.grid, g.extent.metres())?)
}

fn field_for(ell: u32, z: Option<f64>, waist: f64, method: FieldMethod, grid: &GridArgs) -> Result<ComplexField> {
    let params = BeamParams::new(ell, waist, grid.wavelength.metres())?;
    let spec = grid_of(grid)?;
    Ok(match (z, method) {
        (None, _) => source_vortex(&params, &spec),
        (Some(z), FieldMethod::Analytic) => hygg_field(&params, &spec, z)?,
        (Some(z), FieldMethod::Spectral) => propagate_spectral(&source_vortex(&params, &spec), z)?,
    })
}

fn save_field_and_image(field: &ComplexField, render: &RenderArgs, prefix: &Path) -> Result<()> {
    let mut w = BufWriter::new(create(&with_suffix(prefix, "oamf"))?);
    write_field(&mut w, field)?;
    w.flush()?;
    let img = render_image(&field.intensity(), render.size, render.crop.metres())?;
    let mut w = BufWriter::new(create(&with_suffix(prefix, "pgm"))?);
    img.write_pgm(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn beam(a: &BeamArgs) -> Result<()> {
    let field = field_for(a.ell, a.z.map(|z| z.metres()), a.waist.metres(), a.method, &a.grid)?;
    save_field_and_image(&field, &a.render, &a.out)?;
    println!("wrote {} (.oamf, .pgm)", a.out.display());
    Ok(())
}

pub fn propagate_cmd(a: &PropagateArgs) -> Result<()> {
    let file = File::open(&a.input).with_context(|| format!("opening {}", a.input.display()))?;
    let field = read_field(BufReader::new(file))?;
    let method = match a.method {
        PropMethod::Spectral => Method::Spectral,
        PropMethod::Quadrature => Method::Quadrature,
    };
    let out = propagate(&field, &PropagationConfig::new(a.z.metres(), method, a.band_limit)?)?;
    save_field_and_image(&out, &a.render, &a.out)?;
    println!("wrote {} (.oamf, .pgm)", a.out.display());
    Ok(())
}

fn kappa_m(inner: f64) -> f64 {
    if inner == 0.0 {
        f64::INFINITY
    } else {
        5.92 / inner
    }
}

fn turbulence_params(cn2: f64, z: f64, outer: f64, inner: f64, subharmonics: u32, seed: u64) -> Result<TurbulenceParams> {
    Ok(TurbulenceParams::new(cn2, z, seed)?
        .with_kappa0(2.0 * std::f64::consts::PI / outer)?
        .with_kappam(kappa_m(inner))?
        .with_subharmonics(subharmonics)?)
}

pub fn screen(a: &ScreenArgs, out: &Output) -> Result<()> {
    if a.count == 0 {
        return Err(CliError::usage("--count must be at least 1").into());
    }
    let grid = grid_of(&a.grid)?;
    let lambda = a.grid.wavelength.metres();
    let params = turbulence_params(
        a.cn2.0,
        a.z.metres(),
        a.outer_scale.metres(),
        a.inner_scale.metres(),
        a.subharmonics,
        a.seed,
    )?;
    let r0 = params.fried_parameter(lambda)?;
    // separations log-spaced from 4 samples to an eighth of the grid
    let seps: Vec<f64> = (0..10)
        .map(|i| 4.0 * grid.pitch() * ((grid.extent() / 8.0) / (4.0 * grid.pitch())).powf(i as f64 / 9.0))
        .collect();
    let lags = lags_for(&grid, &seps)?;
    let mut acc = vec![0.0; lags.len()];
    fs::create_dir_all(&a.out_dir).with_context(|| format!("creating {}", a.out_dir.display()))?;
    for i in 0..a.count {
        let s = generate_screen(&grid, &params.with_seed(screen_seed(a.seed, i as u64)), lambda)?;
        let path = a.out_dir.join(format!("screen_{i:04}.oamf"));
        let mut w = BufWriter::new(create(&path)?);
        write_screen(&mut w, &s, lambda)?;
        w.flush()?;
        if a.structure {
            for (d, v) in acc.iter_mut().zip(screen_structure(&s, &lags)) {
                *d += v;
            }
        }
    }
    println!("wrote {} screens to {} (r0 = {:.6e} m)", a.count, a.out_dir.display(), r0);
    if a.structure {
        let rows: Vec<String> = lags
            .iter()
            .zip(&acc)
            .map(|(&m, &d)| {
                let r = m as f64 * grid.pitch();
                let measured = d / a.count as f64;
                let theory = 6.88 * (r / r0).powf(5.0 / 3.0);
                format!("{r:.9e},{measured:.9e},{theory:.9e},{:.6}", measured / theory)
            })
            .collect();
        out.write_csv(&a.out_dir.join("structure.csv"), "separation_m,measured_rad2,kolmogorov_rad2,ratio", &rows)?;
    }
    Ok(())
}

pub fn dataset(a: &DatasetArgs) -> Result<()> {
    let labels = LabelSpace::new(parse_ells(&a.ells)?, parse_zs(&a.zs)?)?;
    let [train, val, test] = parse_counts(&a.per_class)?;
    let sim = SimConfig {
        grid_n: a.grid.grid,
        grid_extent: a.grid.extent.metres(),
        waist: a.waist.metres(),
        wavelength: a.grid.wavelength.metres(),
        image_size: a.render.size,
        crop_extent: a.render.crop.metres(),
        misalignment: a.misalignment.metres(),
        turbulence: (!a.no_turbulence).then(|| TurbulenceConfig {
            cn2: a.cn2.0,
            kappa0: 2.0 * std::f64::consts::PI / a.outer_scale.metres(),
            kappam: kappa_m(a.inner_scale.metres()),
            ..TurbulenceConfig::default()
        }),
    };
    let config = DatasetConfig {
        labels,
        sim,
        counts: SplitCounts { train, val, test },
        master_seed: a.seed,
    };
    let manifest = generate_dataset(&config, &a.out, a.overwrite)?;
    println!(
        "wrote {}/{}/{} images over {} classes to {}; manifest sha256 {}",
        manifest.splits.get(Split::Train).len(),
        manifest.splits.get(Split::Val).len(),
        manifest.splits.get(Split::Test).len(),
        manifest.labels().len(),
        a.out.display(),
        manifest.hash()?
    );
    Ok(())
}

fn history_rows(m: &Metrics) -> Vec<String> {
    (0..m.train_loss.len())
        .map(|e| {
            let v = |x: &Vec<f64>| x.get(e).map_or(String::new(), |v| format!("{v:.9}"));
            format!(
                "{},{},{},{},{}",
                e + 1,
                v(&m.train_loss),
                v(&m.train_accuracy),
                v(&m.val_loss),
                v(&m.val_accuracy)
            )
        })
        .collect()
}

pub fn train(a: &TrainArgs, out: &Output) -> Result<()> {
    let manifest = load_manifest(&a.data)?;
    let classes = manifest.labels().len();
    let (model, state, previous) = match &a.resume {
        Some(p) => {
            let ck = oam_classifier::load_for_classes(p, classes)?;
            (ck.model, ck.adam, ck.metrics)
        }
        None => (
            Model::<f32>::init(
                Architecture::new(a.input, [16, 32, 64], classes)?,
                a.dropout,
                // kept apart from the per-epoch shuffle and dropout streams
                oam_core::seed::derive_seed(a.seed, &[u64::MAX]),
            )?,
            None,
            Metrics::default(),
        ),
    };
    let config = TrainConfig {
        adam: oam_classifier::AdamConfig {
            lr: a.lr,
            ..Default::default()
        },
        batch_size: a.batch,
        epochs: a.epochs,
        dropout: a.dropout,
        seed: a.seed,
        input_size: a.input,
        checkpoint: Some(a.out.clone()),
    };
    config.validate()?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    oam_dataset::verify_files(&a.data, &manifest)?;
    let train_set = oam_classifier::prepare(&oam_dataset::load_split(&a.data, &manifest, Split::Train)?, a.input)?;
    let val_set = oam_classifier::prepare(&oam_dataset::load_split(&a.data, &manifest, Split::Val)?, a.input)?;
    let (model, state, metrics) = train_with_state(model, state, &train_set, &val_set, &config)?;
    let mut history = previous;
    history.train_loss.extend(&metrics.train_loss);
    history.train_accuracy.extend(&metrics.train_accuracy);
    history.val_loss.extend(&metrics.val_loss);
    history.val_accuracy.extend(&metrics.val_accuracy);
    oam_classifier::save_checkpoint(&a.out, &model, Some(&state), &history)?;
    let hist_path = a.history.clone().unwrap_or_else(|| with_suffix(&a.out, "history.csv"));
    out.write_csv(&hist_path, "epoch,train_loss,train_accuracy,val_loss,val_accuracy", &history_rows(&history))?;
    match history.val_accuracy.last() {
        Some(acc) => println!("trained {} epochs; validation accuracy {acc:.4}; checkpoint {}", a.epochs, a.out.display()),
        None => println!("no epochs run; checkpoint {}", a.out.display()),
    }
    Ok(())
}

#[derive(Serialize)]
struct EvalReport {
    split: String,
    accuracy: f64,
    mean_loss: f64,
    classes: Vec<String>,
    per_class_accuracy: Vec<Option<f64>>,
    confusion_counts: Vec<Vec<u64>>,
    confusion_normalized: Vec<Vec<f64>>,
    /// share of errors that confuse neighbouring distances of one charge
    adjacent_z_error_share: f64,
    history: Metrics,
}

/// Whether two classes share a charge and sit on neighbouring distances.
pub fn adjacent_z(labels: &LabelSpace, a: usize, b: usize) -> bool {
    let nz = labels.zs().len();
    a / nz == b / nz && (a % nz).abs_diff(b % nz) == 1
}

pub fn eval(a: &EvalArgs, out: &Output) -> Result<()> {
    let manifest = load_manifest(&a.data)?;
    let labels = manifest.labels().clone();
    let ck = oam_classifier::load_for_classes(&a.model, labels.len())?;
    let split = match a.split {
        SplitArg::Train => Split::Train,
        SplitArg::Val => Split::Val,
        SplitArg::Test => Split::Test,
    };
    let ev = evaluate_split(&ck.model, &a.data, split)?;
    let classes = (0..labels.len()).map(|i| labels.class_name(i)).collect::<Result<Vec<_>, _>>()?;
    let report = EvalReport {
        split: split.name().to_string(),
        accuracy: ev.accuracy,
        mean_loss: ev.loss,
        classes: classes.clone(),
        per_class_accuracy: ev.per_class_accuracy.clone(),
        confusion_counts: ev.confusion.counts.clone(),
        confusion_normalized: ev.confusion.normalized(),
        adjacent_z_error_share: ev.confusion.error_share(|t, p| adjacent_z(&labels, t, p)),
        history: ck.metrics,
    };
    fs::create_dir_all(&a.out_dir)?;
    out.write_json(&a.out_dir.join("metrics.json"), &report)?;
    let rows: Vec<String> = ev
        .confusion
        .normalized()
        .iter()
        .zip(&classes)
        .map(|(row, name)| {
            let cells: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            format!("{name},{}", cells.join(","))
        })
        .collect();
    out.write_csv(&a.out_dir.join("confusion.csv"), &format!("true\\predicted,{}", classes.join(",")), &rows)?;
    println!(
        "{} accuracy {:.4} over {} samples; adjacent-z error share {:.3}",
        split.name(),
        ev.accuracy,
        ev.confusion.total(),
        report.adjacent_z_error_share
    );
    Ok(())
}

pub fn xsection(a: &XsectionArgs, out: &Output) -> Result<()> {
    let field = field_for(a.ell, Some(a.z.metres()), a.waist.metres(), a.method, &a.grid)?;
    let profile = cross_section(&field.intensity());
    let peak = profile.iter().map(|p| p.1).fold(0.0, f64::max);
    let rows: Vec<String> = profile
        .iter()
        .map(|&(x, v)| format!("{x:.9e},{:.9e}", if peak > 0.0 { v / peak } else { 0.0 }))
        .collect();
    out.write_csv(&a.out, "x_m,intensity", &rows)?;
    let lobes = count_side_lobes(&profile, DETECTABLE_HALF_WIDTH, LOBE_THRESHOLD);
    println!(
        "side lobes within |x| <= {} mm: {} left, {} right",
        DETECTABLE_HALF_WIDTH * 1e3,
        lobes.left,
        lobes.right
    );
    Ok(())
}
