use std::collections::HashSet;

use oam_core::{ring_peak_radius, GridSpec, Image8, IntensityMap};
use oam_dataset::*;
use proptest::prelude::*;

/// Small, fast simulation settings for pipeline tests.
fn quick_sim() -> SimConfig {
    SimConfig {
        grid_n: 256,
        grid_extent: 0.013,
        image_size: 48,
        ..SimConfig::default()
    }
}

fn quick_config(seed: u64) -> DatasetConfig {
    DatasetConfig {
        sim: quick_sim(),
        counts: SplitCounts { train: 2, val: 1, test: 1 },
        ..DatasetConfig::desk(seed)
    }
}

fn as_map(img: &Image8, extent: f64) -> IntensityMap {
    let g = GridSpec::new(img.width(), extent).unwrap();
    IntensityMap::new(g, img.pixels().iter().map(|&p| p as f64).collect()).unwrap()
}

fn label(space: &LabelSpace, ell: u32, z: f64) -> Label {
    space.label(space.class_index(ell, z).unwrap()).unwrap()
}

#[test]
fn clean_sample_is_reproducible() {
    let space = LabelSpace::full();
    let cfg = SimConfig::clean();
    let a = synth_sample(label(&space, 1, 0.40), &cfg, 99).unwrap();
    let b = synth_sample(label(&space, 1, 0.40), &cfg, 12345).unwrap();
    // without augmentation the seed has no effect
    assert_eq!(a.image, b.image);
    assert_eq!(a.augmentation.offset_x, 0.0);
    assert_eq!((a.image.width(), a.image.height()), (360, 360));
}

#[test]
fn ring_grows_with_charge() {
    let space = LabelSpace::full();
    let cfg = SimConfig::clean();
    let r3 = ring_peak_radius(&as_map(&synth_sample(label(&space, 3, 0.70), &cfg, 1).unwrap().image, 6e-3));
    let r5 = ring_peak_radius(&as_map(&synth_sample(label(&space, 5, 0.70), &cfg, 1).unwrap().image, 6e-3));
    assert!(r5 > r3, "{r5} <= {r3}");
}

#[test]
fn turbulence_changes_pixels_not_label() {
    let space = LabelSpace::full();
    let l = label(&space, 2, 1.0);
    let clean = synth_sample(l, &SimConfig::clean(), 5).unwrap();
    let turb_cfg = SimConfig {
        turbulence: Some(TurbulenceConfig::default()),
        ..SimConfig::clean()
    };
    let turb = synth_sample(l, &turb_cfg, 5).unwrap();
    let l1: u64 = clean
        .image
        .pixels()
        .iter()
        .zip(turb.image.pixels())
        .map(|(&a, &b)| (a as i64 - b as i64).unsigned_abs())
        .sum();
    assert!(l1 > 0);
    assert_eq!(turb.class_index, clean.class_index);
    assert!(turb.augmentation.turbulence);
    assert_eq!(turb.augmentation.cn2, Some(5e-8));
}

#[test]
fn offsets_stay_in_bounds() {
    let cfg = SimConfig::default();
    for seed in 0..200 {
        let a = synth::draw_augmentation(&cfg, seed);
        assert!(a.offset_x.abs() <= 0.2e-3 && a.offset_y.abs() <= 0.2e-3);
    }
}

#[test]
fn invalid_configs_are_rejected() {
    let mut c = quick_config(1);
    c.counts.val = 0;
    assert!(c.validate().unwrap_err().is_validation());
    let mut c = quick_config(1);
    c.sim.crop_extent = 0.1;
    assert!(c.validate().is_err());
    let mut c = quick_config(1);
    c.sim.turbulence = Some(TurbulenceConfig {
        kappam: f64::INFINITY,
        ..TurbulenceConfig::default()
    });
    assert!(c.validate().is_err());
}

#[test]
fn split_sizes_follow_counts() {
    let full = DatasetConfig::full(0);
    let n = full.labels.len();
    assert_eq!((n * full.counts.train, n * full.counts.val, n * full.counts.test), (5590, 650, 650));
    let desk = DatasetConfig::desk(0);
    let n = desk.labels.len();
    assert_eq!((n * desk.counts.train, n * desk.counts.val, n * desk.counts.test), (360, 90, 90));
}

#[test]
fn full_scale_seeds_never_collide() {
    let cfg = DatasetConfig::full(2024);
    let mut seen = HashSet::new();
    for c in 0..cfg.labels.len() {
        for split in Split::ALL {
            for o in 0..cfg.counts.get(split) {
                assert!(seen.insert(cfg.sample_seed(c, split, o)));
            }
        }
    }
    assert_eq!(seen.len(), 65 * 106);
}

#[test]
fn generated_dataset_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ds");
    let cfg = quick_config(77);
    let m = generate_dataset(&cfg, &root, false).unwrap();
    assert_eq!(m.splits.train.len(), 18);
    assert_eq!(m.splits.val.len(), 9);
    assert_eq!(m.splits.test.len(), 9);
    assert!(root.join("train/0/0.pgm").is_file());
    assert!(root.join("test/8/0.pgm").is_file());

    let loaded = load_manifest(&root).unwrap();
    assert_eq!(loaded, m);
    verify_files(&root, &loaded).unwrap();
    for (img, class) in load_split(&root, &loaded, Split::Train).unwrap() {
        assert!(class < 9);
        assert_eq!(*img.pixels().iter().max().unwrap(), 255);
        assert_eq!(*img.pixels().iter().min().unwrap(), 0);
    }

    // existing output without overwrite is refused
    assert!(generate_dataset(&cfg, &root, false).unwrap_err().is_validation());

    // regeneration reproduces the manifest byte for byte
    let again = generate_dataset(&cfg, &root, true).unwrap();
    assert_eq!(again.hash().unwrap(), m.hash().unwrap());
    let text = std::fs::read_to_string(root.join("manifest.json")).unwrap();
    assert_eq!(text, m.to_json().unwrap());

    let other = generate_dataset(&quick_config(78), &dir.path().join("other"), false).unwrap();
    assert_ne!(other.hash().unwrap(), m.hash().unwrap());
}

#[test]
fn tampered_manifest_fails_checks() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("ds");
    let cfg = DatasetConfig {
        labels: LabelSpace::new(vec![1, 2], vec![0.5]).unwrap(),
        ..quick_config(3)
    };
    let m = generate_dataset(&cfg, &root, false).unwrap();
    let mut dup = m.clone();
    dup.splits.val[0].path = dup.splits.train[0].path.clone();
    assert!(dup.check().is_err());
    let mut unbalanced = m.clone();
    unbalanced.splits.train.pop();
    assert!(unbalanced.check().is_err());
    let mut rehashed = m.clone();
    rehashed.config.master_seed += 1;
    assert!(rehashed.check().is_err());
    std::fs::remove_file(root.join(&m.splits.test[0].path)).unwrap();
    assert!(verify_files(&root, &m).is_err());
}

proptest! {
    #[test]
    fn class_index_round_trips(ell_count in 1u32..8, z_count in 1usize..15, pick in any::<prop::sample::Index>()) {
        let space = LabelSpace::new(
            (1..=ell_count).collect(),
            (0..z_count).map(|i| 0.3 + 0.05 * i as f64).collect(),
        ).unwrap();
        let c = pick.index(space.len());
        let l = space.label(c).unwrap();
        prop_assert_eq!(space.class_index(l.ell, l.z).unwrap(), c);
    }
}
