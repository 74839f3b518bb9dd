mod support;

use gcmvs::{
    ConsistencyThresholds, DepthMap, Error, FilterParams, GcParams, Grid, LossReduction, PenaltyRange, SampleMode, SourceView, Stage, StageWeights,
    SurfaceKind, SyntheticScene, ViewBundle,
};

fn noisy_bundle(seed: u64, res: (usize, usize), views: usize) -> ViewBundle<f64> {
    let scene = SyntheticScene::<f64>::random(if seed.is_multiple_of(2) { SurfaceKind::Plane } else { SurfaceKind::Sphere }, views, res, seed).unwrap();
    let depths: Vec<DepthMap<f64>> = scene
        .render_all()
        .unwrap()
        .iter()
        .enumerate()
        .map(|(i, d)| gcmvs::corrupt_depth(d, 0.15, 0.03, seed * 10 + i as u64).unwrap().0)
        .collect();
    let sources = (1..views)
        .map(|s| SourceView {
            id: s,
            camera: scene.cameras[s].clone(),
            depth: depths[s].clone(),
        })
        .collect();
    ViewBundle::new(0, scene.cameras[0].clone(), depths[0].clone(), sources).unwrap()
}

fn oracle_mask_sum(b: &ViewBundle<f64>, m: usize, t: &ConsistencyThresholds<f64>, nearest: bool) -> Grid<u32> {
    let (w, h) = b.ref_depth.dims();
    let mut sums = Grid::filled(w, h, 0u32).unwrap();
    for src in &b.sources[..m] {
        let r = support::fbr_bruteforce(&b.ref_depth, &b.ref_cam, &src.depth, &src.camera, nearest);
        for (i, entry) in r.iter().enumerate() {
            let (x, y) = (i % w, i / w);
            if let Some(e) = entry {
                let (pde, rdd) = support::errors(x, y, b.ref_depth.value(x, y), *e);
                if pde > t.d_pixel || rdd > t.d_depth {
                    *sums.get_mut(x, y) += 1;
                }
            }
        }
    }
    sums
}

#[test]
fn mask_sum_matches_oracle() {
    for seed in 0..8 {
        let b = noisy_bundle(seed, (40, 30), 5);
        for (mode, nearest) in [(SampleMode::Bilinear, false), (SampleMode::Nearest, true)] {
            for m in 1..=4 {
                let t = ConsistencyThresholds::new(0.5, 0.005).unwrap();
                assert_eq!(
                    gcmvs::mask_sum(&b, m, &t, mode).unwrap(),
                    oracle_mask_sum(&b, m, &t, nearest),
                    "seed {seed} m {m}"
                );
            }
        }
    }
}

#[test]
fn mask_sum_bounded_by_m_and_zero_on_invalid_reference() {
    let b = noisy_bundle(3, (32, 24), 5);
    let t = Stage::Refine.default_thresholds();
    let sums = gcmvs::mask_sum(&b, 4, &t, SampleMode::Bilinear).unwrap();
    for y in 0..24 {
        for x in 0..32 {
            assert!(*sums.get(x, y) <= 4);
            if !b.ref_depth.is_valid(x, y) {
                assert_eq!(*sums.get(x, y), 0);
            }
        }
    }
}

#[test]
fn requesting_more_sources_than_available_is_a_config_error() {
    let b = noisy_bundle(0, (16, 12), 3);
    let params = GcParams::new(3, Stage::Refine.default_thresholds());
    assert!(matches!(gcmvs::penalty_map(&b, &params, &b.ref_mask), Err(Error::Config(_))));
    assert!(matches!(
        gcmvs::mask_sum(&b, 0, &Stage::Refine.default_thresholds(), SampleMode::Bilinear),
        Err(Error::Config(_))
    ));
}

#[test]
fn penalty_is_zero_outside_and_in_range_inside() {
    let b = noisy_bundle(5, (40, 30), 5);
    for range in [PenaltyRange::OneTwo, PenaltyRange::OneThree] {
        let pm = gcmvs::penalty_map(
            &b,
            &GcParams::new(4, ConsistencyThresholds::new(0.25, 0.0025).unwrap()).with_range(range),
            &b.ref_mask,
        )
        .unwrap();
        for (v, &inside) in pm.values.as_slice().iter().zip(b.ref_mask.as_slice()) {
            if inside {
                assert!(*v >= 1.0 && *v <= range.upper::<f64>());
            } else {
                assert_eq!(*v, 0.0);
            }
        }
    }
}

#[test]
fn stage_maps_follow_downscaled_grids() {
    let b = noisy_bundle(2, (64, 48), 4);
    let maps = gcmvs::stage_penalty_maps(&b, 3, Stage::ALL.map(|s| s.default_thresholds()), PenaltyRange::OneTwo, SampleMode::Bilinear).unwrap();
    assert_eq!(maps[0].values.dims(), (16, 12));
    assert_eq!(maps[1].values.dims(), (32, 24));
    assert_eq!(maps[2].values.dims(), (64, 48));
    // each stage equals a direct run on the decimated bundle
    for (stage, map) in Stage::ALL.iter().zip(&maps) {
        let scaled = b.downscaled(stage.downscale()).unwrap();
        let direct = gcmvs::penalty_map(&scaled, &GcParams::new(3, stage.default_thresholds()), &scaled.ref_mask).unwrap();
        assert_eq!(direct.values, map.values);
    }
}

#[test]
fn stage_loss_and_total() {
    let b = noisy_bundle(4, (32, 24), 4);
    let pm = gcmvs::penalty_map(&b, &GcParams::new(3, Stage::Refine.default_thresholds()), &b.ref_mask).unwrap();
    let err = Grid::from_fn(32, 24, |x, y| (x + 2 * y) as f64 * 0.1).unwrap();
    let loss = gcmvs::weighted_stage_loss(&pm, &err, LossReduction::Masked).unwrap();
    let (mut num, mut n) = (0.0, 0usize);
    for i in 0..32 * 24 {
        if b.ref_mask.as_slice()[i] {
            num += pm.values.as_slice()[i] * err.as_slice()[i];
            n += 1;
        }
    }
    assert!((loss - num / n as f64).abs() < 1e-12);
    let all = gcmvs::weighted_stage_loss(&pm, &err, LossReduction::AllPixels).unwrap();
    assert!((all - num / (32.0 * 24.0)).abs() < 1e-12);
    assert_eq!(gcmvs::total_loss([1.0, 2.0, 3.0], &StageWeights::default()), 1.0 + 2.0 + 6.0);
}

fn clean_plane_bundle(corrupt_ref: Option<(f64, f64)>) -> (ViewBundle<f64>, Option<gcmvs::Mask>) {
    let b = 0.1;
    let centers = [
        nalgebra::Vector3::zeros(),
        nalgebra::Vector3::new(b, 0.0, 0.0),
        nalgebra::Vector3::new(-b, 0.0, 0.0),
        nalgebra::Vector3::new(0.0, b, 0.0),
        nalgebra::Vector3::new(0.0, -b, 0.0),
    ];
    let scene = SyntheticScene::fronto_parallel((80, 60), 80.0, 8.0, &centers).unwrap();
    let d = scene.render_all().unwrap();
    let (ref_depth, touched) = match corrupt_ref {
        Some((frac, mag)) => {
            let (c, m) = gcmvs::corrupt_depth(&d[0], frac, mag, 9).unwrap();
            (c, Some(m))
        }
        None => (d[0].clone(), None),
    };
    let sources = (1..5)
        .map(|s| SourceView {
            id: s,
            camera: scene.cameras[s].clone(),
            depth: d[s].clone(),
        })
        .collect();
    (ViewBundle::new(0, scene.cameras[0].clone(), ref_depth, sources).unwrap(), touched)
}

fn filter_params(min_frac: f64) -> FilterParams<f64> {
    FilterParams {
        m: 4,
        thresholds: ConsistencyThresholds::new(2.0, 0.025).unwrap(),
        min_frac,
        sample_mode: SampleMode::Bilinear,
    }
}

#[test]
fn consistent_gt_passes_through() {
    let (b, _) = clean_plane_bundle(None);
    let (out, report) = gcmvs::filter_depth(&b, &filter_params(0.5)).unwrap();
    assert_eq!(out, b.ref_depth);
    assert_eq!(report.removed_count, 0);
}

#[test]
fn corrupted_pixels_removed_exactly_per_oracle() {
    let (b, touched) = clean_plane_bundle(Some((0.05, 0.25)));
    let touched = touched.unwrap();
    let p = filter_params(0.5);
    let (out, report) = gcmvs::filter_depth(&b, &p).unwrap();
    let sums = oracle_mask_sum(&b, 4, &p.thresholds, false);
    for y in 0..60 {
        for x in 0..80 {
            let oracle_removed = *sums.get(x, y) as f64 / 4.0 >= 0.5;
            assert_eq!(!out.is_valid(x, y), oracle_removed, "({x},{y})");
        }
    }
    assert_eq!(report.removed_count, touched.count());
    assert!(touched.as_slice().iter().zip(out.values()).all(|(&t, &v)| !t || v == 0.0));
}

#[test]
fn filtering_is_idempotent_and_monotone_in_min_frac() {
    let (mut b, _) = clean_plane_bundle(Some((0.2, 0.1)));
    let mut previous: Option<usize> = None;
    for frac in [0.25, 0.5, 0.75, 1.0] {
        let (_, report) = gcmvs::filter_depth(&b, &filter_params(frac)).unwrap();
        if let Some(prev) = previous {
            assert!(report.removed_count <= prev);
        }
        previous = Some(report.removed_count);
    }
    let (once, _) = gcmvs::filter_depth(&b, &filter_params(0.5)).unwrap();
    b.ref_depth = once.clone();
    let (twice, report) = gcmvs::filter_depth(&b, &filter_params(0.5)).unwrap();
    assert_eq!(twice, once);
    assert_eq!(report.removed_count, 0);
}

#[test]
fn filter_rejects_bad_parameters() {
    let (b, _) = clean_plane_bundle(None);
    for frac in [0.0, -0.1, 1.5, f64::NAN] {
        assert!(matches!(gcmvs::filter_depth(&b, &filter_params(frac)), Err(Error::Config(_))));
    }
    let p = FilterParams { m: 5, ..filter_params(0.5) };
    assert!(matches!(gcmvs::filter_depth(&b, &p), Err(Error::Config(_))));
}
