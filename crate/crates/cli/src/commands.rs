use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use gcmvs::io::{self, PairEntry, PairList};
use gcmvs::{
    ConsistencyThresholds, DepthAggregate, DepthThresholds, FilterParams, FusionMode, FusionParams, FusionView, GcParams, Grid, PenaltyRange, SampleMode,
    Stage, SurfaceKind, SyntheticScene,
};
use rayon::prelude::*;

use crate::config::{echo, required, CheckSettings, EvalSettings, FilterSettings, FuseSettings, Layer, SynthSettings};
use crate::scene::{cam_path, depth_path, DepthKind, Real, SceneDir};
use crate::{CheckArgs, CliError, EvalCloudArgs, EvalDepthArgs, FilterArgs, FuseArgs, SynthArgs};

fn parse<T: FromStr<Err = String>>(value: Option<String>, name: &str) -> Result<T, CliError> {
    required(value, name)?
        .parse()
        .map_err(|e: String| CliError::Input(format!("--{}: {e}", name.replace('_', "-"))))
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    io::write_atomic(path, bytes).map_err(CliError::from)
}

fn selected_views(scene: &SceneDir, views: Option<Vec<usize>>) -> Vec<usize> {
    views.unwrap_or_else(|| scene.pairs.view_ids())
}

pub fn check(a: CheckArgs, file: CheckSettings) -> Result<(), CliError> {
    let flags = CheckSettings {
        m: a.m,
        d_pixel: a.d_pixel,
        d_depth: a.d_depth,
        range: a.range,
        stage: a.stage,
        sample: a.sample,
    };
    let mut eff = flags.over(file).over(CheckSettings::defaults());
    let m = required(eff.m, "m")?;
    let range: PenaltyRange = parse(eff.range.clone(), "range")?;
    let sample: SampleMode = parse(eff.sample.clone(), "sample")?;
    let stage_name = required(eff.stage.clone(), "stage")?;
    let stages: Vec<Stage> = if stage_name == "all" {
        Stage::ALL.to_vec()
    } else {
        vec![parse(Some(stage_name), "stage")?]
    };
    let per_stage = stages
        .iter()
        .map(|&stage| {
            let defaults = stage.default_thresholds::<Real>();
            let t = ConsistencyThresholds {
                d_pixel: eff.d_pixel.unwrap_or(defaults.d_pixel),
                d_depth: eff.d_depth.unwrap_or(defaults.d_depth),
            };
            t.validate()?;
            Ok((stage, t))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    if let [(_, t)] = per_stage.as_slice() {
        eff.d_pixel = Some(t.d_pixel);
        eff.d_depth = Some(t.d_depth);
    }
    if m == 0 {
        return Err(CliError::Constraint("--m must be at least 1".into()));
    }

    let scene = SceneDir::open(&a.scene)?;
    let views = selected_views(&scene, a.views);
    let suffix = stages.len() > 1;

    let rows = views
        .par_iter()
        .map(|&id| {
            let bundle = scene.bundle(id, DepthKind::Estimated, m)?;
            let mut rows = Vec::new();
            for &(stage, t) in &per_stage {
                let scaled = bundle.downscaled(stage.downscale())?;
                let params = GcParams::new(m, t).with_range(range).with_sample_mode(sample);
                let pm = gcmvs::penalty_map(&scaled, &params, &scaled.ref_mask)?;
                let name = if suffix {
                    format!("{id:08}_{}.pfm", stage.name())
                } else {
                    format!("{id:08}.pfm")
                };
                write(&a.out.join("penalty").join(&name), &io::write_grid_pfm(&pm.values))?;
                let sums = pm.mask_sum.map(|&c| c as Real);
                write(&a.out.join("mask_sum").join(&name), &io::write_grid_pfm(&sums))?;
                let inside = pm.in_mask_count();
                let flagged = pm.values.as_slice().iter().filter(|&&v| v > 1.0).count();
                rows.push(format!(
                    "{id}\t{}\t{inside}\t{:.6}\t{:.6}",
                    stage.name(),
                    pm.mean_in_mask().unwrap_or(0.0),
                    if inside == 0 { 0.0 } else { flagged as f64 / inside as f64 }
                ));
            }
            Ok(rows)
        })
        .collect::<Result<Vec<_>, CliError>>()?;

    let mut table = String::from("view\tstage\tin_mask\tmean_penalty\tflagged_frac\n");
    for row in rows.into_iter().flatten() {
        let _ = writeln!(table, "{row}");
    }
    print!("{table}");
    write(&a.out.join("check_summary.tsv"), table.as_bytes())?;
    echo(&a.out, "check", &eff)
}

pub fn filter(a: FilterArgs, file: FilterSettings) -> Result<(), CliError> {
    let flags = FilterSettings {
        m: a.m,
        d_pixel: a.d_pixel,
        d_depth: a.d_depth,
        min_inconsistent_frac: a.min_inconsistent_frac,
        sample: a.sample,
    };
    let eff = flags.over(file).over(FilterSettings::defaults());
    let params = FilterParams {
        m: required(eff.m, "m")?,
        thresholds: ConsistencyThresholds {
            d_pixel: required(eff.d_pixel, "d_pixel")?,
            d_depth: required(eff.d_depth, "d_depth")?,
        },
        min_frac: required(eff.min_inconsistent_frac, "min_inconsistent_frac")?,
        sample_mode: parse(eff.sample.clone(), "sample")?,
    };
    params.validate()?;
    if params.m == 0 {
        return Err(CliError::Constraint("--m must be at least 1".into()));
    }

    let scene = SceneDir::open(&a.scene)?;
    let views = selected_views(&scene, a.views);
    // every view reads the original neighbours, so order does not matter
    let rows = views
        .par_iter()
        .map(|&id| {
            let bundle = scene.bundle(id, DepthKind::GroundTruth, params.m)?;
            let (filtered, report) = gcmvs::filter_depth(&bundle, &params)?;
            let path = a.out.join("gt_depths_filtered").join(format!("{id:08}.pfm"));
            write(&path, &io::write_depth_pfm(&filtered))?;
            Ok(format!(
                "{id}\t{}\t{}\t{:.6}",
                report.valid_before, report.removed_count, report.removed_fraction
            ))
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut table = String::from("view\tvalid\tremoved\tremoved_frac\n");
    for row in rows {
        let _ = writeln!(table, "{row}");
    }
    print!("{table}");
    write(&a.out.join("filter_report.tsv"), table.as_bytes())?;
    echo(&a.out, "filter", &eff)
}

pub fn fuse(a: FuseArgs, file: FuseSettings) -> Result<(), CliError> {
    let flags = FuseSettings {
        mode: a.mode,
        conf: a.conf,
        consistency_min: a.consistency_min,
        reproj_px: a.reproj_px,
        rel_depth: a.rel_depth,
        dyn_px_slope: a.dyn_px_slope,
        dyn_rel_slope: a.dyn_rel_slope,
        num_src: a.num_src,
        aggregate: a.aggregate,
        sample: a.sample,
    };
    let eff = flags.over(file).over(FuseSettings::defaults());
    let aggregate = match required(eff.aggregate.clone(), "aggregate")?.as_str() {
        "mean" => DepthAggregate::Mean,
        "median" => DepthAggregate::Median,
        other => return Err(CliError::Input(format!("--aggregate: unknown `{other}` (mean|median)"))),
    };
    let params = FusionParams {
        mode: parse::<FusionMode>(eff.mode.clone(), "mode")?,
        reproj_px_thresh: required(eff.reproj_px, "reproj_px")?,
        rel_depth_thresh: required(eff.rel_depth, "rel_depth")?,
        conf_thresh: required(eff.conf, "conf")?,
        consistency_min: required(eff.consistency_min, "consistency_min")?,
        dynamic_px_slope: required(eff.dyn_px_slope, "dyn_px_slope")?,
        dynamic_rel_slope: required(eff.dyn_rel_slope, "dyn_rel_slope")?,
        aggregate,
        sample_mode: parse(eff.sample.clone(), "sample")?,
        consume: true,
    };
    params.validate()?;

    let scene = SceneDir::open(&a.scene)?;
    let ids = scene.pairs.view_ids();
    let index_of = |id: usize| {
        ids.iter()
            .position(|&v| v == id)
            .ok_or_else(|| CliError::Input(format!("pair.txt references unknown view {id}")))
    };
    let views = ids
        .par_iter()
        .map(|&id| {
            let depth = scene.depth(DepthKind::Estimated, id)?;
            let confidence = match scene.confidence(id)? {
                Some(c) => c,
                None => Grid::filled(depth.width(), depth.height(), 1.0)?,
            };
            Ok(FusionView {
                camera: scene.camera(id)?,
                depth,
                confidence,
                color: None,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let pairs = ids
        .iter()
        .map(|&id| {
            let mut sources = scene.sources_of(id)?;
            if let Some(n) = eff.num_src {
                sources.truncate(n);
            }
            sources.into_iter().map(index_of).collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let cloud = gcmvs::fuse(&views, &pairs, &params)?;
    write(&a.out, &io::write_ply(&cloud))?;
    println!("fused {} points from {} views -> {}", cloud.len(), views.len(), a.out.display());
    let dir = a.out.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    echo(dir, "fuse", &eff)
}

pub fn eval_cloud(a: EvalCloudArgs, file: EvalSettings) -> Result<(), CliError> {
    let flags = EvalSettings {
        max_dist: a.max_dist,
        ..Default::default()
    };
    let eff = flags.over(file).over(EvalSettings::defaults());
    let max_dist = eff
        .max_dist
        .ok_or_else(|| CliError::Input("--max-dist is required for point-cloud evaluation".into()))?;
    let read = |p: &Path| -> Result<gcmvs::PointCloud<Real>, CliError> {
        io::read_ply(&io::read_file(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    };
    let score = gcmvs::cloud_score(&read(&a.pred)?, &read(&a.gt)?, max_dist)?;
    println!("accuracy\t{}", score.accuracy);
    println!("completeness\t{}", score.completeness);
    println!("overall\t{}", score.overall);
    if let Some(dir) = &a.out {
        echo(dir, "eval", &eff)?;
    }
    Ok(())
}

pub fn eval_depth(a: EvalDepthArgs, file: EvalSettings) -> Result<(), CliError> {
    let flags = EvalSettings {
        e1_thresh: a.e1_thresh,
        e3_thresh: a.e3_thresh,
        ..Default::default()
    };
    let eff = flags.over(file).over(EvalSettings::defaults());
    let thresholds = DepthThresholds {
        e1: required(eff.e1_thresh, "e1_thresh")?,
        e3: required(eff.e3_thresh, "e3_thresh")?,
    };
    if !(thresholds.e1 > 0.0 && thresholds.e3 > 0.0) {
        return Err(CliError::Constraint("error thresholds must be positive".into()));
    }
    let read = |p: &Path| -> Result<gcmvs::DepthMap<Real>, CliError> {
        io::read_depth_pfm(&io::read_file(p)?).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
    };
    let score = gcmvs::depth_score(&read(&a.pred)?, &read(&a.gt)?, &thresholds)?;
    println!("epe\t{}", score.epe);
    println!("e1\t{}", score.e1);
    println!("e3\t{}", score.e3);
    if let Some(dir) = &a.out {
        echo(dir, "eval", &eff)?;
    }
    Ok(())
}

fn parse_resolution(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Input(format!("--resolution: expected WIDTHxHEIGHT, got `{s}`"));
    let (w, h) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let w: usize = w.trim().parse().map_err(|_| bad())?;
    let h: usize = h.trim().parse().map_err(|_| bad())?;
    if w < 2 || h < 2 {
        return Err(CliError::Constraint(format!("resolution {w}x{h} is too small")));
    }
    Ok((w, h))
}

pub fn synth(a: SynthArgs, file: SynthSettings) -> Result<(), CliError> {
    let flags = SynthSettings {
        surface: a.surface,
        views: a.views,
        resolution: a.resolution,
        seed: a.seed,
    };
    let eff = flags.over(file).over(SynthSettings::defaults());
    let kind: SurfaceKind = parse(eff.surface.clone(), "surface")?;
    let views = required(eff.views, "views")?;
    if views < 2 {
        return Err(CliError::Constraint(format!("--views must be at least 2, got {views}")));
    }
    let resolution = parse_resolution(&required(eff.resolution.clone(), "resolution")?)?;
    let seed = required(eff.seed, "seed")?;

    let scene = SyntheticScene::<Real>::random(kind, views, resolution, seed)?;
    let root = &a.out;
    for (id, cam) in scene.cameras.iter().enumerate() {
        let depth = scene.render_depth(id)?;
        write(&cam_path(root, id), io::write_cam(cam).as_bytes())?;
        let bytes = io::write_depth_pfm(&depth);
        write(&depth_path(root, DepthKind::GroundTruth, id), &bytes)?;
        write(&depth_path(root, DepthKind::Estimated, id), &bytes)?;
    }
    let entries = (0..views)
        .map(|r| {
            let center = scene.cameras[r].center();
            let mut others: Vec<(usize, f64)> = (0..views)
                .filter(|&s| s != r)
                .map(|s| (s, (scene.cameras[s].center() - center).norm()))
                .collect();
            others.sort_by(|x, y| x.1.total_cmp(&y.1).then(x.0.cmp(&y.0)));
            PairEntry {
                ref_id: r,
                sources: others.into_iter().map(|(s, d)| (s, (1000.0 / (1.0 + d)).round())).collect(),
            }
        })
        .collect();
    write(&root.join("pair.txt"), io::write_pair(&PairList { entries }).as_bytes())?;
    println!("wrote {views}-view {kind:?} scene ({}x{}) to {}", resolution.0, resolution.1, root.display());
    echo(root, "synth", &eff)
}
