//! Depth-map fusion into a single point cloud.
//!
//! Every reference pixel is checked against its source views with a
//! forward-backward reprojection of the *estimated* source depths. Static
//! mode uses fixed pixel and relative-depth thresholds; dynamic mode accepts
//! a pixel when some `k >= consistency_min` views agree within
//! `k`-scaled thresholds. Survivors are lifted at the aggregated depth and
//! the matching source pixels are consumed so a surface point is emitted once.

use nalgebra::Point3;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::geometry::{sample_depth, Camera, PixelPoint, PixelTransfer, SampleMode};
use crate::grid::{DepthMap, Grid};
use crate::scalar::Scalar;

/// One input view of a fusion run.
#[derive(Debug, Clone)]
pub struct FusionView<T: Scalar> {
    pub camera: Camera<T>,
    pub depth: DepthMap<T>,
    /// Per-pixel confidence in `[0, 1]`.
    pub confidence: Grid<T>,
    pub color: Option<Grid<[u8; 3]>>,
}

impl<T: Scalar> FusionView<T> {
    /// View with an all-ones confidence map.
    pub fn new(camera: Camera<T>, depth: DepthMap<T>) -> Self {
        let confidence = Grid::filled(depth.width(), depth.height(), T::one()).expect("depth dims are positive");
        Self {
            camera,
            depth,
            confidence,
            color: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FusionMode {
    Static,
    #[default]
    Dynamic,
}

impl std::str::FromStr for FusionMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "static" => Ok(Self::Static),
            "dynamic" => Ok(Self::Dynamic),
            other => Err(format!("unknown fusion mode `{other}` (static|dynamic)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DepthAggregate {
    #[default]
    Mean,
    Median,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionParams<T> {
    pub mode: FusionMode,
    /// Static mode: maximum pixel displacement (exclusive).
    pub reproj_px_thresh: T,
    /// Static mode: maximum relative depth difference (exclusive).
    pub rel_depth_thresh: T,
    pub conf_thresh: T,
    pub consistency_min: usize,
    /// Dynamic mode: pixel threshold per agreeing view.
    pub dynamic_px_slope: T,
    /// Dynamic mode: relative depth threshold per agreeing view.
    pub dynamic_rel_slope: T,
    pub aggregate: DepthAggregate,
    pub sample_mode: SampleMode,
    /// Mark matched source pixels so they are not emitted again.
    pub consume: bool,
}

impl<T: Scalar> Default for FusionParams<T> {
    fn default() -> Self {
        Self {
            mode: FusionMode::Dynamic,
            reproj_px_thresh: T::one(),
            rel_depth_thresh: T::lit(0.01),
            conf_thresh: T::lit(0.5),
            consistency_min: 2,
            dynamic_px_slope: T::lit(0.25),
            dynamic_rel_slope: T::one() / T::lit(1300.0),
            aggregate: DepthAggregate::Mean,
            sample_mode: SampleMode::Bilinear,
            consume: true,
        }
    }
}

impl<T: Scalar> FusionParams<T> {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("reproj_px_thresh", self.reproj_px_thresh),
            ("rel_depth_thresh", self.rel_depth_thresh),
            ("dynamic_px_slope", self.dynamic_px_slope),
            ("dynamic_rel_slope", self.dynamic_rel_slope),
        ];
        for (name, v) in positive {
            if !(v > T::zero()) || !v.is_finite_value() {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if self.consistency_min == 0 {
            return Err(Error::Config("consistency_min must be at least 1".into()));
        }
        if !self.conf_thresh.is_finite_value() {
            return Err(Error::Config("conf_thresh must be finite".into()));
        }
        Ok(())
    }
}

/// Reference pixel a fused point was emitted from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelOrigin {
    pub view: usize,
    pub x: usize,
    pub y: usize,
}

#[derive(Debug, Clone, Copy)]
struct SourceMatch<T> {
    view: usize,
    pde: T,
    rdd: T,
    depth: T,
    sx: T,
    sy: T,
}

struct Survivor<T: Scalar> {
    point: Point3<T>,
    x: usize,
    y: usize,
    confidence: T,
    consumed: Vec<(usize, usize, usize)>,
}

/// Fuses `views` into one cloud. `pairs[i]` lists the source views checked
/// for reference view `i`. Views are processed in index order.
pub fn fuse<T: Scalar>(views: &[FusionView<T>], pairs: &[Vec<usize>], params: &FusionParams<T>) -> Result<PointCloud<T>> {
    fuse_with_origins(views, pairs, params).map(|(cloud, _)| cloud)
}

/// [`fuse`] plus the reference pixel behind every emitted point.
pub fn fuse_with_origins<T: Scalar>(views: &[FusionView<T>], pairs: &[Vec<usize>], params: &FusionParams<T>) -> Result<(PointCloud<T>, Vec<PixelOrigin>)> {
    validate_inputs(views, pairs, params)?;
    let with_color = views.iter().all(|v| v.color.is_some());
    let mut consumed: Vec<Vec<bool>> = views.iter().map(|v| vec![false; v.depth.width() * v.depth.height()]).collect();

    let mut points = Vec::new();
    let mut colors = Vec::new();
    let mut confidence = Vec::new();
    let mut origins = Vec::new();

    for (r, view) in views.iter().enumerate() {
        let transfers: Vec<_> = pairs[r]
            .iter()
            .map(|&s| {
                (
                    s,
                    PixelTransfer::new(&view.camera, &views[s].camera),
                    PixelTransfer::new(&views[s].camera, &view.camera),
                )
            })
            .collect();
        let own_consumed = &consumed[r];
        let (w, h) = view.depth.dims();
        let rows: Vec<Vec<Survivor<T>>> = (0..h)
            .into_par_iter()
            .map(|y| {
                (0..w)
                    .filter_map(|x| {
                        if own_consumed[y * w + x] {
                            return None;
                        }
                        fuse_pixel(views, view, &transfers, x, y, params)
                    })
                    .collect()
            })
            .collect();

        let before = points.len();
        for survivor in rows.into_iter().flatten() {
            if params.consume {
                for &(s, sx, sy) in &survivor.consumed {
                    let sw = views[s].depth.width();
                    consumed[s][sy * sw + sx] = true;
                }
            }
            points.push(survivor.point);
            confidence.push(survivor.confidence);
            if with_color {
                let grid = view.color.as_ref().expect("checked above");
                colors.push(*grid.get(survivor.x, survivor.y));
            }
            origins.push(PixelOrigin {
                view: r,
                x: survivor.x,
                y: survivor.y,
            });
        }
        log::debug!("fusion: view {r} emitted {} points", points.len() - before);
    }

    let cloud = PointCloud {
        points,
        colors: with_color.then_some(colors),
        confidence: Some(confidence),
    };
    Ok((cloud, origins))
}

fn validate_inputs<T: Scalar>(views: &[FusionView<T>], pairs: &[Vec<usize>], params: &FusionParams<T>) -> Result<()> {
    params.validate()?;
    if views.is_empty() {
        return Err(Error::Config("fusion needs at least one view".into()));
    }
    if views.len() < 2 {
        return Err(Error::Config(format!("fusion needs at least 2 views, got {}", views.len())));
    }
    if pairs.len() != views.len() {
        return Err(Error::Config(format!("{} source lists for {} views", pairs.len(), views.len())));
    }
    for (r, list) in pairs.iter().enumerate() {
        if let Some(&bad) = list.iter().find(|&&s| s >= views.len() || s == r) {
            return Err(Error::Config(format!("view {r}: invalid source index {bad}")));
        }
    }
    for (i, v) in views.iter().enumerate() {
        v.depth.grid().ensure_same_dims(&v.confidence, &format!("view {i} confidence"))?;
        if let Some(c) = &v.color {
            v.depth.grid().ensure_same_dims(c, &format!("view {i} colour"))?;
        }
        v.camera.check_image_size(&v.depth, &format!("view {i}"))?;
    }
    Ok(())
}

fn fuse_pixel<T: Scalar>(
    views: &[FusionView<T>],
    view: &FusionView<T>,
    transfers: &[(usize, PixelTransfer<T>, PixelTransfer<T>)],
    x: usize,
    y: usize,
    params: &FusionParams<T>,
) -> Option<Survivor<T>> {
    let d = view.depth.depth(x, y)?;
    let conf = *view.confidence.get(x, y);
    if !(conf >= params.conf_thresh) {
        return None;
    }
    let px = T::from_count(x);
    let py = T::from_count(y);
    let matches: Vec<SourceMatch<T>> = transfers
        .iter()
        .filter_map(|(s, forward, backward)| {
            let q = forward.apply(PixelPoint::new(px, py, d)).ok()?;
            let sampled = sample_depth(&views[*s].depth, q.x, q.y, params.sample_mode)?;
            let back = backward.apply(PixelPoint::new(q.x, q.y, sampled)).ok()?;
            let (dx, dy) = (back.x - px, back.y - py);
            Some(SourceMatch {
                view: *s,
                pde: (dx * dx + dy * dy).sqrt(),
                rdd: (back.depth - d).abs() / d,
                depth: back.depth,
                sx: q.x,
                sy: q.y,
            })
        })
        .collect();

    let agreeing = select_consistent(&matches, params)?;
    let mut depths: Vec<T> = Vec::with_capacity(agreeing.len() + 1);
    depths.push(d);
    depths.extend(agreeing.iter().map(|m| m.depth));
    let fused_depth = aggregate(&mut depths, params.aggregate);

    let consumed = agreeing
        .iter()
        .filter_map(|m| {
            let sx = m.sx.round().to_usize()?;
            let sy = m.sy.round().to_usize()?;
            let (sw, sh) = views[m.view].depth.dims();
            (sx < sw && sy < sh).then_some((m.view, sx, sy))
        })
        .collect();
    Some(Survivor {
        point: view.camera.lift(px, py, fused_depth),
        x,
        y,
        confidence: conf,
        consumed,
    })
}

fn select_consistent<T: Scalar>(matches: &[SourceMatch<T>], params: &FusionParams<T>) -> Option<Vec<SourceMatch<T>>> {
    let within = |px: T, rel: T| -> Vec<SourceMatch<T>> { matches.iter().filter(|m| m.pde < px && m.rdd < rel).copied().collect() };
    match params.mode {
        FusionMode::Static => {
            let agreeing = within(params.reproj_px_thresh, params.rel_depth_thresh);
            (agreeing.len() >= params.consistency_min).then_some(agreeing)
        }
        FusionMode::Dynamic => {
            // smallest k first: the tightest thresholds the pixel survives
            (params.consistency_min..=matches.len()).find_map(|k| {
                let kk = T::from_count(k);
                let agreeing = within(kk * params.dynamic_px_slope, kk * params.dynamic_rel_slope);
                (agreeing.len() >= k).then_some(agreeing)
            })
        }
    }
}

fn aggregate<T: Scalar>(depths: &mut [T], how: DepthAggregate) -> T {
    match how {
        DepthAggregate::Mean => depths.iter().fold(T::zero(), |a, &b| a + b) / T::from_count(depths.len()),
        DepthAggregate::Median => {
            depths.sort_by(|a, b| a.partial_cmp(b).expect("finite depths"));
            let n = depths.len();
            if n % 2 == 1 {
                depths[n / 2]
            } else {
                (depths[n / 2 - 1] + depths[n / 2]) / T::lit(2.0)
            }
        }
    }
}
