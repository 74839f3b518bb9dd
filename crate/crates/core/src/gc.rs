//! Multi-view geometric consistency: forward-backward reprojection, pixel
//! displacement / relative depth errors, inconsistency counting and the
//! per-pixel penalty used to weight a depth loss.

use rayon::prelude::*;

use crate::bundle::ViewBundle;
use crate::error::{Error, Result};
use crate::geometry::{sample_depth, Camera, PixelPoint, PixelTransfer, SampleMode};
use crate::grid::{DepthMap, Grid, Mask};
use crate::scalar::Scalar;

/// Result of forward-backward reprojection of a reference depth map through
/// one source view.
#[derive(Debug, Clone)]
pub struct FbrResult<T: Scalar> {
    /// Continuous reference-view location each pixel returned to (NaN when
    /// out of scope).
    pub reprojected_xy: Grid<[T; 2]>,
    /// Reference-frame depth of the returned point; invalid when out of scope.
    pub reprojected_depth: DepthMap<T>,
    /// True where every step stayed in bounds, in front of both cameras and
    /// sampled a valid depth.
    pub in_scope: Mask,
}

/// Projects each valid reference pixel into the source view, samples the
/// source depth there and carries the sampled point back to the reference.
pub fn fbr<T: Scalar>(ref_depth: &DepthMap<T>, ref_cam: &Camera<T>, src_depth: &DepthMap<T>, src_cam: &Camera<T>, mode: SampleMode) -> Result<FbrResult<T>> {
    ref_cam.check_image_size(ref_depth, "reference view")?;
    src_cam.check_image_size(src_depth, "source view")?;
    let forward = PixelTransfer::new(ref_cam, src_cam);
    let backward = PixelTransfer::new(src_cam, ref_cam);
    let (w, h) = ref_depth.dims();

    let returned: Vec<Option<PixelPoint<T>>> = (0..h)
        .into_par_iter()
        .flat_map_iter(|y| {
            (0..w).map(move |x| {
                let d = ref_depth.depth(x, y)?;
                let p = PixelPoint::new(T::from_count(x), T::from_count(y), d);
                let q = forward.apply(p).ok()?;
                let sampled = sample_depth(src_depth, q.x, q.y, mode)?;
                backward.apply(PixelPoint::new(q.x, q.y, sampled)).ok()
            })
        })
        .collect();

    let nan = T::nan();
    let xy = returned.iter().map(|r| r.map_or([nan, nan], |p| [p.x, p.y])).collect();
    let depth = returned.iter().map(|r| r.map_or(T::zero(), |p| p.depth)).collect();
    let scope = returned.iter().map(Option::is_some).collect();
    Ok(FbrResult {
        reprojected_xy: Grid::from_vec(w, h, xy)?,
        reprojected_depth: DepthMap::from_vec(w, h, depth)?,
        in_scope: Grid::from_vec(w, h, scope)?,
    })
}

/// Pixel displacement error and relative depth difference per pixel.
/// Both are NaN where undefined (out of scope or invalid reference depth).
#[derive(Debug, Clone)]
pub struct PixelErrors<T> {
    pub pde: Grid<T>,
    pub rdd: Grid<T>,
}

pub fn pde_rdd<T: Scalar>(ref_depth: &DepthMap<T>, f: &FbrResult<T>) -> Result<PixelErrors<T>> {
    ref_depth.grid().ensure_same_dims(&f.in_scope, "fbr result")?;
    let (w, h) = ref_depth.dims();
    let nan = T::nan();
    let mut pde = Vec::with_capacity(w * h);
    let mut rdd = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            match (ref_depth.depth(x, y), *f.in_scope.get(x, y)) {
                (Some(d0), true) => {
                    let [rx, ry] = *f.reprojected_xy.get(x, y);
                    let dx = rx - T::from_count(x);
                    let dy = ry - T::from_count(y);
                    pde.push((dx * dx + dy * dy).sqrt());
                    rdd.push((f.reprojected_depth.value(x, y) - d0).abs() / d0);
                }
                _ => {
                    pde.push(nan);
                    rdd.push(nan);
                }
            }
        }
    }
    Ok(PixelErrors {
        pde: Grid::from_vec(w, h, pde)?,
        rdd: Grid::from_vec(w, h, rdd)?,
    })
}

/// Pixel-displacement and relative-depth thresholds for one stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConsistencyThresholds<T> {
    pub d_pixel: T,
    pub d_depth: T,
}

impl<T: Scalar> ConsistencyThresholds<T> {
    pub fn new(d_pixel: T, d_depth: T) -> Result<Self> {
        let t = Self { d_pixel, d_depth };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d_pixel > T::zero() && self.d_depth > T::zero()) || !self.d_pixel.is_finite_value() || !self.d_depth.is_finite_value() {
            return Err(Error::Config(format!(
                "thresholds must be positive and finite (d_pixel={}, d_depth={})",
                self.d_pixel, self.d_depth
            )));
        }
        Ok(())
    }
}

/// 1 where the pixel is in scope and `pde > d_pixel` or `rdd > d_depth`;
/// 0 for consistent and out-of-scope pixels alike.
pub fn view_inconsistency_mask<T: Scalar>(errors: &PixelErrors<T>, in_scope: &Mask, t: &ConsistencyThresholds<T>) -> Result<Mask> {
    errors.pde.ensure_same_dims(in_scope, "in_scope mask")?;
    errors.pde.ensure_same_dims(&errors.rdd, "rdd field")?;
    let data = errors
        .pde
        .as_slice()
        .iter()
        .zip(errors.rdd.as_slice())
        .zip(in_scope.as_slice())
        .map(|((&pde, &rdd), &scope)| scope && (pde > t.d_pixel || rdd > t.d_depth))
        .collect();
    Grid::from_vec(errors.pde.width(), errors.pde.height(), data)
}

/// Penalty range: `[1, 2]` divides the count by `M`, `[1, 3]` by `M / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PenaltyRange {
    #[default]
    OneTwo,
    OneThree,
}

impl PenaltyRange {
    pub fn upper<T: Scalar>(self) -> T {
        match self {
            Self::OneTwo => T::lit(2.0),
            Self::OneThree => T::lit(3.0),
        }
    }

    /// In-mask penalty for a pixel flagged in `mask_sum` of `m` views.
    pub fn value<T: Scalar>(self, mask_sum: u32, m: usize) -> T {
        let count = T::from_count(mask_sum as usize);
        let m = T::from_count(m);
        match self {
            Self::OneTwo => T::one() + count / m,
            Self::OneThree => {
                let v = T::one() + count / (m / T::lit(2.0));
                let upper = self.upper::<T>();
                if v > upper {
                    upper
                } else {
                    v
                }
            }
        }
    }
}

impl std::str::FromStr for PenaltyRange {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "1-2" | "[1,2]" | "one-two" => Ok(Self::OneTwo),
            "1-3" | "[1,3]" | "one-three" => Ok(Self::OneThree),
            other => Err(format!("unknown penalty range `{other}` (1-2|1-3)")),
        }
    }
}

impl std::fmt::Display for PenaltyRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::OneTwo => "1-2",
            Self::OneThree => "1-3",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GcParams<T> {
    /// Number of source views checked (the first `m` in bundle order).
    pub m: usize,
    pub thresholds: ConsistencyThresholds<T>,
    pub range: PenaltyRange,
    pub sample_mode: SampleMode,
}

impl<T: Scalar> GcParams<T> {
    pub fn new(m: usize, thresholds: ConsistencyThresholds<T>) -> Self {
        Self {
            m,
            thresholds,
            range: PenaltyRange::OneTwo,
            sample_mode: SampleMode::Bilinear,
        }
    }

    pub fn with_range(mut self, range: PenaltyRange) -> Self {
        self.range = range;
        self
    }

    pub fn with_sample_mode(mut self, mode: SampleMode) -> Self {
        self.sample_mode = mode;
        self
    }
}

/// Inconsistency mask of the reference depth against one source view.
pub fn source_view_mask<T: Scalar>(
    ref_depth: &DepthMap<T>,
    ref_cam: &Camera<T>,
    src_depth: &DepthMap<T>,
    src_cam: &Camera<T>,
    t: &ConsistencyThresholds<T>,
    mode: SampleMode,
) -> Result<Mask> {
    let f = fbr(ref_depth, ref_cam, src_depth, src_cam, mode)?;
    let errors = pde_rdd(ref_depth, &f)?;
    view_inconsistency_mask(&errors, &f.in_scope, t)
}

/// Per-pixel number of the first `m` source views in which the reference
/// depth is inconsistent.
pub fn mask_sum<T: Scalar>(bundle: &ViewBundle<T>, m: usize, t: &ConsistencyThresholds<T>, mode: SampleMode) -> Result<Grid<u32>> {
    bundle.require_sources(m)?;
    t.validate()?;
    let masks = bundle.sources[..m]
        .par_iter()
        .map(|s| source_view_mask(&bundle.ref_depth, &bundle.ref_cam, &s.depth, &s.camera, t, mode))
        .collect::<Result<Vec<_>>>()?;
    let (w, h) = bundle.ref_depth.dims();
    let mut sum = Grid::filled(w, h, 0u32)?;
    for mask in &masks {
        for (acc, &flag) in sum.as_mut_slice().iter_mut().zip(mask.as_slice()) {
            *acc += u32::from(flag);
        }
    }
    Ok(sum)
}

/// Per-pixel loss weight: 0 outside the reference mask, otherwise
/// `1 + mask_sum · (upper − 1) / M`.
#[derive(Debug, Clone)]
pub struct PenaltyMap<T> {
    pub values: Grid<T>,
    pub upper: T,
    pub range: PenaltyRange,
    pub m: usize,
    pub mask_sum: Grid<u32>,
}

impl<T: Scalar> PenaltyMap<T> {
    /// Builds the penalty from precomputed counts.
    pub fn from_mask_sum(mask_sum: Grid<u32>, m: usize, range: PenaltyRange, ref_mask: &Mask) -> Result<Self> {
        if m == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        mask_sum.ensure_same_dims(ref_mask, "reference mask")?;
        let values = mask_sum
            .as_slice()
            .iter()
            .zip(ref_mask.as_slice())
            .map(|(&count, &inside)| if inside { range.value(count, m) } else { T::zero() })
            .collect();
        Ok(Self {
            values: Grid::from_vec(mask_sum.width(), mask_sum.height(), values)?,
            upper: range.upper(),
            range,
            m,
            mask_sum,
        })
    }

    pub fn in_mask_count(&self) -> usize {
        self.values.as_slice().iter().filter(|&&v| v > T::zero()).count()
    }

    /// Mean penalty over in-mask pixels; `None` for an empty mask.
    pub fn mean_in_mask(&self) -> Option<T> {
        let n = self.in_mask_count();
        (n > 0).then(|| {
            let total = self.values.as_slice().iter().fold(T::zero(), |a, &v| a + v);
            total / T::from_count(n)
        })
    }
}

/// Penalty map of the bundle's reference depth over its first `params.m`
/// source views, restricted to `ref_mask`.
pub fn penalty_map<T: Scalar>(bundle: &ViewBundle<T>, params: &GcParams<T>, ref_mask: &Mask) -> Result<PenaltyMap<T>> {
    let sum = mask_sum(bundle, params.m, &params.thresholds, params.sample_mode)?;
    PenaltyMap::from_mask_sum(sum, params.m, params.range, ref_mask)
}

/// How a stage loss averages the weighted error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LossReduction {
    /// Mean over pixels with non-zero penalty.
    #[default]
    Masked,
    /// Mean over every pixel (zeros outside the mask included).
    AllPixels,
}

/// `mean(penalty ⊙ error)` for one stage.
pub fn weighted_stage_loss<T: Scalar>(penalty: &PenaltyMap<T>, error: &Grid<T>, reduction: LossReduction) -> Result<T> {
    penalty.values.ensure_same_dims(error, "error field")?;
    let mut total = T::zero();
    let mut count = 0usize;
    for (&p, &e) in penalty.values.as_slice().iter().zip(error.as_slice()) {
        if p > T::zero() {
            total += p * e;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Empty("penalty map has no in-mask pixels".into()));
    }
    let denom = match reduction {
        LossReduction::Masked => count,
        LossReduction::AllPixels => penalty.values.len(),
    };
    Ok(total / T::from_count(denom))
}

/// Stage weights `(α, β, γ)` for coarse, intermediate and refined stages.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageWeights<T> {
    pub alpha: T,
    pub beta: T,
    pub gamma: T,
}

impl<T: Scalar> Default for StageWeights<T> {
    fn default() -> Self {
        Self {
            alpha: T::one(),
            beta: T::one(),
            gamma: T::lit(2.0),
        }
    }
}

pub fn total_loss<T: Scalar>(stage_losses: [T; 3], weights: &StageWeights<T>) -> T {
    weights.alpha * stage_losses[0] + weights.beta * stage_losses[1] + weights.gamma * stage_losses[2]
}

/// The three cascade stages, coarse to fine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Coarse,
    Intermediate,
    Refine,
}

impl Stage {
    pub const ALL: [Stage; 3] = [Stage::Coarse, Stage::Intermediate, Stage::Refine];

    /// Decimation factor relative to full resolution.
    pub fn downscale(self) -> usize {
        match self {
            Self::Coarse => 4,
            Self::Intermediate => 2,
            Self::Refine => 1,
        }
    }

    pub fn default_thresholds<T: Scalar>(self) -> ConsistencyThresholds<T> {
        let (px, depth) = match self {
            Self::Coarse => (1.0, 0.01),
            Self::Intermediate => (0.5, 0.005),
            Self::Refine => (0.25, 0.0025),
        };
        ConsistencyThresholds {
            d_pixel: T::lit(px),
            d_depth: T::lit(depth),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Coarse => "coarse",
            Self::Intermediate => "intermediate",
            Self::Refine => "refine",
        }
    }
}

impl std::str::FromStr for Stage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "coarse" | "1" => Ok(Self::Coarse),
            "intermediate" | "2" => Ok(Self::Intermediate),
            "refine" | "3" => Ok(Self::Refine),
            other => Err(format!("unknown stage `{other}` (coarse|intermediate|refine)")),
        }
    }
}

/// Penalty maps for all three stages. Each stage decimates the full
/// resolution bundle and its reference mask, then applies its own thresholds.
pub fn stage_penalty_maps<T: Scalar>(
    bundle: &ViewBundle<T>,
    m: usize,
    thresholds: [ConsistencyThresholds<T>; 3],
    range: PenaltyRange,
    mode: SampleMode,
) -> Result<[PenaltyMap<T>; 3]> {
    let maps = Stage::ALL
        .iter()
        .zip(thresholds)
        .map(|(stage, t)| {
            let scaled = bundle.downscaled(stage.downscale())?;
            let params = GcParams::new(m, t).with_range(range).with_sample_mode(mode);
            penalty_map(&scaled, &params, &scaled.ref_mask)
        })
        .collect::<Result<Vec<_>>>()?;
    let [a, b, c]: [PenaltyMap<T>; 3] = maps.try_into().map_err(|_| Error::Config("stage count".into()))?;
    Ok([a, b, c])
}
