//! Ground-truth depth filtering: the consistency check run with the
//! reference ground truth in place of an estimate, removing pixels that a
//! large enough fraction of source views disagree with.

use crate::bundle::ViewBundle;
use crate::error::{Error, Result};
use crate::gc::{mask_sum, ConsistencyThresholds};
use crate::geometry::SampleMode;
use crate::grid::{DepthMap, Grid};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams<T> {
    pub m: usize,
    pub thresholds: ConsistencyThresholds<T>,
    /// A pixel is removed once `mask_sum / m >= min_frac`.
    pub min_frac: f64,
    pub sample_mode: SampleMode,
}

impl<T: Scalar> FilterParams<T> {
    /// Loose thresholds suited to DTU-style ground truth (`d_pixel = 2`,
    /// `d_depth = 0.25`, `M = 8`).
    pub fn dtu() -> Self {
        Self {
            m: 8,
            thresholds: ConsistencyThresholds {
                d_pixel: T::lit(2.0),
                d_depth: T::lit(0.25),
            },
            min_frac: 0.5,
            sample_mode: SampleMode::Bilinear,
        }
    }

    /// BlendedMVS settings (`d_pixel = 0.5`, `d_depth = 0.05`, `M = 10`).
    pub fn blended_mvs() -> Self {
        Self {
            m: 10,
            thresholds: ConsistencyThresholds {
                d_pixel: T::lit(0.5),
                d_depth: T::lit(0.05),
            },
            ..Self::dtu()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.thresholds.validate()?;
        if !(self.min_frac > 0.0 && self.min_frac <= 1.0) {
            return Err(Error::Config(format!("min_frac must lie in (0, 1], got {}", self.min_frac)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct FilterReport {
    pub removed_count: usize,
    /// `removed_count / valid input pixels` (0 when nothing was valid).
    pub removed_fraction: f64,
    pub valid_before: usize,
    /// Number of source views flagging each pixel.
    pub per_view_flags: Grid<u32>,
}

/// Removes inconsistent pixels from the bundle's reference depth, which
/// must be a ground-truth map. Source views are read as given, so
/// filtering a scene view by view never sees already-filtered neighbours.
pub fn filter_depth<T: Scalar>(bundle: &ViewBundle<T>, params: &FilterParams<T>) -> Result<(DepthMap<T>, FilterReport)> {
    params.validate()?;
    let flags = mask_sum(bundle, params.m, &params.thresholds, params.sample_mode)?;
    let mut filtered = bundle.ref_depth.clone();
    let mut removed = 0usize;
    let m = params.m as f64;
    for y in 0..filtered.height() {
        for x in 0..filtered.width() {
            if filtered.is_valid(x, y) && f64::from(*flags.get(x, y)) / m >= params.min_frac {
                filtered.invalidate(x, y);
                removed += 1;
            }
        }
    }
    let valid_before = bundle.ref_depth.valid_count();
    let removed_fraction = if valid_before == 0 { 0.0 } else { removed as f64 / valid_before as f64 };
    log::debug!("view {}: removed {removed}/{valid_before} ground-truth pixels", bundle.ref_index);
    Ok((
        filtered,
        FilterReport {
            removed_count: removed,
            removed_fraction,
            valid_before,
            per_view_flags: flags,
        },
    ))
}
