//! Multi-view geometric consistency toolkit for MVS depth maps.
//!
//! - [`gc`]: forward-backward reprojection, pixel displacement / relative
//!   depth errors, per-view inconsistency masks and the penalty map used to
//!   weight a depth loss;
//! - [`filter`]: removal of inconsistent ground-truth depth pixels;
//! - [`fusion`]: static and dynamic depth-map fusion into a point cloud;
//! - [`metrics`]: point-cloud accuracy/completeness and depth-map EPE;
//! - [`synth`]: analytic plane/sphere scenes for testing;
//! - [`io`]: PFM, `cam.txt`, `pair.txt` and PLY.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*F32` /
//! `*F64` aliases below name the common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bundle;
pub mod cloud;
pub mod error;
pub mod filter;
pub mod fusion;
pub mod gc;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod metrics;
pub mod scalar;
pub mod synth;

pub use bundle::{SourceView, ViewBundle};
pub use cloud::PointCloud;
pub use error::{Error, Result};
pub use filter::{filter_depth, FilterParams, FilterReport};
pub use fusion::{fuse, fuse_with_origins, DepthAggregate, FusionMode, FusionParams, FusionView, PixelOrigin};
pub use gc::{
    fbr, mask_sum, pde_rdd, penalty_map, stage_penalty_maps, total_loss, view_inconsistency_mask, weighted_stage_loss, ConsistencyThresholds, FbrResult,
    GcParams, LossReduction, PenaltyMap, PenaltyRange, PixelErrors, Stage, StageWeights,
};
pub use geometry::{backproject_pixel, project_pixel, sample_depth, snap_to_grid, Camera, PixelPoint, PixelTransfer, ProjectError, SampleMode};
pub use grid::{DepthMap, Grid, Mask};
pub use metrics::{cloud_score, depth_score, CloudScore, DepthScore, DepthThresholds, NearestIndex};
pub use scalar::Scalar;
pub use synth::{corrupt_depth, Surface, SurfaceKind, SyntheticScene};

pub type CameraF32 = Camera<f32>;
pub type CameraF64 = Camera<f64>;
pub type DepthMapF32 = DepthMap<f32>;
pub type DepthMapF64 = DepthMap<f64>;
pub type PenaltyMapF32 = PenaltyMap<f32>;
pub type PenaltyMapF64 = PenaltyMap<f64>;
pub type ViewBundleF32 = ViewBundle<f32>;
pub type ViewBundleF64 = ViewBundle<f64>;
pub type PointCloudF32 = PointCloud<f32>;
pub type PointCloudF64 = PointCloud<f64>;
pub type SyntheticSceneF64 = SyntheticScene<f64>;
