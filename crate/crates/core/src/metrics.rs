//! Reconstruction quality metrics.
//!
//! Point clouds: accuracy (mean nearest-neighbour distance predicted → ground
//! truth), completeness (ground truth → predicted) and their mean, each
//! ignoring distances above a caller-supplied cut-off. No observation masks
//! or bounding boxes are applied, so scores are only comparable with other
//! runs of this function.
//!
//! Depth maps: end-point error and the fraction of pixels above two error
//! thresholds.

use kiddo::immutable::float::kdtree::ImmutableKdTree;
use kiddo::SquaredEuclidean;
use rayon::prelude::*;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::grid::DepthMap;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloudScore<T> {
    pub accuracy: T,
    pub completeness: T,
    pub overall: T,
    /// Predicted points within `max_dist` of the ground truth.
    pub accuracy_inliers: usize,
    /// Ground-truth points within `max_dist` of the prediction.
    pub completeness_inliers: usize,
}

/// Exact nearest-neighbour index over a point cloud.
pub struct NearestIndex {
    tree: ImmutableKdTree<f64, u64, 3, 32>,
}

impl NearestIndex {
    pub fn new<T: Scalar>(cloud: &PointCloud<T>) -> Result<Self> {
        if cloud.is_empty() {
            return Err(Error::Empty("cannot index an empty point cloud".into()));
        }
        let coords: Vec<[f64; 3]> = cloud
            .points
            .iter()
            .map(|p| [p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy()])
            .collect();
        Ok(Self {
            tree: ImmutableKdTree::new_from_slice(&coords),
        })
    }

    /// Distance from `q` to the closest indexed point.
    pub fn nearest_distance(&self, q: [f64; 3]) -> f64 {
        self.tree.nearest_one::<SquaredEuclidean>(&q).distance.sqrt()
    }

    /// Nearest-neighbour distance for every point of `cloud`, in order.
    pub fn distances<T: Scalar>(&self, cloud: &PointCloud<T>) -> Vec<f64> {
        cloud
            .points
            .par_iter()
            .map(|p| self.nearest_distance([p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy()]))
            .collect()
    }
}

fn thresholded_mean(distances: &[f64], max_dist: f64, what: &str) -> Result<(f64, usize)> {
    let kept: Vec<f64> = distances.iter().copied().filter(|&d| d <= max_dist).collect();
    if kept.is_empty() {
        return Err(Error::Empty(format!(
            "{what}: all {} points are farther than max_dist = {max_dist}",
            distances.len()
        )));
    }
    Ok((kept.iter().sum::<f64>() / kept.len() as f64, kept.len()))
}

/// Accuracy, completeness and overall score of `pred` against `gt`.
pub fn cloud_score<T: Scalar>(pred: &PointCloud<T>, gt: &PointCloud<T>, max_dist: T) -> Result<CloudScore<T>> {
    let max_dist = max_dist.to_f64_lossy();
    if !(max_dist > 0.0) || !max_dist.is_finite() {
        return Err(Error::Config(format!("max_dist must be positive, got {max_dist}")));
    }
    if pred.is_empty() {
        return Err(Error::Empty("predicted cloud is empty".into()));
    }
    if gt.is_empty() {
        return Err(Error::Empty("ground-truth cloud is empty".into()));
    }
    let gt_index = NearestIndex::new(gt)?;
    let pred_index = NearestIndex::new(pred)?;
    let (accuracy, accuracy_inliers) = thresholded_mean(&gt_index.distances(pred), max_dist, "accuracy")?;
    let (completeness, completeness_inliers) = thresholded_mean(&pred_index.distances(gt), max_dist, "completeness")?;
    Ok(CloudScore {
        accuracy: T::lit(accuracy),
        completeness: T::lit(completeness),
        overall: T::lit((accuracy + completeness) / 2.0),
        accuracy_inliers,
        completeness_inliers,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthScore<T> {
    pub epe: T,
    pub e1: T,
    pub e3: T,
    pub valid_pixels: usize,
}

/// Error thresholds of the two outlier ratios (strictly greater counts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthThresholds<T> {
    pub e1: T,
    pub e3: T,
}

impl<T: Scalar> Default for DepthThresholds<T> {
    fn default() -> Self {
        Self { e1: T::one(), e3: T::lit(3.0) }
    }
}

/// End-point error and outlier ratios over pixels with valid ground truth.
/// Invalid predictions count with their stored value of 0.
pub fn depth_score<T: Scalar>(pred: &DepthMap<T>, gt: &DepthMap<T>, thresholds: &DepthThresholds<T>) -> Result<DepthScore<T>> {
    if pred.dims() != gt.dims() {
        return Err(Error::Shape(format!(
            "prediction is {}x{}, ground truth {}x{}",
            pred.width(),
            pred.height(),
            gt.width(),
            gt.height()
        )));
    }
    let mut sum = T::zero();
    let mut over1 = 0usize;
    let mut over3 = 0usize;
    let mut n = 0usize;
    for (&p, &g) in pred.values().iter().zip(gt.values()) {
        if !crate::grid::is_valid_depth(g) {
            continue;
        }
        let err = (p - g).abs();
        sum += err;
        over1 += usize::from(err > thresholds.e1);
        over3 += usize::from(err > thresholds.e3);
        n += 1;
    }
    if n == 0 {
        return Err(Error::Empty("ground truth has no valid pixels".into()));
    }
    let count = T::from_count(n);
    Ok(DepthScore {
        epe: sum / count,
        e1: T::from_count(over1) / count,
        e3: T::from_count(over3) / count,
        valid_pixels: n,
    })
}
