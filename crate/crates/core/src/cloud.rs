use nalgebra::Point3;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Unordered world-space points with optional per-point colour and confidence.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud<T: Scalar> {
    pub points: Vec<Point3<T>>,
    pub colors: Option<Vec<[u8; 3]>>,
    pub confidence: Option<Vec<T>>,
}

impl<T: Scalar> PointCloud<T> {
    pub fn new(points: Vec<Point3<T>>) -> Self {
        Self {
            points,
            colors: None,
            confidence: None,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Checks finiteness and attribute lengths.
    pub fn validate(&self) -> Result<()> {
        if let Some(i) = self.points.iter().position(|p| p.iter().any(|v| !v.is_finite_value())) {
            return Err(Error::Config(format!("point {i} has a non-finite coordinate")));
        }
        if let Some(c) = &self.colors {
            if c.len() != self.points.len() {
                return Err(Error::Shape(format!("{} colours for {} points", c.len(), self.points.len())));
            }
        }
        if let Some(c) = &self.confidence {
            if c.len() != self.points.len() {
                return Err(Error::Shape(format!("{} confidences for {} points", c.len(), self.points.len())));
            }
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> PointCloud<U> {
        PointCloud {
            points: self.points.iter().map(|p| p.map(|v| U::lit(v.to_f64_lossy()))).collect(),
            colors: self.colors.clone(),
            confidence: self.confidence.as_ref().map(|c| c.iter().map(|&v| U::lit(v.to_f64_lossy())).collect()),
        }
    }
}
