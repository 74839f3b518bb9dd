//! Reference view plus its ordered source views.

use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::grid::{DepthMap, Mask};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SourceView<T: Scalar> {
    /// View id in the scene (pair-file numbering).
    pub id: usize,
    pub camera: Camera<T>,
    pub depth: DepthMap<T>,
}

/// One reference view and its source views, ordered best-first as in the
/// pair file.
#[derive(Debug, Clone)]
pub struct ViewBundle<T: Scalar> {
    pub ref_index: usize,
    pub ref_cam: Camera<T>,
    pub ref_depth: DepthMap<T>,
    /// Pixels where penalties may be non-zero.
    pub ref_mask: Mask,
    pub sources: Vec<SourceView<T>>,
    /// Files the bundle was assembled from, if any.
    pub provenance: Vec<PathBuf>,
}

impl<T: Scalar> ViewBundle<T> {
    /// Bundle whose reference mask is the validity mask of `ref_depth`.
    pub fn new(ref_index: usize, ref_cam: Camera<T>, ref_depth: DepthMap<T>, sources: Vec<SourceView<T>>) -> Result<Self> {
        let ref_mask = ref_depth.validity();
        let bundle = Self {
            ref_index,
            ref_cam,
            ref_depth,
            ref_mask,
            sources,
            provenance: Vec::new(),
        };
        bundle.validate()?;
        Ok(bundle)
    }

    pub fn with_mask(mut self, mask: Mask) -> Result<Self> {
        if mask.dims() != self.ref_depth.dims() {
            return Err(Error::Shape(format!(
                "reference mask is {}x{} but reference depth is {}x{}",
                mask.width(),
                mask.height(),
                self.ref_depth.width(),
                self.ref_depth.height()
            )));
        }
        self.ref_mask = mask;
        Ok(self)
    }

    /// Checks every depth map against its camera's declared image size.
    pub fn validate(&self) -> Result<()> {
        self.ref_cam.check_image_size(&self.ref_depth, "reference view")?;
        if self.ref_mask.dims() != self.ref_depth.dims() {
            return Err(Error::Shape("reference mask and depth differ in size".into()));
        }
        for s in &self.sources {
            s.camera.check_image_size(&s.depth, &format!("source view {}", s.id))?;
        }
        Ok(())
    }

    /// Errors unless at least `m >= 1` source views are present.
    pub fn require_sources(&self, m: usize) -> Result<()> {
        if m == 0 {
            return Err(Error::Config("M must be at least 1".into()));
        }
        if self.sources.len() < m {
            return Err(Error::Config(format!(
                "M={m} source views requested but view {} has only {} (short by {})",
                self.ref_index,
                self.sources.len(),
                m - self.sources.len()
            )));
        }
        Ok(())
    }

    /// Same bundle with every map decimated by `factor` and cameras rescaled
    /// to match.
    pub fn downscaled(&self, factor: usize) -> Result<Self> {
        if factor == 1 {
            return Ok(self.clone());
        }
        let ref_depth = self.ref_depth.decimate(factor)?;
        let ref_mask = Mask::from_fn(ref_depth.width(), ref_depth.height(), |x, y| *self.ref_mask.get(x * factor, y * factor))?;
        let sources = self
            .sources
            .iter()
            .map(|s| {
                Ok(SourceView {
                    id: s.id,
                    camera: s.camera.downscaled(factor)?,
                    depth: s.depth.decimate(factor)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            ref_index: self.ref_index,
            ref_cam: self.ref_cam.downscaled(factor)?,
            ref_depth,
            ref_mask,
            sources,
            provenance: self.provenance.clone(),
        })
    }
}
