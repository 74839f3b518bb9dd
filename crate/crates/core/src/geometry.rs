//! Pinhole cameras and the projection, back-projection and depth sampling
//! primitives the consistency checks are built from.
//!
//! Conventions:
//! - pixel `(0, 0)` is the centre of the top-left pixel, `x` grows rightward
//!   and `y` downward;
//! - extrinsics map world coordinates into the camera frame
//!   (`X_cam = E · X_world`);
//! - depth is the camera-frame `z` coordinate.

use nalgebra::{Matrix3, Matrix4, Point3, Vector3};

use crate::error::{Error, Result};
use crate::grid::{is_valid_depth, DepthMap};
use crate::scalar::Scalar;

/// Pinhole camera: 3×3 intrinsics plus a world-to-camera rigid transform.
#[derive(Debug, Clone, PartialEq)]
pub struct Camera<T: Scalar> {
    intrinsics: Matrix3<T>,
    extrinsics: Matrix4<T>,
    intrinsics_inv: Matrix3<T>,
    camera_to_world: Matrix4<T>,
    pub depth_min: Option<T>,
    pub depth_interval: Option<T>,
    pub num_planes: Option<usize>,
    pub depth_max: Option<T>,
    /// Declared `(width, height)` of the images this camera produced.
    pub image_size: Option<(usize, usize)>,
}

impl<T: Scalar> Camera<T> {
    /// Validating constructor.
    ///
    /// Rejects intrinsics with non-positive focal lengths or a singular
    /// matrix, and extrinsics whose rotation block is not orthonormal with
    /// determinant +1 (within [`Scalar::rotation_tolerance`]).
    pub fn new(intrinsics: Matrix3<T>, extrinsics: Matrix4<T>) -> Result<Self> {
        let (cam, residual) = Self::new_lenient(intrinsics, extrinsics)?;
        if residual > T::rotation_tolerance() {
            return Err(Error::Camera(format!("rotation is not orthonormal: max |RᵀR − I| = {residual}")));
        }
        Ok(cam)
    }

    /// Like [`Camera::new`] but accepts rotations that are only
    /// approximately orthonormal (files written with a few decimals).
    /// Returns the orthonormality residual `max |RᵀR − I|` alongside.
    pub fn new_lenient(intrinsics: Matrix3<T>, extrinsics: Matrix4<T>) -> Result<(Self, T)> {
        if !(intrinsics[(0, 0)] > T::zero() && intrinsics[(1, 1)] > T::zero()) {
            return Err(Error::Camera(format!(
                "focal lengths must be positive, got fx={} fy={}",
                intrinsics[(0, 0)],
                intrinsics[(1, 1)]
            )));
        }
        if intrinsics.iter().chain(extrinsics.iter()).any(|v| !v.is_finite_value()) {
            return Err(Error::Camera("non-finite camera parameter".into()));
        }
        let intrinsics_inv = intrinsics.try_inverse().ok_or_else(|| Error::Camera("intrinsics matrix is singular".into()))?;
        let bottom = extrinsics.fixed_view::<1, 4>(3, 0);
        if bottom[0] != T::zero() || bottom[1] != T::zero() || bottom[2] != T::zero() || bottom[3] != T::one() {
            return Err(Error::Camera("extrinsics bottom row must be [0 0 0 1]".into()));
        }
        let rotation: Matrix3<T> = extrinsics.fixed_view::<3, 3>(0, 0).into_owned();
        if rotation.determinant() <= T::zero() {
            return Err(Error::Camera("rotation determinant must be +1".into()));
        }
        let residual = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        let camera_to_world = extrinsics.try_inverse().ok_or_else(|| Error::Camera("extrinsics matrix is singular".into()))?;
        Ok((
            Self {
                intrinsics,
                extrinsics,
                intrinsics_inv,
                camera_to_world,
                depth_min: None,
                depth_interval: None,
                num_planes: None,
                depth_max: None,
                image_size: None,
            },
            residual,
        ))
    }

    /// Camera from focal lengths, principal point and a world-to-camera pose.
    pub fn from_pinhole(fx: T, fy: T, cx: T, cy: T, rotation: Matrix3<T>, translation: Vector3<T>) -> Result<Self> {
        let k = Matrix3::new(fx, T::zero(), cx, T::zero(), fy, cy, T::zero(), T::zero(), T::one());
        let mut e = Matrix4::identity();
        e.fixed_view_mut::<3, 3>(0, 0).copy_from(&rotation);
        e.fixed_view_mut::<3, 1>(0, 3).copy_from(&translation);
        Self::new(k, e)
    }

    /// Camera at `eye` looking at `target`; `up` fixes the roll (image `y`
    /// points along `-up` projected onto the image plane).
    pub fn look_at(fx: T, fy: T, cx: T, cy: T, eye: Point3<T>, target: Point3<T>, up: Vector3<T>) -> Result<Self> {
        let forward = (target - eye).normalize();
        let right = forward.cross(&up);
        if right.norm() <= T::default_epsilon() {
            return Err(Error::Camera("look_at: up vector parallel to viewing direction".into()));
        }
        let right = right.normalize();
        let down = forward.cross(&right);
        // rows are the camera axes expressed in world coordinates
        let rotation = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
        let translation = -(rotation * eye.coords);
        Self::from_pinhole(fx, fy, cx, cy, rotation, translation)
    }

    pub fn with_depth_range(mut self, depth_min: T, depth_interval: T) -> Self {
        self.depth_min = Some(depth_min);
        self.depth_interval = Some(depth_interval);
        self
    }

    pub fn with_image_size(mut self, width: usize, height: usize) -> Self {
        self.image_size = Some((width, height));
        self
    }

    pub fn intrinsics(&self) -> &Matrix3<T> {
        &self.intrinsics
    }

    pub fn extrinsics(&self) -> &Matrix4<T> {
        &self.extrinsics
    }

    pub fn intrinsics_inverse(&self) -> &Matrix3<T> {
        &self.intrinsics_inv
    }

    pub fn camera_to_world(&self) -> &Matrix4<T> {
        &self.camera_to_world
    }

    pub fn rotation(&self) -> Matrix3<T> {
        self.extrinsics.fixed_view::<3, 3>(0, 0).into_owned()
    }

    pub fn translation(&self) -> Vector3<T> {
        self.extrinsics.fixed_view::<3, 1>(0, 3).into_owned()
    }

    /// Optical centre in world coordinates.
    pub fn center(&self) -> Point3<T> {
        Point3::from(self.camera_to_world.fixed_view::<3, 1>(0, 3).into_owned())
    }

    pub fn focal(&self) -> (T, T) {
        (self.intrinsics[(0, 0)], self.intrinsics[(1, 1)])
    }

    /// World point seen at pixel `(x, y)` with camera-frame depth `depth`.
    pub fn lift(&self, x: T, y: T, depth: T) -> Point3<T> {
        let cam = self.intrinsics_inv * Vector3::new(x, y, T::one()) * depth;
        self.camera_to_world.transform_point(&Point3::from(cam))
    }

    /// Pixel coordinates and depth of a world point, `None` when the point
    /// is not strictly in front of the camera.
    pub fn project_world(&self, p: &Point3<T>) -> Option<PixelPoint<T>> {
        let cam = self.extrinsics.transform_point(p);
        let h = self.intrinsics * cam.coords;
        if cam.z <= T::zero() || h.z <= T::zero() {
            return None;
        }
        Some(PixelPoint::new(h.x / h.z, h.y / h.z, cam.z))
    }

    /// Camera for images decimated by `factor` (see [`DepthMap::decimate`]):
    /// new pixel `i` sits on old pixel `factor · i`.
    pub fn downscaled(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("downscale factor must be >= 1".into()));
        }
        let s = T::one() / T::from_count(factor);
        let mut k = self.intrinsics;
        for c in 0..3 {
            k[(0, c)] *= s;
            k[(1, c)] *= s;
        }
        let (mut cam, _) = Self::new_lenient(k, self.extrinsics)?;
        cam.depth_min = self.depth_min;
        cam.depth_interval = self.depth_interval;
        cam.num_planes = self.num_planes;
        cam.depth_max = self.depth_max;
        cam.image_size = self.image_size.map(|(w, h)| (w.div_ceil(factor), h.div_ceil(factor)));
        Ok(cam)
    }

    /// Errors when `depth`'s dimensions disagree with the declared image size.
    pub fn check_image_size(&self, depth: &DepthMap<T>, what: &str) -> Result<()> {
        match self.image_size {
            Some(size) if size != depth.dims() => Err(Error::Config(format!(
                "{what}: depth map is {}x{} but camera declares {}x{}",
                depth.width(),
                depth.height(),
                size.0,
                size.1
            ))),
            _ => Ok(()),
        }
    }
}

/// Continuous pixel location plus camera-frame depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelPoint<T> {
    pub x: T,
    pub y: T,
    pub depth: T,
}

impl<T> PixelPoint<T> {
    pub fn new(x: T, y: T, depth: T) -> Self {
        Self { x, y, depth }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum ProjectError {
    #[error("input depth must be positive")]
    NonPositiveDepth,
    #[error("point lies behind the target camera")]
    BehindCamera,
}

/// Precomputed transfer of pixels with depth from one camera to another.
///
/// `X_to = depth · A · [x, y, 1]ᵀ + b` with `A = R_rel · K_from⁻¹`, followed
/// by the perspective divide through `K_to`.
#[derive(Debug, Clone, Copy)]
pub struct PixelTransfer<T: Scalar> {
    lift: Matrix3<T>,
    offset: Vector3<T>,
    intrinsics_to: Matrix3<T>,
}

impl<T: Scalar> PixelTransfer<T> {
    pub fn new(cam_from: &Camera<T>, cam_to: &Camera<T>) -> Self {
        let relative = cam_to.extrinsics * cam_from.camera_to_world;
        let rotation = relative.fixed_view::<3, 3>(0, 0).into_owned();
        Self {
            lift: rotation * cam_from.intrinsics_inv,
            offset: relative.fixed_view::<3, 1>(0, 3).into_owned(),
            intrinsics_to: cam_to.intrinsics,
        }
    }

    #[inline]
    pub fn apply(&self, p: PixelPoint<T>) -> Result<PixelPoint<T>, ProjectError> {
        if !(p.depth > T::zero()) {
            return Err(ProjectError::NonPositiveDepth);
        }
        let cam = self.lift * Vector3::new(p.x, p.y, T::one()) * p.depth + self.offset;
        if cam.z <= T::zero() {
            return Err(ProjectError::BehindCamera);
        }
        let h = self.intrinsics_to * cam;
        if h.z <= T::zero() {
            return Err(ProjectError::BehindCamera);
        }
        Ok(PixelPoint::new(h.x / h.z, h.y / h.z, cam.z))
    }
}

/// Where `p` (seen by `cam_from`) lands in `cam_to`, with its depth there.
pub fn project_pixel<T: Scalar>(cam_from: &Camera<T>, cam_to: &Camera<T>, p: PixelPoint<T>) -> Result<PixelPoint<T>, ProjectError> {
    PixelTransfer::new(cam_from, cam_to).apply(p)
}

/// Inverse of [`project_pixel`]: carries a pixel of `cam_to` back into `cam_from`.
pub fn backproject_pixel<T: Scalar>(cam_from: &Camera<T>, cam_to: &Camera<T>, p: PixelPoint<T>) -> Result<PixelPoint<T>, ProjectError> {
    PixelTransfer::new(cam_to, cam_from).apply(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SampleMode {
    #[default]
    Bilinear,
    Nearest,
}

impl std::str::FromStr for SampleMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "bilinear" => Ok(Self::Bilinear),
            "nearest" => Ok(Self::Nearest),
            other => Err(format!("unknown sample mode `{other}` (bilinear|nearest)")),
        }
    }
}

/// Samples `d` at continuous pixel `(x, y)`.
///
/// Returns `None` outside `[0, W−1] × [0, H−1]` or when a pixel with
/// non-zero interpolation weight is invalid.
pub fn sample_depth<T: Scalar>(d: &DepthMap<T>, x: T, y: T, mode: SampleMode) -> Option<T> {
    let x = snap_to_grid(x);
    let y = snap_to_grid(y);
    let max_x = T::from_count(d.width() - 1);
    let max_y = T::from_count(d.height() - 1);
    // NaN fails both comparisons
    if !(x >= T::zero() && x <= max_x && y >= T::zero() && y <= max_y) {
        return None;
    }
    match mode {
        SampleMode::Nearest => {
            let xi = x.round().to_usize()?;
            let yi = y.round().to_usize()?;
            d.depth(xi, yi)
        }
        SampleMode::Bilinear => {
            let x0f = x.floor();
            let y0f = y.floor();
            let fx = x - x0f;
            let fy = y - y0f;
            let x0 = x0f.to_usize()?;
            let y0 = y0f.to_usize()?;
            let mut acc = T::zero();
            for (dy, wy) in [(0, T::one() - fy), (1, fy)] {
                if wy == T::zero() {
                    continue;
                }
                for (dx, wx) in [(0, T::one() - fx), (1, fx)] {
                    if wx == T::zero() {
                        continue;
                    }
                    let v = d.value(x0 + dx, y0 + dy);
                    if !is_valid_depth(v) {
                        return None;
                    }
                    acc += wx * wy * v;
                }
            }
            Some(acc)
        }
    }
}

/// Rounds coordinates within a few ulps (at image-coordinate scale) of an integer, so that on-grid
/// reprojections are not pushed off the image or onto invalid neighbours by
/// rounding noise.
pub fn snap_to_grid<T: Scalar>(v: T) -> T {
    let r = v.round();
    let tol = T::default_epsilon() * T::lit(64.0) * r.abs().max(T::lit(64.0));
    if (v - r).abs() <= tol {
        r
    } else {
        v
    }
}
