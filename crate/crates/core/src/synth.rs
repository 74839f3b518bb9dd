//! Analytic multi-view scenes used as ground truth for every geometric
//! routine: planes and spheres rendered by closed-form ray intersection.
//!
//! Randomness comes from `ChaCha8Rng::seed_from_u64(seed)` (crate
//! `rand_chacha`), so a given seed yields the same scene and the same
//! corruption on every platform.

use nalgebra::{Point3, Unit, Vector3};
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geometry::Camera;
use crate::grid::{DepthMap, Mask};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub enum Surface<T: Scalar> {
    /// Points with `normal · X = offset`.
    Plane {
        normal: Unit<Vector3<T>>,
        offset: T,
    },
    Sphere {
        center: Point3<T>,
        radius: T,
    },
}

impl<T: Scalar> Surface<T> {
    /// Smallest positive ray parameter `t` with `origin + t·dir` on the surface.
    pub fn intersect(&self, origin: &Point3<T>, dir: &Vector3<T>) -> Option<T> {
        match self {
            Surface::Plane { normal, offset } => {
                let denom = normal.dot(dir);
                if denom == T::zero() {
                    return None;
                }
                let t = (*offset - normal.dot(&origin.coords)) / denom;
                (t > T::zero()).then_some(t)
            }
            Surface::Sphere { center, radius } => {
                let oc = origin - center;
                let a = dir.dot(dir);
                let b = T::lit(2.0) * dir.dot(&oc);
                let c = oc.dot(&oc) - *radius * *radius;
                let disc = b * b - T::lit(4.0) * a * c;
                if disc < T::zero() {
                    return None;
                }
                let sq = disc.sqrt();
                let two_a = T::lit(2.0) * a;
                let near = (-b - sq) / two_a;
                let far = (-b + sq) / two_a;
                if near > T::zero() {
                    Some(near)
                } else if far > T::zero() {
                    Some(far)
                } else {
                    None
                }
            }
        }
    }

    pub fn signed_distance(&self, p: &Point3<T>) -> T {
        match self {
            Surface::Plane { normal, offset } => normal.dot(&p.coords) - *offset,
            Surface::Sphere { center, radius } => (p - center).norm() - *radius,
        }
    }

    /// Outward unit normal at (or nearest to) `p`.
    pub fn normal_at(&self, p: &Point3<T>) -> Vector3<T> {
        match self {
            Surface::Plane { normal, .. } => normal.into_inner(),
            Surface::Sphere { center, .. } => (p - center).normalize(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SurfaceKind {
    Plane,
    Sphere,
}

impl std::str::FromStr for SurfaceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "plane" => Ok(Self::Plane),
            "sphere" => Ok(Self::Sphere),
            other => Err(format!("unknown surface `{other}` (plane|sphere)")),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticScene<T: Scalar> {
    pub surface: Surface<T>,
    pub cameras: Vec<Camera<T>>,
    /// `(width, height)` shared by every view.
    pub resolution: (usize, usize),
    pub seed: u64,
}

impl<T: Scalar> SyntheticScene<T> {
    pub fn new(surface: Surface<T>, cameras: Vec<Camera<T>>, resolution: (usize, usize), seed: u64) -> Result<Self> {
        if cameras.is_empty() {
            return Err(Error::Config("scene needs at least one camera".into()));
        }
        let (w, h) = resolution;
        let cameras = cameras.into_iter().map(|c| c.with_image_size(w, h)).collect();
        Ok(Self {
            surface,
            cameras,
            resolution,
            seed,
        })
    }

    pub fn view_count(&self) -> usize {
        self.cameras.len()
    }

    /// Camera-frame depth of the first surface hit per pixel; invalid where
    /// the ray misses.
    pub fn render_depth(&self, view: usize) -> Result<DepthMap<T>> {
        let cam = self
            .cameras
            .get(view)
            .ok_or_else(|| Error::Config(format!("view {view} out of range ({} views)", self.cameras.len())))?;
        let origin = cam.center();
        let to_world = cam.camera_to_world().fixed_view::<3, 3>(0, 0).into_owned();
        let k_inv = *cam.intrinsics_inverse();
        let (w, h) = self.resolution;
        DepthMap::from_fn(w, h, |x, y| {
            let ray = k_inv * Vector3::new(T::from_count(x), T::from_count(y), T::one());
            let dir = to_world * ray;
            match self.surface.intersect(&origin, &dir) {
                Some(t) if t * ray.z > T::zero() => t * ray.z,
                _ => T::zero(),
            }
        })
    }

    pub fn render_all(&self) -> Result<Vec<DepthMap<T>>> {
        (0..self.cameras.len()).map(|v| self.render_depth(v)).collect()
    }

    /// Fronto-parallel plane at depth `depth` seen by cameras that share
    /// the reference orientation and sit at `centers`.
    pub fn fronto_parallel(resolution: (usize, usize), focal: T, depth: T, centers: &[Vector3<T>]) -> Result<Self> {
        let (w, h) = resolution;
        let half = T::lit(0.5);
        let cx = T::from_count(w - 1) * half;
        let cy = T::from_count(h - 1) * half;
        let cameras = centers
            .iter()
            .map(|c| Camera::from_pinhole(focal, focal, cx, cy, nalgebra::Matrix3::identity(), -c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(
            Surface::Plane {
                normal: Vector3::z_axis(),
                offset: depth,
            },
            cameras,
            resolution,
            0,
        )
    }

    /// Random plane or sphere with `views` cameras looking at it.
    ///
    /// The reference camera (view 0) sits at the origin looking down `+z`;
    /// the others are spread within a small baseline around it and aimed
    /// at the surface so that most of each view overlaps the reference.
    pub fn random(kind: SurfaceKind, views: usize, resolution: (usize, usize), seed: u64) -> Result<Self> {
        if views == 0 {
            return Err(Error::Config("scene needs at least one view".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (w, h) = resolution;
        let lit = |v: f64| T::lit(v);
        let focal = lit(w.max(h) as f64 * rng.gen_range(0.9..1.3));
        let cx = lit((w as f64 - 1.0) / 2.0 + rng.gen_range(-2.0..2.0));
        let cy = lit((h as f64 - 1.0) / 2.0 + rng.gen_range(-2.0..2.0));

        let (surface, target) = match kind {
            SurfaceKind::Plane => {
                let tilt_x: f64 = rng.gen_range(-0.5..0.5);
                let tilt_y: f64 = rng.gen_range(-0.5..0.5);
                let normal = Unit::new_normalize(Vector3::new(lit(tilt_x), lit(tilt_y), T::one()));
                let dist: f64 = rng.gen_range(6.0..12.0);
                let target = Point3::new(T::zero(), T::zero(), lit(dist));
                let offset = normal.dot(&target.coords);
                (Surface::Plane { normal, offset }, target)
            }
            SurfaceKind::Sphere => {
                let dist: f64 = rng.gen_range(5.0..8.0);
                let radius: f64 = rng.gen_range(1.5..2.5);
                let center = Point3::new(lit(rng.gen_range(-0.2..0.2)), lit(rng.gen_range(-0.2..0.2)), lit(dist));
                (Surface::Sphere { center, radius: lit(radius) }, center)
            }
        };

        let up = Vector3::new(T::zero(), -T::one(), T::zero());
        let mut cameras = Vec::with_capacity(views);
        cameras.push(Camera::look_at(
            focal,
            focal,
            cx,
            cy,
            Point3::origin(),
            Point3::new(T::zero(), T::zero(), T::one()),
            up,
        )?);
        for i in 1..views {
            let angle = std::f64::consts::TAU * (i as f64 - 1.0) / (views as f64 - 1.0).max(1.0) + rng.gen_range(-0.3..0.3);
            let radius: f64 = rng.gen_range(0.3..0.8);
            let eye = Point3::new(lit(radius * angle.cos()), lit(radius * angle.sin()), lit(rng.gen_range(-0.3..0.3)));
            let aim = target + Vector3::new(lit(rng.gen_range(-0.3..0.3)), lit(rng.gen_range(-0.3..0.3)), T::zero());
            cameras.push(Camera::look_at(focal, focal, cx, cy, eye, aim, up)?);
        }
        Self::new(surface, cameras, resolution, seed)
    }
}

/// Offsets `⌊fraction · valid⌋` randomly chosen valid pixels by
/// `±magnitude · depth`, returning the corrupted map and the touched pixels.
pub fn corrupt_depth<T: Scalar>(d: &DepthMap<T>, fraction: f64, magnitude: T, seed: u64) -> Result<(DepthMap<T>, Mask)> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::Config(format!("corruption fraction must lie in [0, 1], got {fraction}")));
    }
    let (w, h) = d.dims();
    let valid: Vec<usize> = d
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &v)| crate::grid::is_valid_depth(v))
        .map(|(i, _)| i)
        .collect();
    let count = (fraction * valid.len() as f64).floor() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let chosen = index::sample(&mut rng, valid.len(), count);

    let mut out = d.clone();
    let mut mask = Mask::filled(w, h, false)?;
    for i in chosen.iter() {
        let flat = valid[i];
        let (x, y) = (flat % w, flat / w);
        let sign = if rng.gen_bool(0.5) { T::one() } else { -T::one() };
        let v = d.value(x, y);
        out.set(x, y, v + sign * magnitude * v);
        *mask.get_mut(x, y) = true;
    }
    Ok((out, mask))
}
