//! Dense per-pixel fields: generic grids, depth maps and binary masks.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Row-major `height × width` field of values, row 0 at the top of the image.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<V> {
    width: usize,
    height: usize,
    data: Vec<V>,
}

/// Binary per-pixel mask.
pub type Mask = Grid<bool>;

impl<V: Clone> Grid<V> {
    pub fn filled(width: usize, height: usize, value: V) -> Result<Self> {
        check_dims(width, height)?;
        Ok(Self {
            width,
            height,
            data: vec![value; width * height],
        })
    }
}

impl<V> Grid<V> {
    pub fn from_vec(width: usize, height: usize, data: Vec<V>) -> Result<Self> {
        check_dims(width, height)?;
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "grid of {width}x{height} needs {} values, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self { width, height, data })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> V) -> Result<Self> {
        check_dims(width, height)?;
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Ok(Self { width, height, data })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &V {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut V {
        &mut self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[V] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [V] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<V> {
        self.data
    }

    pub fn map<U>(&self, f: impl FnMut(&V) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn same_dims<U>(&self, other: &Grid<U>) -> bool {
        self.dims() == other.dims()
    }

    pub(crate) fn ensure_same_dims<U>(&self, other: &Grid<U>, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: expected {}x{}, got {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

impl Mask {
    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }
}

fn check_dims(width: usize, height: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::Shape(format!("grid dimensions must be positive, got {width}x{height}")));
    }
    Ok(())
}

/// Per-pixel depth (camera-frame z). Zero marks an invalid pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap<T> {
    grid: Grid<T>,
}

impl<T: Scalar> DepthMap<T> {
    /// Builds a depth map, storing non-finite values as 0 (invalid).
    pub fn from_vec(width: usize, height: usize, mut values: Vec<T>) -> Result<Self> {
        for v in values.iter_mut() {
            if !v.is_finite_value() {
                *v = T::zero();
            }
        }
        Ok(Self {
            grid: Grid::from_vec(width, height, values)?,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Result<Self> {
        let grid = Grid::from_fn(width, height, |x, y| {
            let v = f(x, y);
            if v.is_finite_value() {
                v
            } else {
                T::zero()
            }
        })?;
        Ok(Self { grid })
    }

    pub fn invalid(width: usize, height: usize) -> Result<Self> {
        Ok(Self {
            grid: Grid::filled(width, height, T::zero())?,
        })
    }

    pub fn constant(width: usize, height: usize, depth: T) -> Result<Self> {
        Self::from_vec(width, height, vec![depth; width * height])
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.grid.width()
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.grid.height()
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        self.grid.dims()
    }

    /// Raw stored value (0 for invalid pixels).
    #[inline]
    pub fn value(&self, x: usize, y: usize) -> T {
        *self.grid.get(x, y)
    }

    /// Stored value when the pixel holds a valid depth.
    #[inline]
    pub fn depth(&self, x: usize, y: usize) -> Option<T> {
        let v = self.value(x, y);
        is_valid_depth(v).then_some(v)
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        is_valid_depth(self.value(x, y))
    }

    pub fn set(&mut self, x: usize, y: usize, v: T) {
        *self.grid.get_mut(x, y) = if v.is_finite_value() { v } else { T::zero() };
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        *self.grid.get_mut(x, y) = T::zero();
    }

    pub fn values(&self) -> &[T] {
        self.grid.as_slice()
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn validity(&self) -> Mask {
        self.grid.map(|&v| is_valid_depth(v))
    }

    pub fn valid_count(&self) -> usize {
        self.grid.as_slice().iter().filter(|&&v| is_valid_depth(v)).count()
    }

    /// Element-type conversion, e.g. `f64` maps to `f32` for file output.
    pub fn cast<U: Scalar>(&self) -> DepthMap<U> {
        DepthMap {
            grid: self.grid.map(|&v| {
                let u = U::lit(v.to_f64_lossy());
                if u.is_finite_value() {
                    u
                } else {
                    U::zero()
                }
            }),
        }
    }

    /// Keeps the top-left pixel of every `factor × factor` block.
    ///
    /// Stored values are copied verbatim. Pair with [`crate::Camera::downscaled`]
    /// using the same factor.
    pub fn decimate(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("decimation factor must be >= 1".into()));
        }
        let w = self.width().div_ceil(factor);
        let h = self.height().div_ceil(factor);
        let grid = Grid::from_fn(w, h, |x, y| self.value(x * factor, y * factor))?;
        Ok(Self { grid })
    }
}

impl<T: Scalar> From<DepthMap<T>> for Grid<T> {
    fn from(d: DepthMap<T>) -> Self {
        d.grid
    }
}

impl<T: Scalar> TryFrom<Grid<T>> for DepthMap<T> {
    type Error = Error;

    fn try_from(g: Grid<T>) -> Result<Self> {
        let (w, h) = g.dims();
        Self::from_vec(w, h, g.into_vec())
    }
}

#[inline]
pub fn is_valid_depth<T: Scalar>(v: T) -> bool {
    v > T::zero() && v.is_finite_value()
}
