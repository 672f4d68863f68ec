//! Row-major 2D rasters used for every image-like layer in the pipeline.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};

/// A `height × width` grid of pixels stored row-major. Indexed by `(row, col)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Raster<P> {
    width: usize,
    height: usize,
    data: Vec<P>,
}

pub type RgbImage = Raster<[u8; 3]>;
/// Class or instance identifiers.
pub type IdImage = Raster<u16>;
pub type Mask = Raster<bool>;
/// Per-pixel depth in meters, `0` marks an invalid pixel.
pub type DepthImage<T> = Raster<T>;
/// Per-pixel LiDAR intensity in `[0, 1]`.
pub type IntensityImage<T> = Raster<T>;

impl<P: Clone> Raster<P> {
    pub fn filled(width: usize, height: usize, value: P) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> P) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }
}

impl<P> Raster<P> {
    pub fn from_vec(width: usize, height: usize, data: Vec<P>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "{}x{} raster needs {} pixels, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    /// `(width, height)`
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
    pub fn data(&self) -> &[P] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [P] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<P> {
        self.data
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<&P> {
        if row < self.height && col < self.width {
            Some(&self.data[row * self.width + col])
        } else {
            None
        }
    }

    pub fn map<Q>(&self, f: impl FnMut(&P) -> Q) -> Raster<Q> {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Iterate `(row, col, &pixel)` in row-major order.
    pub fn enumerate(&self) -> impl Iterator<Item = (usize, usize, &P)> + '_ {
        let w = self.width.max(1);
        self.data
            .iter()
            .enumerate()
            .map(move |(i, p)| (i / w, i % w, p))
    }

    pub fn same_dims<Q>(&self, other: &Raster<Q>) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Error unless `other` has the same dimensions.
    pub fn check_dims<Q>(&self, other: &Raster<Q>, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            Err(Error::Shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }
}

impl<P> Index<(usize, usize)> for Raster<P> {
    type Output = P;

    #[inline]
    fn index(&self, (row, col): (usize, usize)) -> &P {
        assert!(row < self.height && col < self.width, "raster index out of bounds");
        &self.data[row * self.width + col]
    }
}

impl<P> IndexMut<(usize, usize)> for Raster<P> {
    #[inline]
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut P {
        assert!(row < self.height && col < self.width, "raster index out of bounds");
        &mut self.data[row * self.width + col]
    }
}
