//! Synthetic LiDAR scans from dense depth maps and predicted intensity
//! images: back-projection, intensity lookup, zero-intensity dropping and
//! beam-line sparsification.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kitti_io::{CalibrationSet, Point, PointCloud};
use crate::polar_grid::{PolarGridConfig, HDL64E_ELEVATION_BOTTOM_DEG, HDL64E_ELEVATION_TOP_DEG};
use crate::raster::{DepthImage, IntensityImage};
use crate::reprojection::ProjectionChain;
use crate::resample::resize_nearest;
use crate::scalar::Real;

/// Back-project every valid depth pixel (row-major order) to a LiDAR-frame
/// point with intensity 0.
pub fn depth_to_cloud<T: Real>(depth: &DepthImage<T>, calib: &CalibrationSet<T>) -> Result<PointCloud<T>> {
    let chain = ProjectionChain::new(calib)?;
    let mut cloud = PointCloud::new();
    for (r, c, &d) in depth.enumerate() {
        if d > T::zero() {
            let p = chain.backproject(T::lit(c as f64), T::lit(r as f64), d)?;
            cloud.push(Point::new(p.x, p.y, p.z, T::zero()));
        }
    }
    if cloud.is_empty() {
        return Err(Error::EmptyCloud);
    }
    Ok(cloud)
}

/// Drop points farther than `max_range` meters from the sensor.
pub fn limit_range<T: Real>(cloud: &PointCloud<T>, max_range: T) -> PointCloud<T> {
    cloud.iter().filter(|p| p.range() <= max_range).copied().collect()
}

/// Where the upscaled intensity map sits inside the full camera image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IntensityPlacement {
    pub target_width: usize,
    pub target_height: usize,
    /// Column of the upscaled map's left edge in the camera image.
    pub offset_u: usize,
    /// Row of the upscaled map's top edge in the camera image.
    pub offset_v: usize,
}

impl Default for IntensityPlacement {
    /// 1216×352 bottom-centered inside a 1242×375 KITTI frame.
    fn default() -> Self {
        Self {
            target_width: 1216,
            target_height: 352,
            offset_u: (1242 - 1216) / 2,
            offset_v: 375 - 352,
        }
    }
}

/// Upscale `intensity` (nearest neighbor) to the placement's size and give
/// each point the value at its projected pixel. Points projecting outside the
/// upscaled region, or behind the camera, get 0.
pub fn assign_intensity<T: Real>(
    cloud: &PointCloud<T>,
    intensity: &IntensityImage<T>,
    placement: &IntensityPlacement,
    calib: &CalibrationSet<T>,
) -> Result<PointCloud<T>> {
    let chain = ProjectionChain::new(calib)?;
    let map = resize_nearest(intensity, placement.target_width, placement.target_height);
    let lookup = |p: &Point<T>| -> T {
        let Ok((u, v, _)) = chain.project(&nalgebra::Vector3::new(p.x, p.y, p.z)) else {
            return T::zero();
        };
        let col = u.round().floor_i64() - placement.offset_u as i64;
        let row = v.round().floor_i64() - placement.offset_v as i64;
        if col < 0 || row < 0 {
            return T::zero();
        }
        map.get(row as usize, col as usize).copied().unwrap_or_else(T::zero)
    };
    Ok(cloud
        .iter()
        .map(|p| Point {
            intensity: lookup(p),
            ..*p
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DropConfig {
    /// Points with intensity at or below this value are drop candidates.
    pub threshold: f64,
    /// Chance that a candidate is dropped.
    pub probability: f64,
}

impl Default for DropConfig {
    fn default() -> Self {
        Self {
            threshold: 0.0,
            probability: 1.0,
        }
    }
}

/// Remove low-intensity points. With the default configuration exactly the
/// points with intensity 0 go and no random numbers are drawn; otherwise
/// candidates are dropped with a generator seeded by `seed`.
pub fn drop_zero_intensity<T: Real>(cloud: &PointCloud<T>, cfg: &DropConfig, seed: u64) -> PointCloud<T> {
    let threshold = T::lit(cfg.threshold);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    cloud
        .iter()
        .filter(|p| {
            if p.intensity > threshold {
                return true;
            }
            if cfg.probability >= 1.0 {
                return false;
            }
            rng.random::<f64>() >= cfg.probability
        })
        .copied()
        .collect()
}

/// Target sensor for sparsification.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SparsifyConfig {
    pub n_lines: usize,
    /// Radians.
    pub elevation_min: f64,
    /// Radians.
    pub elevation_max: f64,
}

impl Default for SparsifyConfig {
    fn default() -> Self {
        Self {
            n_lines: 64,
            elevation_min: HDL64E_ELEVATION_BOTTOM_DEG.to_radians(),
            elevation_max: HDL64E_ELEVATION_TOP_DEG.to_radians(),
        }
    }
}

impl SparsifyConfig {
    pub fn with_lines(n_lines: usize) -> Self {
        Self {
            n_lines,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=128).contains(&self.n_lines) {
            return Err(Error::Config(format!("n_lines {} outside 1..=128", self.n_lines)));
        }
        if !(self.elevation_min < self.elevation_max) {
            return Err(Error::Config("elevation_min must be below elevation_max".into()));
        }
        Ok(())
    }

    fn bin_width(&self) -> f64 {
        (self.elevation_max - self.elevation_min) / self.n_lines as f64
    }

    /// Line index of an elevation, line 0 being the topmost bin. `None`
    /// outside `[elevation_min, elevation_max]`.
    pub fn line_of<T: Real>(&self, elevation: T) -> Option<usize> {
        let e = elevation.as_f64();
        if !(e >= self.elevation_min && e <= self.elevation_max) {
            return None;
        }
        let from_bottom = (((e - self.elevation_min) / self.bin_width()).floor() as usize).min(self.n_lines - 1);
        Some(self.n_lines - 1 - from_bottom)
    }

    /// `[low, high)` elevation bounds of a line (the top line includes
    /// `elevation_max`).
    pub fn line_bounds(&self, line: usize) -> (f64, f64) {
        let from_bottom = self.n_lines - 1 - line;
        let lo = self.elevation_min + from_bottom as f64 * self.bin_width();
        (lo, lo + self.bin_width())
    }

    pub fn line_center(&self, line: usize) -> f64 {
        let (lo, hi) = self.line_bounds(line);
        0.5 * (lo + hi)
    }
}

/// Sparsified cloud with the beam line of every point.
#[derive(Clone, Debug, PartialEq)]
pub struct LineTaggedCloud<T> {
    pub cloud: PointCloud<T>,
    pub lines: Vec<usize>,
}

/// Elevation differences below this count as ties (radians).
const CENTER_TIE: f64 = 1e-6;

/// Keep, per `(line, azimuth column)` cell, the point whose elevation is
/// nearest the line's center; near-ties keep the earlier input point. Output
/// is line-major (top line first), columns ascending within a line.
pub fn sparsify_to_lines<T: Real>(
    cloud: &PointCloud<T>,
    cfg: &SparsifyConfig,
    grid: &PolarGridConfig,
) -> Result<LineTaggedCloud<T>> {
    cfg.validate()?;
    let cols = grid.full_cols;
    let mut best: Vec<Option<(f64, usize)>> = vec![None; cfg.n_lines * cols];
    for (i, p) in cloud.iter().enumerate() {
        let elev = p.elevation();
        let Some(line) = cfg.line_of(elev) else {
            continue;
        };
        let col = grid.column_of(p.azimuth());
        let dist = (elev.as_f64() - cfg.line_center(line)).abs();
        let slot = &mut best[line * cols + col];
        match slot {
            Some((d, _)) if dist >= *d - CENTER_TIE => {}
            _ => *slot = Some((dist, i)),
        }
    }
    let mut out = LineTaggedCloud {
        cloud: PointCloud::new(),
        lines: Vec::new(),
    };
    for (k, slot) in best.iter().enumerate() {
        if let Some((_, i)) = slot {
            out.cloud.push(cloud.points()[*i]);
            out.lines.push(k / cols);
        }
    }
    Ok(out)
}
