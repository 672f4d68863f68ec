//! Scan-line recovery and polar-grid (range image) rasterization.
//!
//! A grid cell is addressed by `(row, col)`: the row is the laser that
//! produced the return, the column the quantized azimuth. Column 0 starts at
//! `azimuth_zero` and columns advance clockwise (decreasing azimuth), so with
//! the default configuration the camera field of view is the contiguous
//! window of the first `crop_cols` columns.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kitti_io::{images, Point, PointCloud};
use crate::raster::{IntensityImage, Mask, Raster};
use crate::scalar::{wrap_two_pi, Real};

/// HDL-64E nominal vertical field of view, degrees.
pub const HDL64E_ELEVATION_TOP_DEG: f64 = 2.0;
pub const HDL64E_ELEVATION_BOTTOM_DEG: f64 = -24.8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolarGridConfig {
    /// Laser count.
    pub num_rows: usize,
    /// Columns spanning the full 360° panorama.
    pub full_cols: usize,
    pub crop_cols: usize,
    pub crop_rows: usize,
    pub crop_col_offset: usize,
    pub crop_row_offset: usize,
    /// Azimuth (radians) of the left edge of column 0.
    pub azimuth_zero: f64,
}

impl Default for PolarGridConfig {
    fn default() -> Self {
        let full_cols = 1674;
        let crop_cols = 372;
        Self {
            num_rows: 64,
            full_cols,
            crop_cols,
            crop_rows: 44,
            crop_col_offset: 0,
            crop_row_offset: 0,
            // center the crop window on the forward direction
            azimuth_zero: std::f64::consts::PI * crop_cols as f64 / full_cols as f64,
        }
    }
}

impl PolarGridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_rows == 0 || self.full_cols == 0 {
            return Err(Error::Config("grid needs at least one row and one column".into()));
        }
        if self.crop_rows == 0 || self.crop_cols == 0 {
            return Err(Error::Config("crop window is empty".into()));
        }
        if self.crop_cols > self.full_cols || self.crop_rows > self.num_rows {
            return Err(Error::Config(format!(
                "crop {}x{} larger than grid {}x{}",
                self.crop_rows, self.crop_cols, self.num_rows, self.full_cols
            )));
        }
        if !self.azimuth_zero.is_finite() {
            return Err(Error::Config("azimuth_zero must be finite".into()));
        }
        Ok(())
    }

    /// Panorama column of an azimuth.
    pub fn column_of<T: Real>(&self, azimuth: T) -> usize {
        let offset = wrap_two_pi(T::lit(self.azimuth_zero) - azimuth);
        let col = (offset / T::two_pi() * T::lit(self.full_cols as f64)).floor_i64();
        (col.max(0) as usize).min(self.full_cols - 1)
    }

    /// Azimuth at the center of panorama column `col`.
    pub fn column_center<T: Real>(&self, col: usize) -> T {
        let frac = (col as f64 + 0.5) / self.full_cols as f64;
        T::lit(self.azimuth_zero - frac * std::f64::consts::TAU)
    }

    /// Angular width of one column, radians.
    pub fn column_width(&self) -> f64 {
        std::f64::consts::TAU / self.full_cols as f64
    }
}

/// Per-row elevation angles (radians), row 0 first.
#[derive(Clone, Debug, PartialEq)]
pub struct ElevationTable<T> {
    angles: Vec<T>,
}

impl<T: Real> ElevationTable<T> {
    pub fn new(angles: Vec<T>) -> Self {
        Self { angles }
    }

    /// Linear spread from `top_deg` (row 0) to `bottom_deg` (last row).
    pub fn linear(top_deg: f64, bottom_deg: f64, rows: usize) -> Self {
        let step = if rows > 1 {
            (bottom_deg - top_deg) / (rows - 1) as f64
        } else {
            0.0
        };
        Self {
            angles: (0..rows)
                .map(|r| T::lit((top_deg + step * r as f64).to_radians()))
                .collect(),
        }
    }

    /// HDL-64E nominal table with `rows` entries.
    pub fn hdl64e(rows: usize) -> Self {
        Self::linear(HDL64E_ELEVATION_TOP_DEG, HDL64E_ELEVATION_BOTTOM_DEG, rows)
    }

    pub fn angles(&self) -> &[T] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Sub-table of `n` rows starting at `offset`.
    pub fn window(&self, offset: usize, n: usize) -> Result<Self> {
        self.angles
            .get(offset..offset + n)
            .map(|a| Self { angles: a.to_vec() })
            .ok_or_else(|| Error::Bounds(format!("rows {offset}..{} of {}", offset + n, self.len())))
    }

    /// Row whose elevation is nearest to `elevation`, or `None` when the
    /// angle lies more than half a row spacing beyond the first or last row.
    pub fn row_of(&self, elevation: T) -> Option<usize> {
        let n = self.angles.len();
        if n == 0 {
            return None;
        }
        let mut best = 0;
        let mut best_d = (self.angles[0] - elevation).abs();
        for (i, a) in self.angles.iter().enumerate().skip(1) {
            let d = (*a - elevation).abs();
            if d < best_d {
                best = i;
                best_d = d;
            }
        }
        let half_spacing = |i: usize, j: usize| (self.angles[i] - self.angles[j]).abs() * T::lit(0.5);
        let limit = if n == 1 {
            T::zero()
        } else if best == 0 {
            half_spacing(0, 1)
        } else if best == n - 1 {
            half_spacing(n - 1, n - 2)
        } else {
            // interior rows are always nearest to something
            return Some(best);
        };
        (best_d <= limit).then_some(best)
    }
}

/// Laser row and azimuth of every point, in cloud order.
#[derive(Clone, Debug, PartialEq)]
pub struct RowAssignment<T> {
    pub rows: Vec<usize>,
    pub azimuths: Vec<T>,
}

impl<T: Real> RowAssignment<T> {
    /// Assignment with known rows; azimuths are taken from the points.
    pub fn from_rows(cloud: &PointCloud<T>, rows: Vec<usize>) -> Result<Self> {
        if rows.len() != cloud.len() {
            return Err(Error::Shape(format!(
                "{} rows for {} points",
                rows.len(),
                cloud.len()
            )));
        }
        Ok(Self {
            rows,
            azimuths: cloud.iter().map(Point::azimuth).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of scan lines seen.
    pub fn line_count(&self) -> usize {
        self.rows.last().map_or(0, |r| r + 1)
    }
}

/// Recover scan lines from the native point order: a new line starts
/// whenever the azimuth of consecutive points jumps by more than π, which
/// happens exactly once per sensor revolution.
pub fn assign_rows<T: Real>(cloud: &PointCloud<T>, cfg: &PolarGridConfig) -> Result<RowAssignment<T>> {
    let mut rows = Vec::with_capacity(cloud.len());
    let mut azimuths = Vec::with_capacity(cloud.len());
    let mut row = 0usize;
    let mut prev: Option<T> = None;
    for p in cloud {
        let az = p.azimuth();
        if let Some(prev) = prev {
            if (az - prev).abs() > T::pi() {
                row += 1;
            }
        }
        prev = Some(az);
        rows.push(row);
        azimuths.push(az);
    }
    let lines = rows.last().map_or(0, |r| r + 1);
    if lines > cfg.num_rows {
        return Err(Error::RowOverflow {
            rows: lines,
            max: cfg.num_rows,
        });
    }
    Ok(RowAssignment { rows, azimuths })
}

/// Dense polar-grid image. `row_offset`/`col_offset` locate this image
/// inside the full panorama (both zero unless cropped).
#[derive(Clone, Debug, PartialEq)]
pub struct PolarGridImage<T> {
    pub intensity: IntensityImage<T>,
    /// Range in meters.
    pub depth: Raster<T>,
    pub valid: Mask,
    pub row_offset: usize,
    pub col_offset: usize,
}

impl<T: Real> PolarGridImage<T> {
    /// All-invalid image.
    pub fn empty(rows: usize, cols: usize) -> Self {
        Self {
            intensity: Raster::filled(cols, rows, T::zero()),
            depth: Raster::filled(cols, rows, T::zero()),
            valid: Raster::filled(cols, rows, false),
            row_offset: 0,
            col_offset: 0,
        }
    }

    pub fn rows(&self) -> usize {
        self.valid.height()
    }

    pub fn cols(&self) -> usize {
        self.valid.width()
    }

    pub fn set(&mut self, row: usize, col: usize, intensity: T, depth: T) {
        self.intensity[(row, col)] = intensity;
        self.depth[(row, col)] = depth;
        self.valid[(row, col)] = true;
    }

    pub fn clear(&mut self, row: usize, col: usize) {
        self.intensity[(row, col)] = T::zero();
        self.depth[(row, col)] = T::zero();
        self.valid[(row, col)] = false;
    }

    pub fn valid_count(&self) -> usize {
        self.valid.data().iter().filter(|v| **v).count()
    }

    /// Valid cells in row-major order.
    pub fn valid_cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.valid.enumerate().filter(|(_, _, v)| **v).map(|(r, c, _)| (r, c))
    }

    /// Check channel shapes and the invalid-cell invariant.
    pub fn validate(&self) -> Result<()> {
        self.valid.check_dims(&self.intensity, "intensity channel")?;
        self.valid.check_dims(&self.depth, "depth channel")?;
        for (i, v) in self.valid.data().iter().enumerate() {
            let (inten, d) = (self.intensity.data()[i], self.depth.data()[i]);
            if *v {
                if inten < T::zero() || inten > T::one() {
                    return Err(Error::Shape(format!("cell {i}: intensity out of [0, 1]")));
                }
            } else if inten != T::zero() || d != T::zero() {
                return Err(Error::Shape(format!("cell {i}: invalid cell carries data")));
            }
        }
        Ok(())
    }
}

/// Rasterize a scan into the full panorama. When two points land in the
/// same cell the nearer one wins; equal ranges keep the earlier point.
pub fn rasterize_polar<T: Real>(
    cloud: &PointCloud<T>,
    rows: &RowAssignment<T>,
    cfg: &PolarGridConfig,
) -> Result<PolarGridImage<T>> {
    if rows.len() != cloud.len() || rows.azimuths.len() != cloud.len() {
        return Err(Error::Shape(format!(
            "row assignment covers {} points, cloud has {}",
            rows.len(),
            cloud.len()
        )));
    }
    let mut grid = PolarGridImage::empty(cfg.num_rows, cfg.full_cols);
    for ((p, &row), &az) in cloud.iter().zip(&rows.rows).zip(&rows.azimuths) {
        if row >= cfg.num_rows {
            return Err(Error::RowOverflow {
                rows: row + 1,
                max: cfg.num_rows,
            });
        }
        let col = cfg.column_of(az);
        let range = p.range();
        if !grid.valid[(row, col)] || range < grid.depth[(row, col)] {
            grid.set(row, col, p.intensity, range);
        }
    }
    Ok(grid)
}

fn window<P: Clone>(src: &Raster<P>, row0: usize, col0: usize, rows: usize, cols: usize) -> Raster<P> {
    Raster::from_fn(cols, rows, |r, c| src[(row0 + r, col0 + c)].clone())
}

/// Cut the camera-overlap window out of a full panorama grid.
pub fn crop_to_camera_overlap<T: Real>(grid: &PolarGridImage<T>, cfg: &PolarGridConfig) -> Result<PolarGridImage<T>> {
    let (r0, c0) = (cfg.crop_row_offset, cfg.crop_col_offset);
    if r0 + cfg.crop_rows > grid.rows() || c0 + cfg.crop_cols > grid.cols() {
        return Err(Error::Bounds(format!(
            "crop {}x{} at ({r0}, {c0}) exceeds grid {}x{}",
            cfg.crop_rows,
            cfg.crop_cols,
            grid.rows(),
            grid.cols()
        )));
    }
    Ok(PolarGridImage {
        intensity: window(&grid.intensity, r0, c0, cfg.crop_rows, cfg.crop_cols),
        depth: window(&grid.depth, r0, c0, cfg.crop_rows, cfg.crop_cols),
        valid: window(&grid.valid, r0, c0, cfg.crop_rows, cfg.crop_cols),
        row_offset: grid.row_offset + r0,
        col_offset: grid.col_offset + c0,
    })
}

/// Inverse of cropping: place a cropped grid back into an otherwise invalid
/// full panorama.
pub fn embed_in_panorama<T: Real>(grid: &PolarGridImage<T>, cfg: &PolarGridConfig) -> Result<PolarGridImage<T>> {
    if grid.row_offset + grid.rows() > cfg.num_rows || grid.col_offset + grid.cols() > cfg.full_cols {
        return Err(Error::Bounds(format!(
            "{}x{} grid at ({}, {}) does not fit the {}x{} panorama",
            grid.rows(),
            grid.cols(),
            grid.row_offset,
            grid.col_offset,
            cfg.num_rows,
            cfg.full_cols
        )));
    }
    let mut full = PolarGridImage::empty(cfg.num_rows, cfg.full_cols);
    for (r, c) in grid.valid_cells() {
        full.set(
            grid.row_offset + r,
            grid.col_offset + c,
            grid.intensity[(r, c)],
            grid.depth[(r, c)],
        );
    }
    Ok(full)
}

/// Turn every valid cell back into a point at the cell-center azimuth and
/// the row's elevation. `elevations` has one entry per grid row. Points are
/// emitted in row-major cell order.
pub fn grid_to_cloud<T: Real>(
    grid: &PolarGridImage<T>,
    cfg: &PolarGridConfig,
    elevations: &[T],
) -> Result<PointCloud<T>> {
    if elevations.len() != grid.rows() {
        return Err(Error::Shape(format!(
            "elevation table has {} rows, grid has {}",
            elevations.len(),
            grid.rows()
        )));
    }
    Ok(grid
        .valid_cells()
        .map(|(r, c)| {
            let phi: T = cfg.column_center(grid.col_offset + c);
            let theta = elevations[r];
            let range = grid.depth[(r, c)];
            let planar = range * theta.cos();
            Point::new(planar * phi.cos(), planar * phi.sin(), range * theta.sin(), grid.intensity[(r, c)])
        })
        .collect())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DenoiseMethod {
    #[default]
    None,
    /// Median of the valid intensities in the 3×3 neighborhood.
    Median3,
}

fn median<T: Real>(values: &mut [T]) -> T {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite intensities"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) * T::lit(0.5)
    }
}

/// Intensity denoising. The validity mask and depth are never changed; an
/// even number of valid neighbors uses the mean of the two middle values.
pub fn denoise_grid<T: Real>(grid: &PolarGridImage<T>, method: DenoiseMethod) -> PolarGridImage<T> {
    match method {
        DenoiseMethod::None => grid.clone(),
        DenoiseMethod::Median3 => {
            let mut out = grid.clone();
            let (rows, cols) = (grid.rows(), grid.cols());
            let mut window = Vec::with_capacity(9);
            for (r, c) in grid.valid_cells() {
                window.clear();
                for rr in r.saturating_sub(1)..=(r + 1).min(rows - 1) {
                    for cc in c.saturating_sub(1)..=(c + 1).min(cols - 1) {
                        if grid.valid[(rr, cc)] {
                            window.push(grid.intensity[(rr, cc)]);
                        }
                    }
                }
                out.intensity[(r, c)] = median(&mut window);
            }
            out
        }
    }
}

/// PNG encoding of a grid: 16-bit intensity (×65535), 8-bit validity and
/// 16-bit depth in centimeters.
#[derive(Clone, Debug)]
pub struct GridPngs {
    pub intensity: Vec<u8>,
    pub valid: Vec<u8>,
    pub depth: Vec<u8>,
}

pub fn encode_grid_pngs<T: Real>(grid: &PolarGridImage<T>) -> Result<GridPngs> {
    Ok(GridPngs {
        intensity: images::encode_intensity_png(&grid.intensity)?,
        valid: images::encode_mask_png(&grid.valid)?,
        depth: images::encode_depth_png(&grid.depth, images::DEPTH_CM)?,
    })
}

pub fn decode_grid_pngs<T: Real>(pngs: &GridPngs) -> Result<PolarGridImage<T>> {
    let valid = images::load_mask_png(&pngs.valid)?;
    let mut intensity: IntensityImage<T> = images::load_intensity_png(&pngs.intensity)?;
    let mut depth: Raster<T> = images::load_depth_png(&pngs.depth)?;
    valid.check_dims(&intensity, "intensity PNG")?;
    valid.check_dims(&depth, "depth PNG")?;
    for (i, v) in valid.data().iter().enumerate() {
        if !v {
            intensity.data_mut()[i] = T::zero();
            depth.data_mut()[i] = T::zero();
        }
    }
    Ok(PolarGridImage {
        intensity,
        depth,
        valid,
        row_offset: 0,
        col_offset: 0,
    })
}
