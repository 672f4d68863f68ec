//! Camera ⇄ LiDAR geometry and the camera-to-polar-grid projection used to
//! build network inputs in the LiDAR perspective.

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kitti_io::{images, CalibrationSet, Point};
use crate::polar_grid::{ElevationTable, PolarGridConfig};
use crate::raster::{DepthImage, IdImage, Mask, Raster, RgbImage};
use crate::scalar::Real;

/// Precomputed forward and inverse sensor chain for one calibration.
#[derive(Clone, Debug)]
pub struct ProjectionChain<T: Real> {
    projection: Matrix3<T>,
    projection_inv: Matrix3<T>,
    projection_offset: Vector3<T>,
    lidar_to_rect: Matrix4<T>,
    rect_to_lidar: Matrix4<T>,
}

impl<T: Real> ProjectionChain<T> {
    pub fn new(calib: &CalibrationSet<T>) -> Result<Self> {
        let projection: Matrix3<T> = calib.cam_projection.fixed_view::<3, 3>(0, 0).into_owned();
        let projection_offset: Vector3<T> = calib.cam_projection.column(3).into_owned();
        let projection_inv = projection
            .try_inverse()
            .ok_or_else(|| Error::InvalidCalibration("P2 is singular".into()))?;
        let lidar_to_rect = calib.lidar_to_rect();
        let rect_to_lidar = lidar_to_rect
            .try_inverse()
            .ok_or_else(|| Error::InvalidCalibration("LiDAR to camera chain is singular".into()))?;
        Ok(Self {
            projection,
            projection_inv,
            projection_offset,
            lidar_to_rect,
            rect_to_lidar,
        })
    }

    /// LiDAR point to `(u, v, depth)` where depth is the rectified camera
    /// frame z.
    pub fn project(&self, p: &Vector3<T>) -> Result<(T, T, T)> {
        let rect = self.lidar_to_rect * Vector4::new(p.x, p.y, p.z, T::one());
        let cam = Vector3::new(rect.x, rect.y, rect.z);
        if cam.z <= T::zero() {
            return Err(Error::BehindCamera(cam.z.as_f64()));
        }
        let h = self.projection * cam + self.projection_offset;
        if h.z <= T::zero() {
            return Err(Error::BehindCamera(h.z.as_f64()));
        }
        Ok((h.x / h.z, h.y / h.z, cam.z))
    }

    /// Pixel `(u, v)` at rectified camera depth `depth` back to the LiDAR
    /// frame. Exact inverse of [`Self::project`], including the projection's
    /// translation column.
    pub fn backproject(&self, u: T, v: T, depth: T) -> Result<Vector3<T>> {
        if !(depth > T::zero()) || !depth.is_finite() {
            return Err(Error::InvalidDepth(depth.as_f64()));
        }
        // P·[X;1] = w·(u, v, 1) with X.z = depth
        let ray = self.projection_inv * Vector3::new(u, v, T::one());
        let shift = self.projection_inv * self.projection_offset;
        if ray.z.abs() <= T::default_epsilon() {
            return Err(Error::InvalidCalibration("pixel ray parallel to image plane".into()));
        }
        let w = (depth + shift.z) / ray.z;
        let cam = ray * w - shift;
        let l = self.rect_to_lidar * Vector4::new(cam.x, cam.y, cam.z, T::one());
        Ok(Vector3::new(l.x, l.y, l.z))
    }
}

pub fn backproject_pixel<T: Real>(u: T, v: T, depth: T, calib: &CalibrationSet<T>) -> Result<Vector3<T>> {
    if !(depth > T::zero()) {
        return Err(Error::InvalidDepth(depth.as_f64()));
    }
    ProjectionChain::new(calib)?.backproject(u, v, depth)
}

pub fn project_lidar_to_camera<T: Real>(point: &Vector3<T>, calib: &CalibrationSet<T>) -> Result<(T, T, T)> {
    ProjectionChain::new(calib)?.project(point)
}

/// Camera-perspective layers of one frame. Every layer has the same size.
#[derive(Clone, Debug, PartialEq)]
pub struct CameraFrame<T> {
    pub rgb: RgbImage,
    /// Meters, 0 = invalid.
    pub depth: DepthImage<T>,
    pub semantic: IdImage,
    /// 0 = no instance.
    pub instance: Option<IdImage>,
}

impl<T: Real> CameraFrame<T> {
    pub fn validate(&self) -> Result<()> {
        self.rgb.check_dims(&self.depth, "camera depth")?;
        self.rgb.check_dims(&self.semantic, "camera semantic")?;
        if let Some(inst) = &self.instance {
            self.rgb.check_dims(inst, "camera instance")?;
        }
        if let Some(d) = self.depth.data().iter().find(|d| !(d.is_finite() && **d >= T::zero())) {
            return Err(Error::Shape(format!("invalid depth value {}", d.as_f64())));
        }
        Ok(())
    }
}

/// Camera layers resampled onto the LiDAR crop grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectedFrame<T> {
    pub rgb: RgbImage,
    /// LiDAR range in meters, 0 where nothing projected.
    pub depth: DepthImage<T>,
    pub semantic: IdImage,
    pub instance: IdImage,
    pub edges: Mask,
    /// `true` = occluded, carries the don't-care class once applied.
    pub occlusion_mask: Mask,
    /// Cells that received at least one camera pixel.
    pub coverage: Mask,
}

impl<T: Real> ProjectedFrame<T> {
    pub fn blank(rows: usize, cols: usize) -> Self {
        Self {
            rgb: Raster::filled(cols, rows, [0; 3]),
            depth: Raster::filled(cols, rows, T::zero()),
            semantic: Raster::filled(cols, rows, 0),
            instance: Raster::filled(cols, rows, 0),
            edges: Raster::filled(cols, rows, false),
            occlusion_mask: Raster::filled(cols, rows, false),
            coverage: Raster::filled(cols, rows, false),
        }
    }

    /// `(width, height)`
    pub fn dims(&self) -> (usize, usize) {
        self.rgb.dims()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OcclusionParams {
    /// Range spread (meters) among the contributors of one cell above which
    /// the cell counts as occluded.
    pub gap: f64,
    /// Square dilation radius applied to the occlusion mask, in cells.
    pub dilation_radius: usize,
    pub dont_care_class: u16,
}

impl Default for OcclusionParams {
    fn default() -> Self {
        Self {
            gap: 1.0,
            dilation_radius: 1,
            dont_care_class: 0,
        }
    }
}

#[derive(Clone, Copy)]
struct CellAccum<T> {
    count: usize,
    nearest: T,
    farthest: T,
    source: usize,
}

/// Back-project every valid camera pixel into the LiDAR frame and bin it into
/// the crop window by azimuth column and nearest elevation row. Per cell the
/// nearest contributor supplies all layers (ties keep the lower pixel
/// index); cells whose contributors spread over more than `occlusion_gap`
/// meters of range are marked occluded. Edges are left empty.
pub fn project_camera_to_lidar_grid<T: Real>(
    frame: &CameraFrame<T>,
    calib: &CalibrationSet<T>,
    cfg: &PolarGridConfig,
    elevations: &ElevationTable<T>,
    occlusion_gap: T,
) -> Result<ProjectedFrame<T>> {
    frame.validate()?;
    if elevations.len() != cfg.num_rows {
        return Err(Error::Shape(format!(
            "elevation table has {} rows, sensor has {}",
            elevations.len(),
            cfg.num_rows
        )));
    }
    let chain = ProjectionChain::new(calib)?;
    let (rows, cols) = (cfg.crop_rows, cfg.crop_cols);
    let mut cells: Vec<Option<CellAccum<T>>> = vec![None; rows * cols];
    let width = frame.depth.width();
    let mut any_valid = false;

    for (i, &d) in frame.depth.data().iter().enumerate() {
        if d <= T::zero() {
            continue;
        }
        any_valid = true;
        let (pr, pc) = (i / width, i % width);
        let p = chain.backproject(T::lit(pc as f64), T::lit(pr as f64), d)?;
        let pt = Point::new(p.x, p.y, p.z, T::zero());
        let Some(row) = elevations.row_of(pt.elevation()) else {
            continue;
        };
        let col = cfg.column_of(pt.azimuth());
        let (Some(r), Some(c)) = (
            row.checked_sub(cfg.crop_row_offset).filter(|r| *r < rows),
            col.checked_sub(cfg.crop_col_offset).filter(|c| *c < cols),
        ) else {
            continue;
        };
        let range = pt.range();
        let cell = &mut cells[r * cols + c];
        match cell {
            None => {
                *cell = Some(CellAccum {
                    count: 1,
                    nearest: range,
                    farthest: range,
                    source: i,
                })
            }
            Some(acc) => {
                acc.count += 1;
                if range < acc.nearest {
                    acc.nearest = range;
                    acc.source = i;
                }
                if range > acc.farthest {
                    acc.farthest = range;
                }
            }
        }
    }
    if !any_valid {
        return Err(Error::EmptyProjection);
    }

    let mut out = ProjectedFrame::blank(rows, cols);
    for (k, cell) in cells.iter().enumerate() {
        let Some(acc) = cell else { continue };
        let (r, c) = (k / cols, k % cols);
        let src = acc.source;
        out.rgb[(r, c)] = frame.rgb.data()[src];
        out.semantic[(r, c)] = frame.semantic.data()[src];
        out.instance[(r, c)] = frame.instance.as_ref().map_or(0, |m| m.data()[src]);
        out.depth[(r, c)] = acc.nearest;
        out.coverage[(r, c)] = true;
        out.occlusion_mask[(r, c)] = acc.count >= 2 && acc.farthest - acc.nearest > occlusion_gap;
    }
    Ok(out)
}

/// Overwrite the semantic class of every occluded cell.
pub fn apply_dont_care<T: Real>(projected: &ProjectedFrame<T>, dont_care_class: u16) -> ProjectedFrame<T> {
    let mut out = projected.clone();
    for (s, m) in out.semantic.data_mut().iter_mut().zip(projected.occlusion_mask.data()) {
        if *m {
            *s = dont_care_class;
        }
    }
    out
}

/// Boundary map: a pixel is an edge when a 4-neighbor has a different
/// instance id, or, where both instance ids are 0, a different class.
pub fn edge_map_from_instances(instance: &IdImage, semantic: &IdImage) -> Result<Mask> {
    instance.check_dims(semantic, "edge map inputs")?;
    let (w, h) = instance.dims();
    let differs = |a: (usize, usize), b: (usize, usize)| {
        let (ia, ib) = (instance[a], instance[b]);
        ia != ib || (ia == 0 && semantic[a] != semantic[b])
    };
    Ok(Raster::from_fn(w, h, |r, c| {
        (r > 0 && differs((r, c), (r - 1, c)))
            || (r + 1 < h && differs((r, c), (r + 1, c)))
            || (c > 0 && differs((r, c), (r, c - 1)))
            || (c + 1 < w && differs((r, c), (r, c + 1)))
    }))
}

/// Dilation by a `(2·radius+1)²` square, clipped at the borders.
pub fn dilate(mask: &Mask, radius: usize) -> Mask {
    if radius == 0 {
        return mask.clone();
    }
    let (w, h) = mask.dims();
    // separable: horizontal pass then vertical pass
    let horizontal = Raster::from_fn(w, h, |r, c| {
        (c.saturating_sub(radius)..=(c + radius).min(w - 1)).any(|cc| mask[(r, cc)])
    });
    Raster::from_fn(w, h, |r, c| {
        (r.saturating_sub(radius)..=(r + radius).min(h - 1)).any(|rr| horizontal[(rr, c)])
    })
}

pub fn mask_occlusions_generously<T: Real>(projected: &ProjectedFrame<T>, dilation_radius: usize) -> ProjectedFrame<T> {
    let mut out = projected.clone();
    out.occlusion_mask = dilate(&projected.occlusion_mask, dilation_radius);
    out
}

/// PNG files of a projected frame, keyed by layer name.
pub fn encode_projected_pngs<T: Real>(frame: &ProjectedFrame<T>) -> Result<Vec<(&'static str, Vec<u8>)>> {
    Ok(vec![
        ("rgb", images::encode_rgb_png(&frame.rgb)?),
        ("depth", images::encode_depth_png(&frame.depth, images::DEPTH_CM)?),
        ("semantic", images::encode_id_png8(&frame.semantic)?),
        ("instance", images::encode_id_png16(&frame.instance)?),
        ("edges", images::encode_mask_png(&frame.edges)?),
        ("mask", images::encode_mask_png(&frame.occlusion_mask)?),
        ("coverage", images::encode_mask_png(&frame.coverage)?),
    ])
}
