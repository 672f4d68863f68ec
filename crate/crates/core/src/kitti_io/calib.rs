//! KITTI calibration text files (`KEY: v1 v2 ...` per line).

use std::collections::HashMap;
use std::fmt::Write as _;

use nalgebra::{Matrix3, Matrix3x4, Matrix4};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Sensor chain from the LiDAR frame to camera pixels.
#[derive(Clone, Debug, PartialEq)]
pub struct CalibrationSet<T: Real> {
    /// Rectified camera projection, KITTI `P2`.
    pub cam_projection: Matrix3x4<T>,
    /// KITTI `R0_rect`.
    pub rectification: Matrix3<T>,
    /// Rigid LiDAR to camera transform, KITTI `Tr_velo_to_cam`.
    pub lidar_to_cam: Matrix3x4<T>,
}

/// LiDAR axes (x forward, y left, z up) to camera axes (x right, y down,
/// z forward).
pub fn lidar_to_camera_axes<T: Real>() -> Matrix3<T> {
    let (o, z) = (T::one(), T::zero());
    Matrix3::new(z, -o, z, z, z, -o, o, z, z)
}

impl<T: Real> CalibrationSet<T> {
    /// Unit focal length, principal point at the origin, identity
    /// rectification and a pure axis permutation between LiDAR and camera.
    pub fn identity_chain() -> Self {
        let mut lidar_to_cam = Matrix3x4::zeros();
        lidar_to_cam
            .fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&lidar_to_camera_axes::<T>());
        Self {
            cam_projection: Matrix3x4::identity(),
            rectification: Matrix3::identity(),
            lidar_to_cam,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let tol = T::lit(1e-4);
        let rtr = self.rectification.transpose() * self.rectification;
        if (rtr - Matrix3::identity()).amax() > tol {
            return Err(Error::InvalidCalibration(
                "R0_rect is not orthonormal".into(),
            ));
        }
        let p = &self.cam_projection;
        if !(p[(0, 0)] > T::zero() && p[(1, 1)] > T::zero()) {
            return Err(Error::InvalidCalibration(
                "P2 focal entries must be positive".into(),
            ));
        }
        if self.lidar_to_cam.iter().chain(p.iter()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidCalibration("non-finite entry".into()));
        }
        Ok(())
    }

    /// Homogeneous transform from the LiDAR frame to the rectified camera frame.
    pub fn lidar_to_rect(&self) -> Matrix4<T> {
        let mut rect = Matrix4::identity();
        rect.fixed_view_mut::<3, 3>(0, 0)
            .copy_from(&self.rectification);
        let mut tr = Matrix4::identity();
        tr.fixed_view_mut::<3, 4>(0, 0).copy_from(&self.lidar_to_cam);
        rect * tr
    }

    pub fn cast<U: Real>(&self) -> CalibrationSet<U> {
        CalibrationSet {
            cam_projection: self.cam_projection.map(|v| U::lit(v.as_f64())),
            rectification: self.rectification.map(|v| U::lit(v.as_f64())),
            lidar_to_cam: self.lidar_to_cam.map(|v| U::lit(v.as_f64())),
        }
    }
}

fn fetch<T: Real>(fields: &HashMap<&str, Vec<&str>>, key: &str, n: usize) -> Result<Vec<T>> {
    let vals = fields
        .get(key)
        .ok_or_else(|| Error::MissingField(key.to_string()))?;
    if vals.len() != n {
        return Err(Error::Arity {
            key: key.to_string(),
            expected: n,
            found: vals.len(),
        });
    }
    vals.iter()
        .map(|s| {
            s.parse::<f64>().map(T::lit).map_err(|e| Error::MalformedFile(format!(
                "{key}: cannot parse `{s}`: {e}"
            )))
        })
        .collect()
}

/// Parse the `P2`, `R0_rect` and `Tr_velo_to_cam` entries; other keys are
/// ignored.
pub fn parse_calib<T: Real>(text: &str) -> Result<CalibrationSet<T>> {
    let mut fields: HashMap<&str, Vec<&str>> = HashMap::new();
    for line in text.lines() {
        let Some((key, rest)) = line.split_once(':') else {
            continue;
        };
        fields.insert(key.trim(), rest.split_whitespace().collect());
    }
    let p2 = fetch::<T>(&fields, "P2", 12)?;
    let r0 = fetch::<T>(&fields, "R0_rect", 9)?;
    let tr = fetch::<T>(&fields, "Tr_velo_to_cam", 12)?;
    Ok(CalibrationSet {
        cam_projection: Matrix3x4::from_row_slice(&p2),
        rectification: Matrix3::from_row_slice(&r0),
        lidar_to_cam: Matrix3x4::from_row_slice(&tr),
    })
}

fn push_row_major<T: Real>(out: &mut String, key: &str, rows: usize, cols: usize, at: impl Fn(usize, usize) -> T) {
    out.push_str(key);
    out.push(':');
    for r in 0..rows {
        for c in 0..cols {
            let _ = write!(out, " {:.12e}", at(r, c).as_f64());
        }
    }
    out.push('\n');
}

/// Write a complete KITTI object-detection calibration file. `P0`..`P3` all
/// carry the same projection and `Tr_imu_to_velo` is the identity, so that
/// tools expecting the full key set can read it.
pub fn write_calib<T: Real>(calib: &CalibrationSet<T>) -> String {
    let mut s = String::new();
    let p = &calib.cam_projection;
    for key in ["P0", "P1", "P2", "P3"] {
        push_row_major(&mut s, key, 3, 4, |r, c| p[(r, c)]);
    }
    push_row_major(&mut s, "R0_rect", 3, 3, |r, c| calib.rectification[(r, c)]);
    push_row_major(&mut s, "Tr_velo_to_cam", 3, 4, |r, c| calib.lidar_to_cam[(r, c)]);
    let imu = Matrix3x4::<T>::identity();
    push_row_major(&mut s, "Tr_imu_to_velo", 3, 4, |r, c| imu[(r, c)]);
    s
}
