//! KITTI Velodyne scans: consecutive little-endian `f32` quadruples
//! `(x, y, z, intensity)`, 16 bytes per point, no header.

use std::fs;
use std::path::Path;

use super::cloud::{Point, PointCloud};
use crate::error::{Error, Result};

const RECORD_BYTES: usize = 16;

/// Result of decoding a scan, with the number of intensities that were
/// outside `[0, 1]` and got clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodedScan {
    pub cloud: PointCloud<f32>,
    pub clamped_intensities: usize,
}

pub fn parse_velodyne_bin(bytes: &[u8]) -> Result<PointCloud<f32>> {
    decode_velodyne_bin(bytes).map(|d| d.cloud)
}

pub fn decode_velodyne_bin(bytes: &[u8]) -> Result<DecodedScan> {
    if bytes.len() % RECORD_BYTES != 0 {
        return Err(Error::MalformedFile(format!(
            "velodyne scan length {} is not a multiple of {RECORD_BYTES}",
            bytes.len()
        )));
    }
    let mut cloud = PointCloud::with_capacity(bytes.len() / RECORD_BYTES);
    let mut clamped = 0;
    for (index, rec) in bytes.chunks_exact(RECORD_BYTES).enumerate() {
        let f = |i: usize| f32::from_le_bytes([rec[i], rec[i + 1], rec[i + 2], rec[i + 3]]);
        let (x, y, z, mut intensity) = (f(0), f(4), f(8), f(12));
        if !(x.is_finite() && y.is_finite() && z.is_finite()) {
            return Err(Error::MalformedRecord {
                index,
                reason: format!("non-finite coordinate ({x}, {y}, {z})"),
            });
        }
        if intensity.is_nan() {
            return Err(Error::MalformedRecord {
                index,
                reason: "NaN intensity".into(),
            });
        }
        if !(0.0..=1.0).contains(&intensity) {
            intensity = intensity.clamp(0.0, 1.0);
            clamped += 1;
        }
        cloud.push(Point::new(x, y, z, intensity));
    }
    if clamped > 0 {
        log::warn!("clamped {clamped} intensities into [0, 1]");
    }
    Ok(DecodedScan {
        cloud,
        clamped_intensities: clamped,
    })
}

pub fn write_velodyne_bin(cloud: &PointCloud<f32>) -> Vec<u8> {
    let mut out = Vec::with_capacity(cloud.len() * RECORD_BYTES);
    for p in cloud {
        for v in [p.x, p.y, p.z, p.intensity] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

pub fn read_velodyne_file(path: impl AsRef<Path>) -> Result<PointCloud<f32>> {
    parse_velodyne_bin(&fs::read(path)?)
}

pub fn write_velodyne_file(path: impl AsRef<Path>, cloud: &PointCloud<f32>) -> Result<()> {
    fs::write(path, write_velodyne_bin(cloud))?;
    Ok(())
}

/// Plain-text export, one `x y z intensity` line per point, for viewers.
pub fn write_ply_ascii(cloud: &PointCloud<f32>) -> String {
    let mut s = format!(
        "ply\nformat ascii 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nproperty float intensity\nend_header\n",
        cloud.len()
    );
    for p in cloud {
        s.push_str(&format!("{} {} {} {}\n", p.x, p.y, p.z, p.intensity));
    }
    s
}
