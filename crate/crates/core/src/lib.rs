pub mod error;
pub mod kitti_io;
pub mod polar_grid;
pub mod raster;
pub mod reprojection;
pub mod resample;
pub mod scalar;
pub mod cloud_synthesis;
pub mod dataset_prep;
pub mod metrics;

pub use error::{Error, Result};

/// Single-precision point cloud, the native KITTI scan format.
pub type Cloud = kitti_io::PointCloud<f32>;
pub type Calibration = kitti_io::CalibrationSet<f64>;
pub type Grid = polar_grid::PolarGridImage<f32>;
