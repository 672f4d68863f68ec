//! Readers and writers for the KITTI and VKITTI file formats.

mod calib;
mod cloud;
pub mod images;
mod labels;
mod velodyne;
pub mod vkitti;

pub use calib::{lidar_to_camera_axes, parse_calib, write_calib, CalibrationSet};
pub use cloud::{Point, PointCloud};
pub use images::{load_depth_png, load_depth_png_scaled};
pub use labels::{parse_labels, write_labels, ObjectLabel};
pub use velodyne::{
    decode_velodyne_bin, parse_velodyne_bin, read_velodyne_file, write_ply_ascii, write_velodyne_bin,
    write_velodyne_file, DecodedScan,
};
