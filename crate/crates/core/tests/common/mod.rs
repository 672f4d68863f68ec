//! Analytic test scene shared by the integration suites: a ground plane
//! inside a cylindrical wall, observed by a KITTI-calibrated camera and an
//! HDL-64E-like scanner at the origin.
#![allow(dead_code)]

use std::path::Path;

use lisim::dataset_prep::{reconstruct_calibration, VKITTI_PALETTE};
use lisim::kitti_io::vkitti::Intrinsics;
use lisim::kitti_io::{images, parse_calib, write_calib, write_labels, write_velodyne_bin, CalibrationSet, ObjectLabel, Point, PointCloud};
use lisim::polar_grid::{ElevationTable, PolarGridConfig};
use lisim::raster::Raster;
use lisim::reprojection::{CameraFrame, ProjectionChain};
use lisim::scalar::wrap_pi;
use nalgebra::{Matrix4, Vector3};

pub const KITTI_CALIB: &str = include_str!("../data/calib_kitti.txt");
pub const KITTI_WIDTH: usize = 1242;
pub const KITTI_HEIGHT: usize = 375;

pub fn kitti_calib() -> CalibrationSet<f64> {
    parse_calib(KITTI_CALIB).expect("fixture calibration parses")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Surface {
    Ground,
    Wall,
}

#[derive(Clone, Copy, Debug)]
pub struct Scene {
    pub wall_radius: f64,
    pub ground_z: f64,
}

impl Default for Scene {
    fn default() -> Self {
        Self {
            wall_radius: 15.0,
            ground_z: -1.73,
        }
    }
}

impl Scene {
    /// Parameter `t` of the first surface hit along `origin + t·dir`.
    pub fn hit(&self, origin: Vector3<f64>, dir: Vector3<f64>) -> Option<(f64, Surface)> {
        let mut best: Option<(f64, Surface)> = None;
        if dir.z < 0.0 && origin.z > self.ground_z {
            best = Some(((self.ground_z - origin.z) / dir.z, Surface::Ground));
        }
        let a = dir.x * dir.x + dir.y * dir.y;
        if a > 0.0 {
            let b = 2.0 * (origin.x * dir.x + origin.y * dir.y);
            let c = origin.x * origin.x + origin.y * origin.y - self.wall_radius * self.wall_radius;
            let disc = b * b - 4.0 * a * c;
            if disc >= 0.0 {
                let t = (-b + disc.sqrt()) / (2.0 * a);
                if t > 0.0 && best.is_none_or(|(g, _)| t < g) {
                    best = Some((t, Surface::Wall));
                }
            }
        }
        best
    }

    pub fn intensity(&self, p: &Vector3<f64>, surface: Surface) -> f64 {
        match surface {
            Surface::Ground => 0.25,
            Surface::Wall => 0.5 + 0.25 * (3.0 * p.y.atan2(p.x)).sin(),
        }
    }
}

fn direction(elevation: f64, azimuth: f64) -> Vector3<f64> {
    Vector3::new(
        elevation.cos() * azimuth.cos(),
        elevation.cos() * azimuth.sin(),
        elevation.sin(),
    )
}

/// One return per (laser, panorama column), emitted in sensor order: laser
/// by laser from the top, each sweep running from +π down to −π.
pub fn scan(scene: &Scene, cfg: &PolarGridConfig) -> PointCloud<f32> {
    let elevations = ElevationTable::<f64>::hdl64e(cfg.num_rows);
    let mut azimuths: Vec<f64> = (0..cfg.full_cols)
        .map(|j| wrap_pi(cfg.column_center::<f64>(j)))
        .collect();
    azimuths.sort_by(|a, b| b.total_cmp(a));
    let mut cloud = PointCloud::with_capacity(cfg.num_rows * cfg.full_cols);
    for &e in elevations.angles() {
        for &az in &azimuths {
            let d = direction(e, az);
            let (t, s) = scene.hit(Vector3::zeros(), d).expect("closed scene");
            let p = d * t;
            cloud.push(Point::new(p.x as f32, p.y as f32, p.z as f32, scene.intensity(&p, s) as f32));
        }
    }
    cloud
}

/// Instance id for a wall point; two "cars" ahead of the sensor.
fn instance_at(p: &Vector3<f64>) -> u16 {
    let az = p.y.atan2(p.x);
    if (-0.15..0.15).contains(&az) {
        1
    } else if (0.3..0.45).contains(&az) {
        2
    } else {
        0
    }
}

pub const KITTI_ROAD: u16 = 7;
pub const KITTI_BUILDING: u16 = 11;
pub const KITTI_CAR: u16 = 26;

/// Dense camera layers rendered by ray casting every pixel.
pub fn camera_frame(scene: &Scene, calib: &CalibrationSet<f64>, width: usize, height: usize) -> CameraFrame<f64> {
    let chain = ProjectionChain::new(calib).expect("valid calibration");
    let mut depth = Raster::filled(width, height, 0.0);
    let mut semantic = Raster::filled(width, height, 0u16);
    let mut instance = Raster::filled(width, height, 0u16);
    let mut rgb = Raster::filled(width, height, [0u8; 3]);
    for r in 0..height {
        for c in 0..width {
            let (u, v) = (c as f64, r as f64);
            let p1 = chain.backproject(u, v, 1.0).unwrap();
            let p2 = chain.backproject(u, v, 2.0).unwrap();
            let g = p2 - p1;
            let Some((d, s)) = scene.hit(p1 - g, g) else { continue };
            let p = p1 - g + g * d;
            depth[(r, c)] = d;
            let (class, inst) = match s {
                Surface::Ground => (KITTI_ROAD, 0),
                Surface::Wall => match instance_at(&p) {
                    0 => (KITTI_BUILDING, 0),
                    i => (KITTI_CAR, i),
                },
            };
            semantic[(r, c)] = class;
            instance[(r, c)] = inst;
            let shade = (255.0 * scene.intensity(&p, s)) as u8;
            rgb[(r, c)] = [shade, (class * 9) as u8, (inst * 80) as u8];
        }
    }
    CameraFrame {
        rgb,
        depth,
        semantic,
        instance: Some(instance),
    }
}

pub fn car_label(distance: f64) -> ObjectLabel {
    ObjectLabel {
        class_name: "Car".into(),
        truncation: 0.0,
        occlusion: 0,
        alpha: -1.57,
        bbox2d: [560.0, 150.0, 680.0, 220.0],
        dimensions: [1.5, 1.6, 4.0],
        location: [0.0, 1.6, distance],
        rotation_y: -1.57,
    }
}

fn put(root: &Path, rel: &str, bytes: &[u8]) {
    let path = root.join(rel);
    std::fs::create_dir_all(path.parent().unwrap()).unwrap();
    std::fs::write(path, bytes).unwrap();
}

/// KITTI-style recording: velodyne/, calib/, image_2/, depth/, semantic/,
/// instance/, label_2/. Image size is configurable to keep tests quick.
pub fn write_real_dataset(root: &Path, ids: &[&str], width: usize, height: usize) {
    let scene = Scene::default();
    let calib = kitti_calib();
    let cloud = scan(&scene, &PolarGridConfig::default());
    let frame = camera_frame(&scene, &calib, width, height);
    for id in ids {
        put(root, &format!("velodyne/{id}.bin"), &write_velodyne_bin(&cloud));
        put(root, &format!("calib/{id}.txt"), write_calib(&calib).as_bytes());
        put(root, &format!("image_2/{id}.png"), &images::encode_rgb_png(&frame.rgb).unwrap());
        put(root, &format!("depth/{id}.png"), &images::encode_depth_png(&frame.depth, 1.0 / 256.0).unwrap());
        put(root, &format!("semantic/{id}.png"), &images::encode_id_png8(&frame.semantic).unwrap());
        put(root, &format!("instance/{id}.png"), &images::encode_id_png16(frame.instance.as_ref().unwrap()).unwrap());
        put(root, &format!("label_2/{id}.txt"), write_labels(&[car_label(15.0)]).as_bytes());
    }
}

pub const VKITTI_INTRINSICS: Intrinsics = Intrinsics {
    fx: 725.0087,
    fy: 725.0087,
    cx: 620.5,
    cy: 187.0,
};

pub fn vkitti_color(name: &str) -> [u8; 3] {
    VKITTI_PALETTE.iter().find(|(n, _)| *n == name).expect("palette entry").1
}

/// Calibration the synthetic converter reconstructs for the default LiDAR
/// offset.
pub fn vkitti_calib(lidar_offset: [f64; 3]) -> CalibrationSet<f64> {
    let mut pose = Matrix4::identity();
    for k in 0..3 {
        pose[(k, 3)] = lidar_offset[k];
    }
    reconstruct_calibration(&VKITTI_INTRINSICS, &Matrix4::identity(), &pose).unwrap()
}

/// VKITTI-style scene: rgb/, depth/ (centimeters), classSegmentation/
/// (palette colors), instanceSegmentation/ and the scene tables. Frame
/// `objects[i]` lists the camera-space distances of that frame's cars.
pub fn write_synthetic_scene(root: &Path, objects: &[Vec<f64>], width: usize, height: usize, lidar_offset: [f64; 3]) {
    let scene = Scene::default();
    let calib = vkitti_calib(lidar_offset);
    let frame = camera_frame(&scene, &calib, width, height);
    let colors = frame.semantic.map(|c| match *c {
        KITTI_ROAD => vkitti_color("Road"),
        KITTI_BUILDING => vkitti_color("Building"),
        _ => vkitti_color("Car"),
    });
    let mut intrinsic = String::from("frame cameraID K[0,0] K[1,1] K[0,2] K[1,2]\n");
    let mut pose = String::from(
        "frame cameraID trackID alpha width height length world_space_X world_space_Y world_space_Z \
         rotation_world_space_y rotation_world_space_x rotation_world_space_z camera_space_X camera_space_Y \
         camera_space_Z rotation_camera_space_y rotation_camera_space_x rotation_camera_space_z isMoving\n",
    );
    let mut bbox = String::from(
        "frame cameraID trackID left right top bottom number_pixels truncation_ratio occupancy_ratio isMoving\n",
    );
    let info = "trackID label model color\n0 Car Sedan Red\n1 Car Hatchback Blue\n";
    for (f, dists) in objects.iter().enumerate() {
        let id = format!("{f:05}");
        put(root, &format!("rgb/{id}.png"), &images::encode_rgb_png(&frame.rgb).unwrap());
        put(root, &format!("depth/{id}.png"), &images::encode_depth_png(&frame.depth, 0.01).unwrap());
        put(root, &format!("classSegmentation/{id}.png"), &images::encode_rgb_png(&colors).unwrap());
        put(
            root,
            &format!("instanceSegmentation/{id}.png"),
            &images::encode_id_png8(frame.instance.as_ref().unwrap()).unwrap(),
        );
        let k = VKITTI_INTRINSICS;
        for cam in 0..2 {
            intrinsic.push_str(&format!("{f} {cam} {} {} {} {}\n", k.fx, k.fy, k.cx, k.cy));
        }
        for (track, d) in dists.iter().enumerate() {
            pose.push_str(&format!(
                "{f} 0 {track} -1.5 1.8 1.5 4.2 0 0 0 0 0 0 {} 1.6 {d} -1.4 0 0 False\n",
                track as f64 * 2.0
            ));
            bbox.push_str(&format!("{f} 0 {track} 600 700 170 230 4000 0 0.85 False\n"));
        }
    }
    put(root, "intrinsic.txt", intrinsic.as_bytes());
    put(root, "pose.txt", pose.as_bytes());
    put(root, "bbox.txt", bbox.as_bytes());
    put(root, "info.txt", info.as_bytes());
}
