mod common;

use common::{kitti_calib, KITTI_CALIB};
use lisim::kitti_io::{parse_calib, parse_labels, parse_velodyne_bin, write_labels, write_velodyne_bin, ObjectLabel, Point, PointCloud};
use lisim::reprojection::project_lidar_to_camera;
use lisim::Error;
use nalgebra::Vector3;
use proptest::prelude::*;

#[test]
fn golden_calibration_record() {
    let c = kitti_calib();
    c.validate().unwrap();
    let p = &c.cam_projection;
    assert_eq!(p[(0, 0)], 721.5377);
    assert_eq!(p[(0, 2)], 609.5593);
    assert_eq!(p[(0, 3)], 44.85728);
    assert_eq!(p[(1, 2)], 172.854);
    assert_eq!(p[(1, 3)], 0.2163791);
    assert_eq!(p[(2, 3)], 0.002745884);
    assert_eq!(c.rectification[(0, 1)], 0.00983776);
    assert_eq!(c.rectification[(2, 2)], 0.9999631);
    assert_eq!(c.lidar_to_cam[(0, 1)], -0.9999714);
    assert_eq!(c.lidar_to_cam[(1, 2)], -0.9998902);
    assert_eq!(c.lidar_to_cam[(2, 3)], -0.2717806);
    let single: lisim::kitti_io::CalibrationSet<f32> = parse_calib(KITTI_CALIB).unwrap();
    assert_eq!(single.cam_projection[(0, 0)], 721.5377f32);
}

/// Numbers after `key:` in the calibration text, read without the library.
fn row_major(key: &str) -> Vec<f64> {
    let line = KITTI_CALIB.lines().find(|l| l.starts_with(&format!("{key}:"))).unwrap();
    line[key.len() + 1..].split_whitespace().map(|v| v.parse().unwrap()).collect()
}

fn mat_vec(m: &[f64], cols: usize, v: &[f64]) -> Vec<f64> {
    m.chunks(cols).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

#[test]
fn golden_projection_matches_hand_chain() {
    let (p2, r0, tr) = (row_major("P2"), row_major("R0_rect"), row_major("Tr_velo_to_cam"));
    let calib = kitti_calib();
    let points = [
        [10.0, 0.0, 0.0],
        [20.0, 2.0, -1.0],
        [5.5, -1.2, -1.5],
        [30.0, 8.0, 1.0],
        [15.0, -6.0, 0.5],
        [7.0, 0.5, -1.7],
        [45.0, 0.0, 2.0],
        [12.0, 3.3, -0.2],
        [60.0, -20.0, -1.0],
        [8.0, 1.0, 1.0],
    ];
    for x in points {
        let velo = mat_vec(&tr, 4, &[x[0], x[1], x[2], 1.0]);
        let rect = mat_vec(&r0, 3, &velo);
        let h = mat_vec(&p2, 4, &[rect[0], rect[1], rect[2], 1.0]);
        let (u, v) = (h[0] / h[2], h[1] / h[2]);
        let (pu, pv, depth) = project_lidar_to_camera(&Vector3::new(x[0], x[1], x[2]), &calib).unwrap();
        assert!((pu - u).abs() < 1e-6 && (pv - v).abs() < 1e-6, "{x:?}: ({pu}, {pv}) vs ({u}, {v})");
        assert!((depth - rect[2]).abs() < 1e-9);
    }
}

#[test]
fn corpus_parses_or_fails_typed() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data");
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let bytes = std::fs::read(&path).unwrap();
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") => {
                let text = String::from_utf8_lossy(&bytes);
                let _: Result<lisim::kitti_io::CalibrationSet<f64>, Error> = parse_calib(&text);
                let _ = parse_labels(&text);
            }
            Some("bin") => {
                let _ = parse_velodyne_bin(&bytes);
            }
            _ => {}
        }
    }
}

fn label_strategy() -> impl Strategy<Value = ObjectLabel> {
    let v = || -100.0f64..100.0;
    (
        prop::sample::select(vec!["Car", "Van", "Pedestrian", "Cyclist", "DontCare"]),
        0.0f64..1.0,
        -1i32..4,
        (v(), [v(), v(), v(), v()], [v(), v(), v()], [v(), v(), v()], v()),
    )
        .prop_map(|(name, truncation, occlusion, (alpha, bbox2d, dimensions, location, rotation_y))| ObjectLabel {
            class_name: name.to_string(),
            truncation,
            occlusion,
            alpha,
            bbox2d,
            dimensions,
            location,
            rotation_y,
        })
}

proptest! {
    #[test]
    fn label_round_trip_two_decimals(labels in prop::collection::vec(label_strategy(), 0..8)) {
        let back = parse_labels(&write_labels(&labels)).unwrap();
        prop_assert_eq!(back.len(), labels.len());
        for (a, b) in labels.iter().zip(&back) {
            prop_assert_eq!(&a.class_name, &b.class_name);
            prop_assert_eq!(a.occlusion, b.occlusion);
            let fa = [a.truncation, a.alpha, a.rotation_y].into_iter().chain(a.bbox2d).chain(a.dimensions).chain(a.location);
            let fb = [b.truncation, b.alpha, b.rotation_y].into_iter().chain(b.bbox2d).chain(b.dimensions).chain(b.location);
            for (x, y) in fa.zip(fb) {
                prop_assert!((x - y).abs() <= 0.005 + 1e-9, "{} vs {}", x, y);
            }
        }
    }

    #[test]
    fn parsers_never_panic(bytes in prop::collection::vec(any::<u8>(), 0..256)) {
        let _ = parse_velodyne_bin(&bytes);
        let text = String::from_utf8_lossy(&bytes);
        let _ = parse_calib::<f64>(&text);
        let _ = parse_labels(&text);
    }

    #[test]
    fn velodyne_random_cloud_round_trip(
        raw in prop::collection::vec((-100.0f32..100.0, -100.0f32..100.0, -10.0f32..10.0, 0.0f32..=1.0), 1000)
    ) {
        let cloud: PointCloud<f32> = raw.iter().map(|&(x, y, z, i)| Point::new(x, y, z, i)).collect();
        let bytes = write_velodyne_bin(&cloud);
        prop_assert_eq!(bytes.len(), 16_000);
        prop_assert_eq!(parse_velodyne_bin(&bytes).unwrap(), cloud);
    }
}
