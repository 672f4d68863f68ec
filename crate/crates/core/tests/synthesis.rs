mod common;

use common::{camera_frame, kitti_calib, Scene};
use lisim::cloud_synthesis::{
    assign_intensity, depth_to_cloud, drop_zero_intensity, limit_range, sparsify_to_lines, DropConfig,
    IntensityPlacement, SparsifyConfig,
};
use lisim::kitti_io::{Point, PointCloud};
use lisim::polar_grid::PolarGridConfig;
use lisim::raster::Raster;
use lisim::reprojection::ProjectionChain;
use lisim::Error;
use nalgebra::Vector3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn one_point_per_valid_depth_pixel() {
    let calib = kitti_calib();
    let chain = ProjectionChain::new(&calib).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let depth = Raster::from_fn(1216, 352, |_, _| if rng.random_bool(0.3) { rng.random_range(1.0..90.0) } else { 0.0 });
    let valid: Vec<(usize, usize, f64)> = depth.enumerate().filter(|(_, _, d)| **d > 0.0).map(|(r, c, d)| (r, c, *d)).collect();
    let cloud = depth_to_cloud(&depth, &calib).unwrap();
    assert_eq!(cloud.len(), valid.len());
    for (p, (r, c, d)) in cloud.iter().zip(valid) {
        let (u, v, z) = chain.project(&Vector3::new(p.x, p.y, p.z)).unwrap();
        assert!((u - c as f64).abs() < 1e-6 && (v - r as f64).abs() < 1e-6);
        assert!((z - d).abs() < 1e-6);
        assert_eq!(p.intensity, 0.0);
    }
}

#[test]
fn empty_depth_is_an_error() {
    let depth = Raster::filled(16, 8, 0.0);
    assert!(matches!(depth_to_cloud(&depth, &kitti_calib()), Err(Error::EmptyCloud)));
}

#[test]
fn range_limit_is_inclusive() {
    let cloud: PointCloud<f64> = [79.9, 80.0, 80.1, 5.0].iter().map(|x| Point::new(*x, 0.0, 0.0, 0.0)).collect();
    let kept = limit_range(&cloud, 80.0);
    assert_eq!(kept.iter().map(|p| p.x).collect::<Vec<_>>(), vec![79.9, 80.0, 5.0]);
}

/// Points seen at known pixel positions (slightly off-center so rounding is
/// unambiguous).
fn points_at_pixels(pixels: &[(i64, i64)], rng: &mut ChaCha8Rng) -> PointCloud<f64> {
    let chain = ProjectionChain::new(&kitti_calib()).unwrap();
    pixels
        .iter()
        .map(|&(u, v)| {
            let (du, dv) = (rng.random_range(-0.4..0.4), rng.random_range(-0.4..0.4));
            let p = chain.backproject(u as f64 + du, v as f64 + dv, rng.random_range(3.0..60.0)).unwrap();
            Point::new(p.x, p.y, p.z, 0.7)
        })
        .collect()
}

#[test]
fn intensity_lookup_straddling_the_window() {
    let calib = kitti_calib();
    let placement = IntensityPlacement::default();
    let (ou, ov) = (placement.offset_u as i64, placement.offset_v as i64);
    let intensity = Raster::from_fn(1216, 352, |r, c| ((r * 1216 + c) % 997) as f64 / 997.0);
    let pixels = [
        (ou - 1, ov + 10),
        (ou, ov + 10),
        (ou + 1215, ov + 10),
        (ou + 1216, ov + 10),
        (ou + 100, ov - 1),
        (ou + 100, ov),
        (ou + 100, ov + 351),
        (-5, 100),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    let cloud = points_at_pixels(&pixels, &mut rng);
    let out = assign_intensity(&cloud, &intensity, &placement, &calib).unwrap();
    for ((u, v), p) in pixels.iter().zip(out.iter()) {
        let (col, row) = (u - ou, v - ov);
        let expected = if (0..1216).contains(&col) && (0..352).contains(&row) {
            intensity[(row as usize, col as usize)]
        } else {
            0.0
        };
        assert_eq!(p.intensity, expected, "pixel ({u}, {v})");
    }
}

#[test]
fn upscaled_prediction_uses_nearest_source_pixel() {
    let calib = kitti_calib();
    let placement = IntensityPlacement::default();
    // half-resolution prediction: every target pixel maps to source (row/2, col/2)
    let small = Raster::from_fn(608, 176, |r, c| ((r * 608 + c) % 251) as f64 / 251.0);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let pixels: Vec<(i64, i64)> = (0..2000)
        .map(|_| (rng.random_range(0..1216) + placement.offset_u as i64, rng.random_range(0..352) + placement.offset_v as i64))
        .collect();
    let cloud = points_at_pixels(&pixels, &mut rng);
    let out = assign_intensity(&cloud, &small, &placement, &calib).unwrap();
    for ((u, v), p) in pixels.iter().zip(out.iter()) {
        let col = (*u as usize - placement.offset_u) / 2;
        let row = (*v as usize - placement.offset_v) / 2;
        assert_eq!(p.intensity, small[(row, col)]);
    }
}

#[test]
fn assigning_twice_is_idempotent() {
    let calib = kitti_calib();
    let placement = IntensityPlacement::default();
    let frame = camera_frame(&Scene::default(), &calib, 1242, 375);
    let cloud = limit_range(&depth_to_cloud(&frame.depth, &calib).unwrap(), 80.0);
    let mut rng = ChaCha8Rng::seed_from_u64(24);
    let intensity = Raster::from_fn(1216, 352, |_, _| rng.random_range(0.0..1.0));
    let once = assign_intensity(&cloud, &intensity, &placement, &calib).unwrap();
    let twice = assign_intensity(&once, &intensity, &placement, &calib).unwrap();
    assert_eq!(once, twice);
    assert_eq!(once.len(), cloud.len());
    for (a, b) in cloud.iter().zip(once.iter()) {
        assert_eq!((a.x, a.y, a.z), (b.x, b.y, b.z));
    }
}

proptest! {
    #[test]
    fn certain_drop_removes_exactly_the_dark_points(intensities in prop::collection::vec(prop_oneof![Just(0.0f64), 0.0f64..1.0], 0..500), seed in any::<u64>()) {
        let cloud: PointCloud<f64> = intensities.iter().enumerate().map(|(i, v)| Point::new(i as f64, 0.0, 0.0, *v)).collect();
        let out = drop_zero_intensity(&cloud, &DropConfig::default(), seed);
        let expected: Vec<f64> = cloud.iter().filter(|p| p.intensity > 0.0).map(|p| p.x).collect();
        prop_assert_eq!(out.iter().map(|p| p.x).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn partial_drop_only_touches_dark_points(intensities in prop::collection::vec(prop_oneof![Just(0.0f64), 0.0f64..1.0], 0..500), seed in any::<u64>()) {
        let cloud: PointCloud<f64> = intensities.iter().enumerate().map(|(i, v)| Point::new(i as f64, 0.0, 0.0, *v)).collect();
        let cfg = DropConfig { threshold: 0.0, probability: 0.5 };
        let out = drop_zero_intensity(&cloud, &cfg, seed);
        prop_assert_eq!(&out, &drop_zero_intensity(&cloud, &cfg, seed));
        let bright = cloud.iter().filter(|p| p.intensity > 0.0).count();
        prop_assert!(out.len() >= bright && out.len() <= cloud.len());
        prop_assert_eq!(out.iter().filter(|p| p.intensity > 0.0).count(), bright);
    }
}

#[test]
fn partial_drop_rate_is_close_to_probability() {
    let cloud: PointCloud<f64> = (0..20_000).map(|i| Point::new(i as f64, 0.0, 0.0, 0.0)).collect();
    let cfg = DropConfig { threshold: 0.0, probability: 0.3 };
    let kept = drop_zero_intensity(&cloud, &cfg, 99).len() as f64 / 20_000.0;
    // binomial standard deviation is ~0.0032
    assert!((kept - 0.7).abs() < 0.02, "{kept}");
}

/// One point per (line center, column center).
fn line_center_cloud(cfg: &SparsifyConfig, grid: &PolarGridConfig, range: f64) -> PointCloud<f64> {
    let mut cloud = PointCloud::new();
    for line in 0..cfg.n_lines {
        let e = cfg.line_center(line);
        for col in 0..grid.full_cols {
            let az: f64 = grid.column_center(col);
            cloud.push(Point::new(range * e.cos() * az.cos(), range * e.cos() * az.sin(), range * e.sin(), 0.5));
        }
    }
    cloud
}

#[test]
fn line_centers_are_fixed_points() {
    let grid = PolarGridConfig::default();
    let cfg = SparsifyConfig::with_lines(64);
    let cloud = line_center_cloud(&cfg, &grid, 20.0);
    let out = sparsify_to_lines(&cloud, &cfg, &grid).unwrap();
    assert_eq!(out.cloud, cloud);
    let expected: Vec<usize> = (0..cloud.len()).map(|i| i / grid.full_cols).collect();
    assert_eq!(out.lines, expected);
}

#[test]
fn halving_lines_keeps_one_point_per_cell() {
    let grid = PolarGridConfig::default();
    let dense = line_center_cloud(&SparsifyConfig::with_lines(64), &grid, 20.0);
    let cfg = SparsifyConfig::with_lines(32);
    let out = sparsify_to_lines(&dense, &cfg, &grid).unwrap();
    assert_eq!(out.cloud.len(), 32 * grid.full_cols);
    let mut seen = std::collections::HashSet::new();
    for (p, line) in out.cloud.iter().zip(&out.lines) {
        let (lo, hi) = cfg.line_bounds(*line);
        assert!(p.elevation() >= lo - 1e-12 && p.elevation() <= hi + 1e-12);
        assert!(seen.insert((*line, grid.column_of(p.azimuth()))));
    }
    assert_eq!(out.lines.iter().max(), Some(&31));
}

#[test]
fn sparsify_keeps_point_nearest_line_center() {
    let grid = PolarGridConfig::default();
    let cfg = SparsifyConfig::with_lines(16);
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut cloud = PointCloud::new();
    for _ in 0..20_000 {
        let e: f64 = rng.random_range(cfg.elevation_min..cfg.elevation_max);
        let az: f64 = rng.random_range(-3.1..3.1);
        cloud.push(Point::new(10.0 * e.cos() * az.cos(), 10.0 * e.cos() * az.sin(), 10.0 * e.sin(), 0.0));
    }
    let out = sparsify_to_lines(&cloud, &cfg, &grid).unwrap();
    let mut best = std::collections::HashMap::new();
    for p in cloud.iter() {
        let line = cfg.line_of(p.elevation()).unwrap();
        let d = (p.elevation() - cfg.line_center(line)).abs();
        let slot = best.entry((line, grid.column_of(p.azimuth()))).or_insert(f64::INFINITY);
        *slot = slot.min(d);
    }
    assert_eq!(out.cloud.len(), best.len());
    for (p, line) in out.cloud.iter().zip(&out.lines) {
        let d = (p.elevation() - cfg.line_center(*line)).abs();
        assert!((d - best[&(*line, grid.column_of(p.azimuth()))]).abs() <= 1e-6);
    }
    assert!(out.lines.windows(2).all(|w| w[0] <= w[1]), "line-major order");
}

#[test]
fn points_outside_the_fan_are_discarded() {
    let grid = PolarGridConfig::default();
    let cfg = SparsifyConfig::default();
    let cloud: PointCloud<f64> = [10.0f64, -40.0, 0.0]
        .iter()
        .map(|deg| {
            let e = deg.to_radians();
            Point::new(e.cos() * 10.0, 0.0, e.sin() * 10.0, 0.0)
        })
        .collect();
    let out = sparsify_to_lines(&cloud, &cfg, &grid).unwrap();
    assert_eq!(out.cloud.len(), 1);
    assert!(sparsify_to_lines(&cloud, &SparsifyConfig::with_lines(0), &grid).is_err());
}

#[test]
fn dense_camera_depth_becomes_a_64_line_scan() {
    let calib = kitti_calib();
    let grid = PolarGridConfig::default();
    let frame = camera_frame(&Scene::default(), &calib, 1242, 375);
    let cloud = limit_range(&depth_to_cloud(&frame.depth, &calib).unwrap(), 80.0);
    let intensity = Raster::filled(1216, 352, 0.5);
    let lit = assign_intensity(&cloud, &intensity, &IntensityPlacement::default(), &calib).unwrap();
    let kept = drop_zero_intensity(&lit, &DropConfig::default(), 0);
    let scan = sparsify_to_lines(&kept, &SparsifyConfig::default(), &grid).unwrap();
    let lines: std::collections::BTreeSet<_> = scan.lines.iter().copied().collect();
    assert!(lines.len() <= 64 && lines.len() > 10, "{} lines", lines.len());
    assert!(scan.cloud.len() < kept.len() / 10);
    assert!(scan.cloud.iter().all(|p| p.intensity == 0.5 && p.range() <= 80.0));
}
