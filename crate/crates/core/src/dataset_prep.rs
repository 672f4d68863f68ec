//! Dataset assembly: real training pairs, synthetic (VKITTI-style) frame
//! conversion, label filtering and calibration reconstruction.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Debug;
use std::hash::Hash;

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kitti_io::vkitti::{Intrinsics, SyntheticObject};
use crate::kitti_io::{lidar_to_camera_axes, CalibrationSet, ObjectLabel, PointCloud};
use crate::polar_grid::{
    assign_rows, crop_to_camera_overlap, denoise_grid, rasterize_polar, DenoiseMethod, ElevationTable,
    PolarGridConfig, PolarGridImage,
};
use crate::raster::{DepthImage, IdImage, Raster};
use crate::reprojection::{
    apply_dont_care, edge_map_from_instances, mask_occlusions_generously, project_camera_to_lidar_grid,
    CameraFrame, OcclusionParams, ProjectedFrame,
};
use crate::resample::{resize_area_depth, resize_area_rgb, resize_nearest};
use crate::scalar::Real;

/// Clamp depths to `source_max` and rescale linearly so `source_max` maps to
/// `target_max`. Invalid (zero) pixels stay zero.
pub fn scale_synthetic_depth<T: Real>(depth: &DepthImage<T>, source_max: f64, target_max: f64) -> Result<DepthImage<T>> {
    if !(source_max > 0.0 && target_max > 0.0) {
        return Err(Error::Config(format!(
            "depth ranges must be positive (source {source_max}, target {target_max})"
        )));
    }
    let (smax, factor) = (T::lit(source_max), T::lit(target_max / source_max));
    Ok(depth.map(|&d| if d > T::zero() { d.min(smax) * factor } else { T::zero() }))
}

/// Lookup table from source class keys (colors or ids) to KITTI class ids.
#[derive(Clone, Debug)]
pub struct ClassMapping<K> {
    pub table: HashMap<K, u16>,
    pub dont_care_id: u16,
    /// Class for keys missing from the table; `None` makes them an error.
    pub default: Option<u16>,
}

/// VKITTI 2 class colors and names.
pub const VKITTI_PALETTE: [(&str, [u8; 3]); 15] = [
    ("Terrain", [210, 0, 200]),
    ("Sky", [90, 200, 255]),
    ("Tree", [0, 199, 0]),
    ("Vegetation", [90, 240, 0]),
    ("Building", [140, 140, 140]),
    ("Road", [100, 60, 100]),
    ("GuardRail", [250, 100, 255]),
    ("TrafficSign", [255, 255, 0]),
    ("TrafficLight", [200, 200, 0]),
    ("Pole", [255, 130, 0]),
    ("Misc", [80, 80, 80]),
    ("Truck", [160, 60, 60]),
    ("Car", [255, 127, 80]),
    ("Van", [0, 139, 139]),
    ("Undefined", [0, 0, 0]),
];

/// KITTI (Cityscapes label id) class for a VKITTI class name.
pub fn kitti_class_id(vkitti_name: &str) -> Option<u16> {
    Some(match vkitti_name {
        "Road" => 7,
        "Building" => 11,
        "GuardRail" => 14,
        "Pole" => 17,
        "TrafficLight" => 19,
        "TrafficSign" => 20,
        "Tree" | "Vegetation" => 21,
        "Terrain" => 22,
        "Sky" => 23,
        "Car" | "Van" => 26,
        "Truck" => 27,
        "Misc" | "Undefined" => 0,
        _ => return None,
    })
}

/// KITTI "unlabeled" id, used as the don't-care class.
pub const KITTI_UNLABELED: u16 = 0;

impl ClassMapping<[u8; 3]> {
    /// Shipped VKITTI 2 color table. Unknown colors fall back to don't-care.
    pub fn vkitti() -> Self {
        let table = VKITTI_PALETTE
            .iter()
            .map(|(name, color)| (*color, kitti_class_id(name).expect("palette names are mapped")))
            .collect();
        Self {
            table,
            dont_care_id: KITTI_UNLABELED,
            default: Some(KITTI_UNLABELED),
        }
    }

    /// Parse a mapping file: `r g b kitti_id` per line, optional trailing
    /// name, `#` comments, and an optional `dont_care <id>` line.
    pub fn parse_colors(text: &str) -> Result<Self> {
        let mut table = HashMap::new();
        let mut dont_care_id = KITTI_UNLABELED;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = |reason: String| Error::LineParse { line: i + 1, reason };
            if f[0] == "dont_care" {
                dont_care_id = f
                    .get(1)
                    .and_then(|v| v.parse().ok())
                    .ok_or_else(|| bad("dont_care needs an id".into()))?;
                continue;
            }
            if f.len() < 4 {
                return Err(bad(format!("expected `r g b id`, got `{line}`")));
            }
            let n = |k: usize| f[k].parse::<u16>().map_err(|e| bad(format!("`{}`: {e}", f[k])));
            let rgb = [n(0)?, n(1)?, n(2)?];
            if rgb.iter().any(|v| *v > 255) {
                return Err(bad("color channel above 255".into()));
            }
            table.insert(rgb.map(|v| v as u8), n(3)?);
        }
        Ok(Self {
            table,
            dont_care_id,
            default: Some(dont_care_id),
        })
    }
}

impl<K> ClassMapping<K> {
    /// Unmapped keys become errors instead of don't-care.
    pub fn strict(mut self) -> Self {
        self.default = None;
        self
    }
}

impl<K: Copy + Eq + Hash> ClassMapping<K> {
    pub fn identity(keys: impl IntoIterator<Item = K>, to_id: impl Fn(K) -> u16, dont_care_id: u16) -> Self {
        Self {
            table: keys.into_iter().map(|k| (k, to_id(k))).collect(),
            dont_care_id,
            default: None,
        }
    }
}

/// Per-pixel table lookup.
pub fn map_semantic_classes<K: Copy + Eq + Hash + Ord + Debug>(
    map: &Raster<K>,
    mapping: &ClassMapping<K>,
) -> Result<IdImage> {
    let mut unmapped = BTreeSet::new();
    let out = map.map(|k| match mapping.table.get(k).copied().or(mapping.default) {
        Some(id) => id,
        None => {
            unmapped.insert(*k);
            mapping.dont_care_id
        }
    });
    if !unmapped.is_empty() {
        return Err(Error::UnmappedClass(unmapped.iter().map(|k| format!("{k:?}")).collect()));
    }
    Ok(out)
}

/// Renumber instance keys to `1..=K` in order of first appearance
/// (row-major). `K::default()` means "no instance" and maps to 0.
pub fn remap_instances<K: Copy + Eq + Hash + Default>(map: &Raster<K>) -> Result<IdImage> {
    let mut ids: HashMap<K, u16> = HashMap::new();
    let mut next: u32 = 1;
    let mut overflow = false;
    let out = map.map(|k| {
        if *k == K::default() {
            return 0;
        }
        *ids.entry(*k).or_insert_with(|| {
            let id = next;
            next += 1;
            if id > u16::MAX as u32 {
                overflow = true;
            }
            id as u16
        })
    });
    if overflow {
        return Err(Error::Shape(format!("{} instances exceed 16-bit ids", next - 1)));
    }
    Ok(out)
}

/// Keep objects whose camera-frame distance is at most `max_distance`.
pub fn filter_labels(labels: &[ObjectLabel], max_distance: f64) -> Vec<ObjectLabel> {
    labels.iter().filter(|l| l.distance() <= max_distance).cloned().collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    Easy,
    Moderate,
    Hard,
    Ignored,
}

/// Per-level thresholds, indexed easy, moderate, hard.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DifficultyRule {
    /// Minimum 2D box height in pixels.
    pub min_height: [f64; 3],
    /// Maximum KITTI occlusion code.
    pub max_occlusion: [i32; 3],
    pub max_truncation: [f64; 3],
    /// When false nothing is easy; easy candidates count as moderate.
    pub allow_easy: bool,
}

impl DifficultyRule {
    /// KITTI object benchmark thresholds.
    pub fn kitti() -> Self {
        Self {
            min_height: [40.0, 25.0, 25.0],
            max_occlusion: [0, 1, 2],
            max_truncation: [0.15, 0.30, 0.50],
            allow_easy: true,
        }
    }

    /// KITTI thresholds, but no synthetic object counts as fully visible.
    pub fn vkitti() -> Self {
        Self {
            allow_easy: false,
            ..Self::kitti()
        }
    }
}

pub fn assign_difficulty(label: &ObjectLabel, rule: &DifficultyRule) -> Difficulty {
    if label.is_dont_care() || label.occlusion < 0 {
        return Difficulty::Ignored;
    }
    let fits = |k: usize| {
        label.bbox_height() >= rule.min_height[k]
            && label.occlusion <= rule.max_occlusion[k]
            && label.truncation <= rule.max_truncation[k]
    };
    if fits(0) {
        if rule.allow_easy {
            Difficulty::Easy
        } else {
            Difficulty::Moderate
        }
    } else if fits(1) {
        Difficulty::Moderate
    } else if fits(2) {
        Difficulty::Hard
    } else {
        Difficulty::Ignored
    }
}

/// KITTI occlusion code for a synthetic occlusion fraction. Never 0: no
/// synthetic object is treated as fully visible.
pub fn occlusion_code_from_fraction(fraction: f64) -> i32 {
    if fraction <= 0.1 {
        1
    } else if fraction <= 0.5 {
        2
    } else {
        3
    }
}

pub fn synthetic_object_to_label(obj: &SyntheticObject) -> ObjectLabel {
    ObjectLabel {
        class_name: obj.class_name.clone(),
        truncation: obj.truncation,
        occlusion: occlusion_code_from_fraction(obj.occlusion_fraction),
        alpha: obj.alpha,
        bbox2d: obj.bbox2d,
        dimensions: obj.dimensions,
        location: obj.location,
        rotation_y: obj.rotation_y,
    }
}

fn checked_inverse<T: Real>(pose: &Matrix4<T>, what: &str) -> Result<Matrix4<T>> {
    let bottom = pose.row(3);
    let expected = [T::zero(), T::zero(), T::zero(), T::one()];
    if bottom.iter().zip(expected).any(|(a, b)| (*a - b).abs() > T::lit(1e-9)) {
        return Err(Error::DegeneratePose(format!("{what}: bottom row is not (0, 0, 0, 1)")));
    }
    let rot = pose.fixed_view::<3, 3>(0, 0);
    if rot.determinant().abs() < T::lit(1e-9) {
        return Err(Error::DegeneratePose(format!("{what}: singular rotation block")));
    }
    pose.try_inverse()
        .ok_or_else(|| Error::DegeneratePose(format!("{what}: not invertible")))
}

/// Build a KITTI calibration from pinhole intrinsics and the poses of the
/// camera and LiDAR in a common vehicle frame (x forward, y left, z up).
/// Rectification is the identity.
pub fn reconstruct_calibration<T: Real>(
    intrinsics: &Intrinsics,
    camera_pose: &Matrix4<T>,
    lidar_pose: &Matrix4<T>,
) -> Result<CalibrationSet<T>> {
    let lidar_in_camera = checked_inverse(camera_pose, "camera pose")? * lidar_pose;
    checked_inverse(lidar_pose, "lidar pose")?;
    let axes = lidar_to_camera_axes::<T>();
    let mut calib = CalibrationSet::identity_chain();
    let l = |v: f64| T::lit(v);
    calib.cam_projection[(0, 0)] = l(intrinsics.fx);
    calib.cam_projection[(1, 1)] = l(intrinsics.fy);
    calib.cam_projection[(0, 2)] = l(intrinsics.cx);
    calib.cam_projection[(1, 2)] = l(intrinsics.cy);
    let rot = axes * lidar_in_camera.fixed_view::<3, 3>(0, 0);
    let trans = axes * lidar_in_camera.fixed_view::<3, 1>(0, 3);
    calib.lidar_to_cam.fixed_view_mut::<3, 3>(0, 0).copy_from(&rot);
    calib.lidar_to_cam.fixed_view_mut::<3, 1>(0, 3).copy_from(&trans);
    Ok(calib)
}

/// Resize camera layers straight to the crop grid (no reprojection):
/// nearest neighbor for ids, area average for rgb and depth. The occlusion
/// mask is empty, edges come from the resized id maps.
pub fn downsample_to_grid<T: Real>(frame: &CameraFrame<T>, cfg: &PolarGridConfig) -> Result<ProjectedFrame<T>> {
    frame.validate()?;
    let (w, h) = (cfg.crop_cols, cfg.crop_rows);
    let semantic = resize_nearest(&frame.semantic, w, h);
    let instance = match &frame.instance {
        Some(i) => resize_nearest(i, w, h),
        None => Raster::filled(w, h, 0),
    };
    let edges = match &frame.instance {
        Some(_) => edge_map_from_instances(&instance, &semantic)?,
        None => Raster::filled(w, h, false),
    };
    let depth = resize_area_depth(&frame.depth, w, h);
    Ok(ProjectedFrame {
        rgb: resize_area_rgb(&frame.rgb, w, h),
        coverage: depth.map(|d| *d > T::zero()),
        depth,
        semantic,
        instance,
        edges,
        occlusion_mask: Raster::filled(w, h, false),
    })
}

/// Everything known about one recorded frame.
#[derive(Clone, Debug)]
pub struct LabeledFrame<T: Real> {
    pub id: String,
    pub scan: Option<PointCloud<T>>,
    pub camera: Option<CameraFrame<T>>,
    pub calib: Option<CalibrationSet<T>>,
    pub labels: Vec<ObjectLabel>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairConfig {
    pub grid: PolarGridConfig,
    pub occlusion: OcclusionParams,
    pub denoise: DenoiseMethod,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainingPair<T> {
    pub id: String,
    pub input: ProjectedFrame<T>,
    pub target: PolarGridImage<T>,
}

fn build_pair_inner<T: Real>(
    frame: &LabeledFrame<T>,
    cfg: &PairConfig,
    elevations: &ElevationTable<T>,
) -> Result<TrainingPair<T>> {
    let scan = frame.scan.as_ref().ok_or_else(|| Error::MissingField("velodyne scan".into()))?;
    let camera = frame.camera.as_ref().ok_or_else(|| Error::MissingField("camera layers".into()))?;
    let calib = frame.calib.as_ref().ok_or_else(|| Error::MissingField("calibration".into()))?;

    let rows = assign_rows(scan, &cfg.grid)?;
    let full = rasterize_polar(scan, &rows, &cfg.grid)?;
    let target = denoise_grid(&crop_to_camera_overlap(&full, &cfg.grid)?, cfg.denoise);

    let projected = project_camera_to_lidar_grid(camera, calib, &cfg.grid, elevations, T::lit(cfg.occlusion.gap))?;
    let masked = mask_occlusions_generously(&projected, cfg.occlusion.dilation_radius);
    let mut input = apply_dont_care(&masked, cfg.occlusion.dont_care_class);
    input.edges = match camera.instance {
        Some(_) => edge_map_from_instances(&input.instance, &input.semantic)?,
        None => Raster::filled(cfg.grid.crop_cols, cfg.grid.crop_rows, false),
    };
    Ok(TrainingPair {
        id: frame.id.clone(),
        input,
        target,
    })
}

/// Target: cropped, denoised polar grid of the scan. Input: camera layers
/// projected into the same crop with occlusions dilated and marked
/// don't-care, plus the boundary map.
pub fn build_training_pair<T: Real>(
    frame: &LabeledFrame<T>,
    cfg: &PairConfig,
    elevations: &ElevationTable<T>,
) -> Result<TrainingPair<T>> {
    build_pair_inner(frame, cfg, elevations).map_err(|e| e.in_frame(&frame.id))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Train,
    Val,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestFrame {
    pub id: String,
    pub split: Split,
    /// Modality name to path relative to the dataset root.
    pub files: BTreeMap<String, String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExcludedFrame {
    pub id: String,
    pub reason: String,
}

/// Listing of a prepared dataset; frames are sorted by id.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub kind: String,
    pub config_hash: String,
    pub frames: Vec<ManifestFrame>,
    pub excluded: Vec<ExcludedFrame>,
}

impl DatasetManifest {
    pub fn new(kind: impl Into<String>, config_hash: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            config_hash: config_hash.into(),
            frames: Vec::new(),
            excluded: Vec::new(),
        }
    }

    pub fn sort(&mut self) {
        self.frames.sort_by(|a, b| a.id.cmp(&b.id));
        self.excluded.sort_by(|a, b| a.id.cmp(&b.id));
    }
}
