//! Pipeline configuration file (TOML) and its validation.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lisim::cloud_synthesis::{DropConfig, IntensityPlacement, SparsifyConfig};
use lisim::polar_grid::{DenoiseMethod, PolarGridConfig};
use lisim::reprojection::OcclusionParams;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A problem with the configuration or the inputs it points at, detected
/// before any output is written. Maps to exit code 1.
#[derive(Debug)]
pub struct ValidationError(pub String);

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ValidationError {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    ValidationError(msg.into()).into()
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    /// KITTI-style recording with velodyne/, image_2/, calib/, depth/,
    /// semantic/ and optionally instance/, label_2/.
    pub real: Option<PathBuf>,
    /// VKITTI-style scene with rgb/, depth/, classSegmentation/,
    /// instanceSegmentation/ and the intrinsic/pose/bbox/info tables.
    pub synthetic: Option<PathBuf>,
    pub output: Option<PathBuf>,
    /// Class color table; the built-in VKITTI palette when absent.
    pub class_mapping: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RealConfig {
    /// Meters per unit of the dense depth PNGs.
    pub depth_scale: f64,
}

impl Default for RealConfig {
    fn default() -> Self {
        Self { depth_scale: 1.0 / 256.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    /// Camera index in the pose and intrinsic tables.
    pub camera: i64,
    /// Meters per unit of the source depth PNGs.
    pub depth_scale: f64,
    /// Required: depth clamp of the source renderings (meters).
    pub source_max_depth: Option<f64>,
    /// Required: range the clamp maps onto (meters).
    pub target_max_depth: Option<f64>,
    pub max_label_distance: f64,
    /// LiDAR position relative to the camera, vehicle axes (x forward,
    /// y left, z up), meters.
    pub lidar_offset: [f64; 3],
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            camera: 0,
            depth_scale: lisim::kitti_io::images::DEPTH_CM,
            source_max_depth: None,
            target_max_depth: None,
            max_label_distance: 80.0,
            lidar_offset: [-0.27, 0.0, 0.08],
        }
    }
}

impl SyntheticConfig {
    /// Depth range pair, present and positive.
    pub fn depth_range(&self) -> anyhow::Result<(f64, f64)> {
        match (self.source_max_depth, self.target_max_depth) {
            (Some(s), Some(t)) if s > 0.0 && t > 0.0 => Ok((s, t)),
            (Some(_), Some(_)) => Err(invalid("synthetic depth ranges must be positive")),
            _ => Err(invalid(
                "synthetic.source_max_depth and synthetic.target_max_depth are required",
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CloudConfig {
    /// Back-projected points beyond this range (meters) are discarded.
    pub max_range: f64,
    pub drop_zero: bool,
    pub drop: DropConfig,
    pub placement: IntensityPlacement,
    /// Meters per unit of the prepared depth PNGs.
    pub depth_scale: f64,
}

impl Default for CloudConfig {
    fn default() -> Self {
        Self {
            max_range: 80.0,
            drop_zero: false,
            drop: DropConfig::default(),
            placement: IntensityPlacement::default(),
            depth_scale: 1.0 / 256.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Splits {
    /// Frame ids assigned to validation; all others are training frames.
    pub val: Vec<String>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Worker threads; 0 uses every core.
    pub jobs: usize,
    pub strict: bool,
    pub paths: Paths,
    pub grid: PolarGridConfig,
    pub sparsify: SparsifyConfig,
    pub occlusion: OcclusionParams,
    pub denoise: DenoiseMethod,
    pub real: RealConfig,
    pub synthetic: SyntheticConfig,
    pub cloud: CloudConfig,
    pub splits: Splits,
}

impl PipelineConfig {
    /// Load a config file; relative paths resolve against its directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: Self =
            toml::from_str(&text).map_err(|e| invalid(format!("config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [
            &mut cfg.paths.real,
            &mut cfg.paths.synthetic,
            &mut cfg.paths.output,
            &mut cfg.paths.class_mapping,
        ]
        .into_iter()
        .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Checks shared by every command.
    pub fn validate(&self) -> anyhow::Result<()> {
        self.grid.validate().map_err(|e| invalid(format!("grid: {e}")))?;
        self.sparsify
            .validate()
            .map_err(|e| invalid(format!("sparsify: {e}")))?;
        if !(self.occlusion.gap > 0.0) {
            return Err(invalid("occlusion.gap must be positive"));
        }
        for (name, v) in [
            ("real.depth_scale", self.real.depth_scale),
            ("synthetic.depth_scale", self.synthetic.depth_scale),
            ("cloud.depth_scale", self.cloud.depth_scale),
            ("cloud.max_range", self.cloud.max_range),
            ("synthetic.max_label_distance", self.synthetic.max_label_distance),
        ] {
            if !(v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.cloud.drop.probability) {
            return Err(invalid("cloud.drop.probability must lie in [0, 1]"));
        }
        Ok(())
    }

    /// Hash of everything that influences output bytes: paths and worker
    /// count are excluded.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.paths = Paths::default();
        canonical.jobs = 0;
        let json = serde_json::to_string(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    pub fn output_dir(&self) -> anyhow::Result<&Path> {
        self.paths
            .output
            .as_deref()
            .ok_or_else(|| invalid("paths.output is not set"))
    }
}

/// The directory must exist.
pub fn existing_dir<'a>(path: Option<&'a Path>, what: &str) -> anyhow::Result<&'a Path> {
    let path = path.ok_or_else(|| invalid(format!("{what} is not set")))?;
    if !path.is_dir() {
        return Err(invalid(format!("{what} {} does not exist", path.display())));
    }
    Ok(path)
}

pub fn existing_file(path: &Path, what: &str) -> anyhow::Result<()> {
    if !path.is_file() {
        return Err(invalid(format!("{what} {} does not exist", path.display())));
    }
    Ok(())
}

/// Per-frame RNG seed, independent of scheduling order.
pub fn frame_seed(seed: u64, frame_id: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(frame_id.as_bytes());
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

pub fn read_text(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}
