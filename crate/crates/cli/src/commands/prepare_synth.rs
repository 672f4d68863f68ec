//! `prepare-synth`: convert a VKITTI-style scene into translator inputs and a
//! KITTI object-detection tree.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{anyhow, Context};
use lisim::dataset_prep::{
    downsample_to_grid, filter_labels, map_semantic_classes, reconstruct_calibration, remap_instances,
    scale_synthetic_depth, synthetic_object_to_label, ClassMapping, DatasetManifest,
};
use lisim::kitti_io::vkitti::{parse_intrinsics, parse_objects, Intrinsics};
use lisim::kitti_io::{images, write_calib, write_labels, ObjectLabel};
use lisim::reprojection::{encode_projected_pngs, CameraFrame};
use nalgebra::Matrix4;
use rayon::prelude::*;

use super::{finish_frames, manifest_frame, thread_pool, FrameOutcome};
use crate::config::{existing_dir, existing_file, invalid, read_text, PipelineConfig};
use crate::layout::{find_frame_file, frame_ids, read, FrameWriter};

pub const RGB: &str = "rgb";
pub const DEPTH: &str = "depth";
pub const CLASSES: &str = "classSegmentation";
pub const INSTANCES: &str = "instanceSegmentation";
pub const TABLES: [&str; 4] = ["intrinsic.txt", "pose.txt", "bbox.txt", "info.txt"];

/// Output directory holding the scaled full-resolution depth maps.
pub const OUT_DEPTH: &str = "depth_2";

/// Frame number encoded in the trailing digits of a file stem
/// (`00042`, `rgb_00042`).
pub fn frame_number(id: &str) -> Option<u32> {
    let digits: String = id
        .chars()
        .rev()
        .take_while(|c| c.is_ascii_digit())
        .collect::<Vec<_>>()
        .into_iter()
        .rev()
        .collect();
    digits.parse().ok()
}

pub fn class_mapping(cfg: &PipelineConfig) -> anyhow::Result<ClassMapping<[u8; 3]>> {
    let mapping = match &cfg.paths.class_mapping {
        Some(p) => {
            existing_file(p, "paths.class_mapping")?;
            ClassMapping::parse_colors(&read_text(p)?)
                .map_err(|e| invalid(format!("class mapping {}: {e}", p.display())))?
        }
        None => ClassMapping::vkitti(),
    };
    Ok(if cfg.strict { mapping.strict() } else { mapping })
}

pub fn lidar_pose(offset: [f64; 3]) -> Matrix4<f64> {
    let mut pose = Matrix4::identity();
    for (k, v) in offset.iter().enumerate() {
        pose[(k, 3)] = *v;
    }
    pose
}

/// Everything read from the scene tables, parsed once before any output.
pub struct Scene {
    pub intrinsics: HashMap<u32, Intrinsics>,
    pub labels: HashMap<u32, Vec<ObjectLabel>>,
}

pub fn load_scene(root: &Path, camera: i64) -> anyhow::Result<Scene> {
    for t in TABLES {
        existing_file(&root.join(t), "scene table")?;
    }
    let text = |name: &str| read_text(&root.join(name));
    let intrinsics =
        parse_intrinsics(&text("intrinsic.txt")?, camera).map_err(|e| invalid(format!("intrinsic.txt: {e}")))?;
    let objects = parse_objects(&text("pose.txt")?, &text("bbox.txt")?, &text("info.txt")?, camera)
        .map_err(|e| invalid(format!("object tables: {e}")))?;
    let mut labels: HashMap<u32, Vec<ObjectLabel>> = HashMap::new();
    for obj in &objects {
        labels.entry(obj.frame).or_default().push(synthetic_object_to_label(obj));
    }
    Ok(Scene { intrinsics, labels })
}

pub fn load_camera_frame(
    root: &Path,
    id: &str,
    cfg: &PipelineConfig,
    mapping: &ClassMapping<[u8; 3]>,
) -> anyhow::Result<CameraFrame<f64>> {
    let need = |dir: &str, exts: &[&str]| {
        find_frame_file(&root.join(dir), id, exts).ok_or_else(|| anyhow!("missing {dir}/{id}"))
    };
    let (source_max, target_max) = cfg.synthetic.depth_range()?;
    let depth = images::load_depth_png_scaled::<f64>(&read(&need(DEPTH, &["png"])?)?, cfg.synthetic.depth_scale)?;
    let colors = images::load_rgb(&read(&need(CLASSES, &["png"])?)?)?;
    let instance = match find_frame_file(&root.join(INSTANCES), id, &["png"]) {
        Some(p) => Some(remap_instances(&images::load_id_png(&read(&p)?)?)?),
        None => None,
    };
    Ok(CameraFrame {
        rgb: images::load_rgb(&read(&need(RGB, &["png", "jpg"])?)?)?,
        depth: scale_synthetic_depth(&depth, source_max, target_max)?,
        semantic: map_semantic_classes(&colors, mapping)?,
        instance,
    })
}

fn prepare_frame(
    root: &Path,
    out: &Path,
    id: &str,
    cfg: &PipelineConfig,
    scene: &Scene,
    mapping: &ClassMapping<[u8; 3]>,
) -> anyhow::Result<FrameOutcome> {
    let frame = frame_number(id).ok_or_else(|| anyhow!("cannot read a frame number from `{id}`"))?;
    let intrinsics = scene
        .intrinsics
        .get(&frame)
        .ok_or_else(|| anyhow!("no intrinsics for frame {frame}"))?;
    let camera = load_camera_frame(root, id, cfg, mapping)?;
    let projected = downsample_to_grid(&camera, &cfg.grid)?;
    let calib = reconstruct_calibration(intrinsics, &Matrix4::identity(), &lidar_pose(cfg.synthetic.lidar_offset))?;
    let labels = filter_labels(
        scene.labels.get(&frame).map(Vec::as_slice).unwrap_or(&[]),
        cfg.synthetic.max_label_distance,
    );

    let mut w = FrameWriter::new(out, id);
    w.put("image_2", "png", &images::encode_rgb_png(&camera.rgb)?)?;
    w.put(OUT_DEPTH, "png", &images::encode_depth_png(&camera.depth, cfg.cloud.depth_scale)?)?;
    w.put("calib", "txt", write_calib(&calib).as_bytes())?;
    w.put("label_2", "txt", write_labels(&labels).as_bytes())?;
    for (layer, bytes) in encode_projected_pngs(&projected)? {
        w.put(&format!("input/{layer}"), "png", &bytes)?;
    }
    if labels.is_empty() {
        return Ok(FrameOutcome::Excluded {
            id: id.to_string(),
            reason: format!("no objects within {} m", cfg.synthetic.max_label_distance),
        });
    }
    Ok(manifest_frame(cfg, id, w.files).into())
}

pub fn run(cfg: &PipelineConfig) -> anyhow::Result<DatasetManifest> {
    cfg.validate()?;
    cfg.synthetic.depth_range()?;
    let root = existing_dir(cfg.paths.synthetic.as_deref(), "paths.synthetic")?;
    let rgb_dir = root.join(RGB);
    let rgb = existing_dir(Some(&rgb_dir), "synthetic rgb directory")?;
    let mut ids = frame_ids(rgb, "png")?;
    ids.extend(frame_ids(rgb, "jpg")?);
    ids.sort();
    ids.dedup();
    if ids.is_empty() {
        return Err(invalid(format!("no frames found in {}", rgb.display())));
    }
    let mapping = class_mapping(cfg)?;
    let scene = load_scene(root, cfg.synthetic.camera)?;
    let out = cfg.output_dir()?;
    std::fs::create_dir_all(out.join("velodyne")).context("creating output tree")?;

    let outcomes: Vec<FrameOutcome> = thread_pool(cfg.jobs)?.install(|| {
        ids.par_iter()
            .map(|id| FrameOutcome::from_result(id, prepare_frame(root, out, id, cfg, &scene, &mapping)))
            .collect()
    });
    finish_frames(cfg, Some(out), "synthetic", outcomes)
}
