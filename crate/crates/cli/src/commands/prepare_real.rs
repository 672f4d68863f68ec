//! `prepare-real`: paired training data from a KITTI-style recording.

use std::path::Path;

use anyhow::Context;
use lisim::dataset_prep::{build_training_pair, DatasetManifest, LabeledFrame, PairConfig, TrainingPair};
use lisim::kitti_io::{decode_velodyne_bin, images, parse_calib, parse_labels};
use lisim::polar_grid::{encode_grid_pngs, ElevationTable};
use lisim::reprojection::{encode_projected_pngs, CameraFrame};
use rayon::prelude::*;

use super::{finish_frames, manifest_frame, thread_pool, FrameOutcome};
use crate::config::{existing_dir, invalid, PipelineConfig};
use crate::layout::{find_frame_file, frame_ids, read, FrameWriter};

pub const VELODYNE: &str = "velodyne";
pub const IMAGE: &str = "image_2";
pub const CALIB: &str = "calib";
pub const LABELS: &str = "label_2";
pub const DEPTH: &str = "depth";
pub const SEMANTIC: &str = "semantic";
pub const INSTANCE: &str = "instance";

/// Load whatever exists for one frame; missing pieces stay `None` and are
/// reported by the pair builder.
pub fn load_real_frame(root: &Path, id: &str, depth_scale: f64) -> anyhow::Result<LabeledFrame<f64>> {
    let scan_bytes = read(&root.join(VELODYNE).join(format!("{id}.bin")))?;
    let scan = decode_velodyne_bin(&scan_bytes)?.cloud.cast::<f64>();

    let calib = match find_frame_file(&root.join(CALIB), id, &["txt"]) {
        Some(p) => Some(parse_calib::<f64>(&std::fs::read_to_string(&p)?).with_context(|| format!("{}", p.display()))?),
        None => None,
    };
    let labels = match find_frame_file(&root.join(LABELS), id, &["txt"]) {
        Some(p) => parse_labels(&std::fs::read_to_string(&p)?).with_context(|| format!("{}", p.display()))?,
        None => Vec::new(),
    };

    let rgb = find_frame_file(&root.join(IMAGE), id, &["png", "jpg"]);
    let depth = find_frame_file(&root.join(DEPTH), id, &["png"]);
    let semantic = find_frame_file(&root.join(SEMANTIC), id, &["png"]);
    let camera = match (rgb, depth, semantic) {
        (Some(rgb), Some(depth), Some(semantic)) => {
            let instance = match find_frame_file(&root.join(INSTANCE), id, &["png"]) {
                Some(p) => Some(images::load_id_png(&read(&p)?)?),
                None => None,
            };
            Some(CameraFrame {
                rgb: images::load_rgb(&read(&rgb)?)?,
                depth: images::load_depth_png_scaled(&read(&depth)?, depth_scale)?,
                semantic: images::load_id_png(&read(&semantic)?)?,
                instance,
            })
        }
        _ => None,
    };
    Ok(LabeledFrame {
        id: id.to_string(),
        scan: Some(scan),
        camera,
        calib,
        labels,
    })
}

pub fn pair_config(cfg: &PipelineConfig) -> PairConfig {
    PairConfig {
        grid: cfg.grid.clone(),
        occlusion: cfg.occlusion.clone(),
        denoise: cfg.denoise,
    }
}

fn write_pair<'a>(out: &'a Path, pair: &TrainingPair<f64>) -> anyhow::Result<FrameWriter<'a>> {
    let mut w = FrameWriter::new(out, &pair.id);
    for (layer, bytes) in encode_projected_pngs(&pair.input)? {
        w.put(&format!("input/{layer}"), "png", &bytes)?;
    }
    let target = encode_grid_pngs(&pair.target)?;
    w.put("target/intensity", "png", &target.intensity)?;
    w.put("target/valid", "png", &target.valid)?;
    w.put("target/depth", "png", &target.depth)?;
    Ok(w)
}

pub fn run(cfg: &PipelineConfig) -> anyhow::Result<DatasetManifest> {
    cfg.validate()?;
    let root = existing_dir(cfg.paths.real.as_deref(), "paths.real")?;
    let scans = root.join(VELODYNE);
    if !scans.is_dir() {
        return Err(invalid(format!("{} has no {VELODYNE}/ directory", root.display())));
    }
    let ids = frame_ids(&scans, "bin")?;
    if ids.is_empty() {
        return Err(invalid(format!("no scans found in {}", scans.display())));
    }
    let out = cfg.output_dir()?;
    std::fs::create_dir_all(out)?;

    let pair_cfg = pair_config(cfg);
    let elevations = ElevationTable::hdl64e(cfg.grid.num_rows);
    let outcomes: Vec<FrameOutcome> = thread_pool(cfg.jobs)?.install(|| {
        ids.par_iter()
            .map(|id| {
                let result = (|| -> anyhow::Result<FrameOutcome> {
                    let frame = load_real_frame(root, id, cfg.real.depth_scale)?;
                    let pair = build_training_pair(&frame, &pair_cfg, &elevations)?;
                    let w = write_pair(out, &pair)?;
                    Ok(manifest_frame(cfg, id, w.files).into())
                })();
                FrameOutcome::from_result(id, result)
            })
            .collect()
    });
    finish_frames(cfg, Some(out), "real", outcomes)
}
