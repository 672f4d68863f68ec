//! `synth-cloud`: LiDAR scans from prepared synthetic depth maps and
//! predicted intensity images.

use std::path::{Path, PathBuf};

use anyhow::anyhow;
use lisim::cloud_synthesis::{
    assign_intensity, depth_to_cloud, drop_zero_intensity, limit_range, sparsify_to_lines, LineTaggedCloud,
};
use lisim::dataset_prep::DatasetManifest;
use lisim::kitti_io::{images, parse_calib, write_velodyne_bin, PointCloud};
use rayon::prelude::*;

use super::prepare_synth::OUT_DEPTH;
use super::{finish_frames, manifest_frame, thread_pool, FrameOutcome};
use crate::config::{existing_dir, frame_seed, invalid, PipelineConfig};
use crate::layout::{read, read_manifest, FrameWriter};

/// The full chain for one frame, in memory.
pub fn synthesize(
    dataset: &Path,
    intensity_dir: &Path,
    id: &str,
    cfg: &PipelineConfig,
) -> anyhow::Result<LineTaggedCloud<f64>> {
    let intensity_path = intensity_dir.join(format!("{id}.png"));
    if !intensity_path.is_file() {
        return Err(anyhow!("no predicted intensity at {}", intensity_path.display()));
    }
    let intensity = images::load_intensity_png::<f64>(&read(&intensity_path)?)?;
    let depth = images::load_depth_png_scaled::<f64>(
        &read(&dataset.join(OUT_DEPTH).join(format!("{id}.png")))?,
        cfg.cloud.depth_scale,
    )?;
    let calib = parse_calib::<f64>(&std::fs::read_to_string(dataset.join("calib").join(format!("{id}.txt")))?)?;

    let cloud = limit_range(&depth_to_cloud(&depth, &calib)?, cfg.cloud.max_range);
    let mut cloud = assign_intensity(&cloud, &intensity, &cfg.cloud.placement, &calib)?;
    if cfg.cloud.drop_zero {
        cloud = drop_zero_intensity(&cloud, &cfg.cloud.drop, frame_seed(cfg.seed, id));
    }
    Ok(sparsify_to_lines(&cloud, &cfg.sparsify, &cfg.grid)?)
}

/// Frames listed in the prepared dataset's manifest, each written as
/// `<out>/<id>.bin`.
pub fn run(cfg: &PipelineConfig, intensity_dir: &Path, out: Option<PathBuf>) -> anyhow::Result<DatasetManifest> {
    cfg.validate()?;
    let dataset = existing_dir(cfg.paths.output.as_deref(), "paths.output (prepared synthetic dataset)")?;
    let manifest = read_manifest(dataset).map_err(|e| invalid(format!("{e:#}")))?;
    existing_dir(Some(intensity_dir), "intensity directory")?;
    let out = out.unwrap_or_else(|| dataset.join("velodyne"));
    std::fs::create_dir_all(&out)?;

    let outcomes: Vec<FrameOutcome> = thread_pool(cfg.jobs)?.install(|| {
        manifest
            .frames
            .par_iter()
            .map(|f| {
                let id = f.id.as_str();
                let result = (|| -> anyhow::Result<FrameOutcome> {
                    let tagged = synthesize(dataset, intensity_dir, id, cfg)?;
                    if tagged.cloud.is_empty() {
                        log::warn!("frame {id}: synthesized cloud is empty");
                    }
                    let cloud: PointCloud<f32> = tagged.cloud.cast();
                    let mut w = FrameWriter::new(&out, id);
                    w.put(".", "bin", &write_velodyne_bin(&cloud))?;
                    Ok(manifest_frame(cfg, id, w.files).into())
                })();
                if let Err(e) = &result {
                    log::warn!("frame {id} skipped: {e:#}");
                }
                FrameOutcome::from_result(id, result)
            })
            .collect()
    });
    finish_frames(cfg, None, "synthetic-cloud", outcomes)
}
