//! `inspect`: dump the intermediate layers of one frame as PNGs.

use std::path::Path;

use anyhow::anyhow;
use lisim::dataset_prep::{build_training_pair, downsample_to_grid};
use lisim::kitti_io::{images, write_ply_ascii};
use lisim::polar_grid::{
    assign_rows, crop_to_camera_overlap, denoise_grid, encode_grid_pngs, rasterize_polar, ElevationTable,
    PolarGridImage,
};
use lisim::reprojection::{encode_projected_pngs, mask_occlusions_generously, project_camera_to_lidar_grid};

use super::{prepare_real, prepare_synth};
use crate::config::{existing_dir, PipelineConfig};

fn put(out: &Path, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
    let path = out.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, bytes)?;
    Ok(())
}

fn put_grid(out: &Path, stage: &str, grid: &PolarGridImage<f64>) -> anyhow::Result<()> {
    let pngs = encode_grid_pngs(grid)?;
    put(out, &format!("{stage}/intensity.png"), &pngs.intensity)?;
    put(out, &format!("{stage}/valid.png"), &pngs.valid)?;
    put(out, &format!("{stage}/depth.png"), &pngs.depth)
}

fn inspect_real(cfg: &PipelineConfig, id: &str, out: &Path) -> anyhow::Result<()> {
    let root = existing_dir(cfg.paths.real.as_deref(), "paths.real")?;
    let frame = prepare_real::load_real_frame(root, id, cfg.real.depth_scale)?;
    let scan = frame.scan.as_ref().expect("loader always reads the scan");
    std::fs::create_dir_all(out)?;
    put(out, "scan.ply", write_ply_ascii(&scan.cast()).as_bytes())?;

    let rows = assign_rows(scan, &cfg.grid)?;
    let panorama = rasterize_polar(scan, &rows, &cfg.grid)?;
    put_grid(out, "panorama", &panorama)?;
    let crop = crop_to_camera_overlap(&panorama, &cfg.grid)?;
    put_grid(out, "crop", &crop)?;
    put_grid(out, "denoised", &denoise_grid(&crop, cfg.denoise))?;

    if let (Some(camera), Some(calib)) = (&frame.camera, &frame.calib) {
        let elevations = ElevationTable::hdl64e(cfg.grid.num_rows);
        let projected = project_camera_to_lidar_grid(camera, calib, &cfg.grid, &elevations, cfg.occlusion.gap)?;
        for (layer, bytes) in encode_projected_pngs(&projected)? {
            put(out, &format!("projected/{layer}.png"), &bytes)?;
        }
        let masked = mask_occlusions_generously(&projected, cfg.occlusion.dilation_radius);
        for (layer, bytes) in encode_projected_pngs(&masked)? {
            put(out, &format!("masked/{layer}.png"), &bytes)?;
        }
        let pair = build_training_pair(&frame, &prepare_real::pair_config(cfg), &elevations)?;
        for (layer, bytes) in encode_projected_pngs(&pair.input)? {
            put(out, &format!("input/{layer}.png"), &bytes)?;
        }
    } else {
        log::warn!("frame {id}: camera layers or calibration missing, projection stages skipped");
    }
    Ok(())
}

fn inspect_synthetic(cfg: &PipelineConfig, id: &str, out: &Path) -> anyhow::Result<()> {
    let root = existing_dir(cfg.paths.synthetic.as_deref(), "paths.synthetic")?;
    cfg.synthetic.depth_range()?;
    let mapping = prepare_synth::class_mapping(cfg)?;
    let camera = prepare_synth::load_camera_frame(root, id, cfg, &mapping)?;
    std::fs::create_dir_all(out)?;
    put(out, "camera/depth.png", &images::encode_depth_png(&camera.depth, cfg.cloud.depth_scale)?)?;
    put(out, "camera/semantic.png", &images::encode_id_png8(&camera.semantic)?)?;
    if let Some(inst) = &camera.instance {
        put(out, "camera/instance.png", &images::encode_id_png16(inst)?)?;
    }
    for (layer, bytes) in encode_projected_pngs(&downsample_to_grid(&camera, &cfg.grid)?)? {
        put(out, &format!("input/{layer}.png"), &bytes)?;
    }
    Ok(())
}

pub fn run(cfg: &PipelineConfig, id: &str, out: &Path, synthetic: bool) -> anyhow::Result<()> {
    cfg.validate()?;
    if id.is_empty() {
        return Err(anyhow!("empty frame id"));
    }
    if synthetic {
        inspect_synthetic(cfg, id, out)
    } else {
        inspect_real(cfg, id, out)
    }
}
