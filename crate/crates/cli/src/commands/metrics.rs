//! `metrics`: paired intensity errors, Fréchet distance of feature sets and
//! point-cloud statistics, reported as JSON.

use std::path::{Path, PathBuf};

use anyhow::Context;
use lisim::kitti_io::{decode_velodyne_bin, images};
use lisim::metrics::{cloud_stats, decode_features, fit_gaussian, frechet_distance, image_error, CloudStats};
use lisim::polar_grid::PolarGridImage;
use lisim::resample::resize_nearest;
use rayon::prelude::*;
use serde::Serialize;

use super::thread_pool;
use crate::config::{existing_dir, existing_file, invalid, PipelineConfig};
use crate::layout::{frame_ids, read};

#[derive(Clone, Debug, Default)]
pub struct MetricsArgs {
    /// Directory of predicted intensity PNGs, `<id>.png`.
    pub pred: Option<PathBuf>,
    /// Directory with `intensity/` and `valid/` ground-truth PNGs.
    pub truth: Option<PathBuf>,
    pub features_a: Option<PathBuf>,
    pub features_b: Option<PathBuf>,
    pub clouds_a: Option<PathBuf>,
    pub clouds_b: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct FrameError {
    pub id: String,
    pub mae: f64,
    pub rmse: f64,
}

#[derive(Debug, Serialize)]
pub struct ImageReport {
    pub frames: Vec<FrameError>,
    pub mean_mae: f64,
    pub mean_rmse: f64,
}

#[derive(Debug, Serialize)]
pub struct CloudReport {
    pub a: CloudStats,
    pub b: CloudStats,
}

#[derive(Debug, Default, Serialize)]
pub struct Report {
    pub config_hash: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub images: Option<ImageReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub frechet: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clouds: Option<CloudReport>,
}

fn pair<'a>(a: &'a Option<PathBuf>, b: &'a Option<PathBuf>, what: &str) -> anyhow::Result<Option<(&'a Path, &'a Path)>> {
    match (a, b) {
        (Some(a), Some(b)) => Ok(Some((a, b))),
        (None, None) => Ok(None),
        _ => Err(invalid(format!("{what} needs both sides"))),
    }
}

fn load_truth(dir: &Path, id: &str) -> anyhow::Result<PolarGridImage<f64>> {
    let intensity = images::load_intensity_png::<f64>(&read(&dir.join("intensity").join(format!("{id}.png")))?)?;
    let valid = images::load_mask_png(&read(&dir.join("valid").join(format!("{id}.png")))?)?;
    let mut grid = PolarGridImage::empty(intensity.height(), intensity.width());
    valid.check_dims(&intensity, "valid mask")?;
    grid.intensity = intensity;
    grid.valid = valid;
    Ok(grid)
}

fn image_report(pred_dir: &Path, truth_dir: &Path, jobs: usize) -> anyhow::Result<ImageReport> {
    existing_dir(Some(pred_dir), "prediction directory")?;
    existing_dir(Some(&truth_dir.join("intensity")), "ground-truth intensity directory")?;
    let truth_ids = frame_ids(&truth_dir.join("intensity"), "png")?;
    let ids: Vec<String> = frame_ids(pred_dir, "png")?
        .into_iter()
        .filter(|id| truth_ids.binary_search(id).is_ok())
        .collect();
    if ids.is_empty() {
        return Err(invalid("prediction and ground truth share no frame id"));
    }
    let frames = thread_pool(jobs)?.install(|| {
        ids.par_iter()
            .map(|id| -> anyhow::Result<FrameError> {
                let truth = load_truth(truth_dir, id)?;
                let pred = images::load_intensity_png::<f64>(&read(&pred_dir.join(format!("{id}.png")))?)?;
                let pred = resize_nearest(&pred, truth.cols(), truth.rows());
                let (mae, rmse) = image_error(&pred, &truth).with_context(|| format!("frame {id}"))?;
                Ok(FrameError { id: id.clone(), mae, rmse })
            })
            .collect::<anyhow::Result<Vec<_>>>()
    })?;
    let n = frames.len() as f64;
    Ok(ImageReport {
        mean_mae: frames.iter().map(|f| f.mae).sum::<f64>() / n,
        mean_rmse: frames.iter().map(|f| f.rmse).sum::<f64>() / n,
        frames,
    })
}

fn frechet(a: &Path, b: &Path) -> anyhow::Result<f64> {
    existing_file(a, "feature file")?;
    existing_file(b, "feature file")?;
    let fit = |p: &Path| -> anyhow::Result<_> {
        let m = decode_features(&read(p)?).with_context(|| format!("{}", p.display()))?;
        Ok(fit_gaussian(&m.map(f64::from))?)
    };
    Ok(frechet_distance(&fit(a)?, &fit(b)?)?)
}

fn stats_of_dir(dir: &Path, cfg: &PipelineConfig) -> anyhow::Result<CloudStats> {
    existing_dir(Some(dir), "cloud directory")?;
    let mut total = cloud_stats(&lisim::Cloud::new(), &cfg.sparsify)?;
    for id in frame_ids(dir, "bin")? {
        let scan = decode_velodyne_bin(&read(&dir.join(format!("{id}.bin")))?)?.cloud;
        total.merge(&cloud_stats(&scan, &cfg.sparsify)?)?;
    }
    Ok(total)
}

pub fn run(cfg: &PipelineConfig, args: &MetricsArgs) -> anyhow::Result<Report> {
    cfg.validate()?;
    let images = pair(&args.pred, &args.truth, "--pred/--truth")?;
    let features = pair(&args.features_a, &args.features_b, "--features-a/--features-b")?;
    let clouds = pair(&args.clouds_a, &args.clouds_b, "--clouds-a/--clouds-b")?;
    if images.is_none() && features.is_none() && clouds.is_none() {
        return Err(invalid("nothing to compare: pass --pred/--truth, --features-a/-b or --clouds-a/-b"));
    }
    let mut report = Report {
        config_hash: cfg.hash(),
        ..Default::default()
    };
    if let Some((pred, truth)) = images {
        report.images = Some(image_report(pred, truth, cfg.jobs)?);
    }
    if let Some((a, b)) = features {
        report.frechet = Some(frechet(a, b)?);
    }
    if let Some((a, b)) = clouds {
        report.clouds = Some(CloudReport {
            a: stats_of_dir(a, cfg)?,
            b: stats_of_dir(b, cfg)?,
        });
    }
    Ok(report)
}
