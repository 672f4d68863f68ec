pub mod inspect;
pub mod metrics;
pub mod prepare_real;
pub mod prepare_synth;
pub mod synth_cloud;

use std::collections::BTreeMap;
use std::path::Path;

use anyhow::anyhow;
use lisim::dataset_prep::{DatasetManifest, ExcludedFrame, ManifestFrame, Split};

use crate::config::PipelineConfig;
use crate::layout::write_manifest;

pub fn thread_pool(jobs: usize) -> anyhow::Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

pub fn manifest_frame(cfg: &PipelineConfig, id: &str, files: BTreeMap<String, String>) -> ManifestFrame {
    let split = if cfg.splits.val.iter().any(|v| v == id) {
        Split::Val
    } else {
        Split::Train
    };
    ManifestFrame {
        id: id.to_string(),
        split,
        files,
    }
}

pub enum FrameOutcome {
    Included(ManifestFrame),
    /// Written to disk but left out of the manifest.
    Excluded { id: String, reason: String },
    Failed { id: String, error: anyhow::Error },
}

impl FrameOutcome {
    pub fn from_result(id: &str, result: anyhow::Result<FrameOutcome>) -> Self {
        result.unwrap_or_else(|error| FrameOutcome::Failed {
            id: id.to_string(),
            error,
        })
    }
}

impl From<ManifestFrame> for FrameOutcome {
    fn from(f: ManifestFrame) -> Self {
        FrameOutcome::Included(f)
    }
}

/// Report per-frame failures, apply the strict policy, and write the
/// manifest (single writer, sorted by id) into `out` when at least one frame
/// made it.
pub fn finish_frames(
    cfg: &PipelineConfig,
    out: Option<&Path>,
    kind: &str,
    outcomes: Vec<FrameOutcome>,
) -> anyhow::Result<DatasetManifest> {
    let total = outcomes.len();
    let mut manifest = DatasetManifest::new(kind, cfg.hash());
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            FrameOutcome::Included(f) => manifest.frames.push(f),
            FrameOutcome::Excluded { id, reason } => manifest.excluded.push(ExcludedFrame { id, reason }),
            FrameOutcome::Failed { id, error } => {
                let reason = format!("{error:#}");
                failures.push((id.clone(), reason.clone()));
                manifest.excluded.push(ExcludedFrame { id, reason });
            }
        }
    }
    manifest.sort();

    eprintln!(
        "{kind}: {} of {total} frames prepared, {} excluded, {} failed",
        manifest.frames.len(),
        manifest.excluded.len() - failures.len(),
        failures.len()
    );
    for (id, reason) in &failures {
        eprintln!("  {id}: {reason}");
    }
    if cfg.strict && !failures.is_empty() {
        return Err(anyhow!("{} frame(s) failed in strict mode; first: {}: {}", failures.len(), failures[0].0, failures[0].1));
    }
    if manifest.frames.is_empty() {
        return Err(anyhow!("no frame was prepared"));
    }
    if let Some(out) = out {
        write_manifest(out, &manifest)?;
    }
    Ok(manifest)
}
