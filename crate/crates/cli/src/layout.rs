//! On-disk dataset layouts and small file helpers.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::Context;
use lisim::dataset_prep::DatasetManifest;

pub const MANIFEST: &str = "manifest.json";

/// Sorted ids of the files in `dir` with extension `ext`.
pub fn frame_ids(dir: &Path, ext: &str) -> anyhow::Result<Vec<String>> {
    let mut ids = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("listing {}", dir.display()))? {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some(ext) {
            if let Some(stem) = path.file_stem().and_then(|s| s.to_str()) {
                ids.push(stem.to_string());
            }
        }
    }
    ids.sort();
    Ok(ids)
}

/// `dir/<id>.<ext>` for the first extension that exists.
pub fn find_frame_file(dir: &Path, id: &str, exts: &[&str]) -> Option<PathBuf> {
    exts.iter()
        .map(|e| dir.join(format!("{id}.{e}")))
        .find(|p| p.is_file())
}

pub fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("reading {}", path.display()))
}

/// Collects the files written for one frame, keyed by layer.
pub struct FrameWriter<'a> {
    root: &'a Path,
    id: String,
    pub files: BTreeMap<String, String>,
}

impl<'a> FrameWriter<'a> {
    pub fn new(root: &'a Path, id: &str) -> Self {
        Self {
            root,
            id: id.to_string(),
            files: BTreeMap::new(),
        }
    }

    /// Write `<root>/<layer>/<id>.<ext>` and record it under `layer`.
    pub fn put(&mut self, layer: &str, ext: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let rel = format!("{layer}/{}.{ext}", self.id);
        let path = self.root.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.insert(layer.to_string(), rel);
        Ok(())
    }
}

pub fn write_manifest(root: &Path, manifest: &DatasetManifest) -> anyhow::Result<()> {
    let mut json = serde_json::to_string_pretty(manifest)?;
    json.push('\n');
    std::fs::write(root.join(MANIFEST), json)?;
    Ok(())
}

pub fn read_manifest(root: &Path) -> anyhow::Result<DatasetManifest> {
    let path = root.join(MANIFEST);
    let text = std::fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}
