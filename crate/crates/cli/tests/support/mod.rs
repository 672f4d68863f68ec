//! Helpers for driving the `lisim` binary against temporary datasets.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use lisim::kitti_io::images;
use lisim::raster::Raster;

pub fn lisim(config: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lisim"))
        .arg("--config")
        .arg(config)
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Write `config.toml` into `dir` and return its path.
pub fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(&path, body).unwrap();
    path
}

pub const SYNTH_RANGES: &str = "[synthetic]\nsource_max_depth = 655.35\ntarget_max_depth = 655.35\n";

/// Write a constant predicted-intensity PNG for every id.
pub fn write_intensity(dir: &Path, ids: &[String], value: f64) {
    std::fs::create_dir_all(dir).unwrap();
    let img = Raster::filled(1216, 352, value);
    let bytes = images::encode_intensity_png(&img).unwrap();
    for id in ids {
        std::fs::write(dir.join(format!("{id}.png")), &bytes).unwrap();
    }
}

/// All files below `root`, as sorted relative paths with their bytes.
pub fn tree(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}
