//! Readers for VKITTI-style whitespace tables with a header row
//! (`intrinsic.txt`, `extrinsic.txt`, `pose.txt`, `bbox.txt`, `info.txt`).
//!
//! Only the columns listed below are required; any other columns are
//! ignored, so trimmed or reordered tables work.
//!
//! * intrinsic: `frame cameraID K[0,0] K[1,1] K[0,2] K[1,2]`
//! * extrinsic: `frame cameraID` followed by 16 row-major world→camera values
//! * pose: `frame cameraID trackID alpha width height length camera_space_X
//!   camera_space_Y camera_space_Z rotation_camera_space_y`
//! * bbox: `frame cameraID trackID left right top bottom truncation_ratio
//!   occupancy_ratio`
//! * info: `trackID label`

use std::collections::HashMap;

use nalgebra::Matrix4;

use crate::error::{Error, Result};

/// Parsed whitespace table.
#[derive(Clone, Debug)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines
            .next()
            .ok_or_else(|| Error::MalformedFile("table has no header".into()))?;
        let columns: Vec<String> = header.split_whitespace().map(str::to_string).collect();
        let mut rows = Vec::new();
        for (i, line) in lines.enumerate() {
            let row: Vec<String> = line.split_whitespace().map(str::to_string).collect();
            if row.len() != columns.len() {
                return Err(Error::LineParse {
                    line: i + 2,
                    reason: format!("expected {} columns, found {}", columns.len(), row.len()),
                });
            }
            rows.push(row);
        }
        Ok(Self { columns, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::MissingField(name.to_string()))
    }

    pub fn text(&self, row: usize, col: usize) -> &str {
        &self.rows[row][col]
    }

    pub fn number(&self, row: usize, col: usize) -> Result<f64> {
        let s = &self.rows[row][col];
        s.parse::<f64>().map_err(|e| Error::LineParse {
            line: row + 2,
            reason: format!("column `{}` value `{s}`: {e}", self.columns[col]),
        })
    }

    fn integer(&self, row: usize, col: usize) -> Result<i64> {
        let v = self.number(row, col)?;
        Ok(v.round() as i64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

/// Per-frame pinhole intrinsics for one camera.
pub fn parse_intrinsics(text: &str, camera: i64) -> Result<HashMap<u32, Intrinsics>> {
    let t = Table::parse(text)?;
    let [frame, cam, fx, fy, cx, cy] =
        ["frame", "cameraID", "K[0,0]", "K[1,1]", "K[0,2]", "K[1,2]"].map(|c| t.column_index(c));
    let (frame, cam, fx, fy, cx, cy) = (frame?, cam?, fx?, fy?, cx?, cy?);
    let mut out = HashMap::new();
    for r in 0..t.len() {
        if t.integer(r, cam)? != camera {
            continue;
        }
        out.insert(
            t.integer(r, frame)? as u32,
            Intrinsics {
                fx: t.number(r, fx)?,
                fy: t.number(r, fy)?,
                cx: t.number(r, cx)?,
                cy: t.number(r, cy)?,
            },
        );
    }
    Ok(out)
}

/// Per-frame world→camera transforms for one camera.
pub fn parse_extrinsics(text: &str, camera: i64) -> Result<HashMap<u32, Matrix4<f64>>> {
    let t = Table::parse(text)?;
    let frame = t.column_index("frame")?;
    let cam = t.column_index("cameraID")?;
    let first = cam.max(frame) + 1;
    if t.columns.len() < first + 16 {
        return Err(Error::Arity {
            key: "extrinsic".into(),
            expected: 16,
            found: t.columns.len().saturating_sub(first),
        });
    }
    let mut out = HashMap::new();
    for r in 0..t.len() {
        if t.integer(r, cam)? != camera {
            continue;
        }
        let vals = (first..first + 16)
            .map(|c| t.number(r, c))
            .collect::<Result<Vec<_>>>()?;
        out.insert(t.integer(r, frame)? as u32, Matrix4::from_row_slice(&vals));
    }
    Ok(out)
}

/// One annotated object from the joined pose/bbox/info tables.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticObject {
    pub frame: u32,
    pub track_id: i64,
    pub class_name: String,
    pub alpha: f64,
    /// `(height, width, length)` meters.
    pub dimensions: [f64; 3],
    /// Camera frame location, meters.
    pub location: [f64; 3],
    pub rotation_y: f64,
    /// `(left, top, right, bottom)` pixels.
    pub bbox2d: [f64; 4],
    pub truncation: f64,
    /// Fraction of the object hidden by other geometry, `[0, 1]`.
    pub occlusion_fraction: f64,
}

/// Join `pose`, `bbox` and `info` on `(frame, trackID)` for one camera.
/// Objects present in `pose` but missing a 2D box are skipped.
pub fn parse_objects(pose: &str, bbox: &str, info: &str, camera: i64) -> Result<Vec<SyntheticObject>> {
    let info = Table::parse(info)?;
    let (it, il) = (info.column_index("trackID")?, info.column_index("label")?);
    let mut labels = HashMap::new();
    for r in 0..info.len() {
        labels.insert(info.integer(r, it)?, info.text(r, il).to_string());
    }

    let b = Table::parse(bbox)?;
    let bc: Vec<usize> = [
        "frame",
        "cameraID",
        "trackID",
        "left",
        "right",
        "top",
        "bottom",
        "truncation_ratio",
        "occupancy_ratio",
    ]
    .iter()
    .map(|c| b.column_index(c))
    .collect::<Result<_>>()?;
    let mut boxes = HashMap::new();
    for r in 0..b.len() {
        if b.integer(r, bc[1])? != camera {
            continue;
        }
        let key = (b.integer(r, bc[0])?, b.integer(r, bc[2])?);
        let v = (3..9).map(|i| b.number(r, bc[i])).collect::<Result<Vec<_>>>()?;
        boxes.insert(key, v);
    }

    let p = Table::parse(pose)?;
    let pc: Vec<usize> = [
        "frame",
        "cameraID",
        "trackID",
        "alpha",
        "width",
        "height",
        "length",
        "camera_space_X",
        "camera_space_Y",
        "camera_space_Z",
        "rotation_camera_space_y",
    ]
    .iter()
    .map(|c| p.column_index(c))
    .collect::<Result<_>>()?;
    let mut out = Vec::new();
    for r in 0..p.len() {
        if p.integer(r, pc[1])? != camera {
            continue;
        }
        let frame = p.integer(r, pc[0])?;
        let track = p.integer(r, pc[2])?;
        let Some(bx) = boxes.get(&(frame, track)) else {
            continue;
        };
        let n = |i: usize| p.number(r, pc[i]);
        out.push(SyntheticObject {
            frame: frame as u32,
            track_id: track,
            class_name: labels.get(&track).cloned().unwrap_or_else(|| "Car".into()),
            alpha: n(3)?,
            dimensions: [n(5)?, n(4)?, n(6)?],
            location: [n(7)?, n(8)?, n(9)?],
            rotation_y: n(10)?,
            // bbox table is left right top bottom
            bbox2d: [bx[0], bx[2], bx[1], bx[3]],
            truncation: bx[4].clamp(0.0, 1.0),
            occlusion_fraction: (1.0 - bx[5]).clamp(0.0, 1.0),
        });
    }
    out.sort_by_key(|o| (o.frame, o.track_id));
    Ok(out)
}
