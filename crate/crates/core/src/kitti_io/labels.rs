//! KITTI object labels: 15 whitespace separated fields per object.
//!
//! `type truncated occluded alpha left top right bottom h w l x y z rotation_y`

use std::fmt::Write as _;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectLabel {
    pub class_name: String,
    /// Fraction of the object leaving the image, `[0, 1]`.
    pub truncation: f64,
    /// KITTI occlusion code: 0 visible, 1 partly, 2 largely occluded,
    /// 3 unknown. `DontCare` regions use -1.
    pub occlusion: i32,
    pub alpha: f64,
    /// `(left, top, right, bottom)` in pixels.
    pub bbox2d: [f64; 4],
    /// `(height, width, length)` in meters.
    pub dimensions: [f64; 3],
    /// Bottom center in the camera frame, meters.
    pub location: [f64; 3],
    pub rotation_y: f64,
}

impl ObjectLabel {
    pub fn bbox_height(&self) -> f64 {
        self.bbox2d[3] - self.bbox2d[1]
    }

    /// Euclidean distance of the location from the camera.
    pub fn distance(&self) -> f64 {
        self.location.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn is_dont_care(&self) -> bool {
        self.class_name == "DontCare"
    }

    /// Check the geometric invariants of a real object (not `DontCare`).
    pub fn validate(&self) -> Result<()> {
        let [l, t, r, b] = self.bbox2d;
        if !(l < r && t < b) {
            return Err(Error::Shape(format!(
                "{}: degenerate 2D box {:?}",
                self.class_name, self.bbox2d
            )));
        }
        if self.dimensions.iter().any(|d| *d <= 0.0) {
            return Err(Error::Shape(format!(
                "{}: non-positive dimensions {:?}",
                self.class_name, self.dimensions
            )));
        }
        Ok(())
    }
}

fn parse_line(line: &str, lineno: usize) -> Result<ObjectLabel> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 15 {
        return Err(Error::LineParse {
            line: lineno,
            reason: format!("expected 15 fields, found {}", fields.len()),
        });
    }
    let num = |i: usize| -> Result<f64> {
        fields[i].parse::<f64>().map_err(|e| Error::LineParse {
            line: lineno,
            reason: format!("field {i} `{}`: {e}", fields[i]),
        })
    };
    let occlusion = fields[2]
        .parse::<f64>()
        .map_err(|e| Error::LineParse {
            line: lineno,
            reason: format!("occlusion `{}`: {e}", fields[2]),
        })?
        .round() as i32;
    Ok(ObjectLabel {
        class_name: fields[0].to_string(),
        truncation: num(1)?,
        occlusion,
        alpha: num(3)?,
        bbox2d: [num(4)?, num(5)?, num(6)?, num(7)?],
        dimensions: [num(8)?, num(9)?, num(10)?],
        location: [num(11)?, num(12)?, num(13)?],
        rotation_y: num(14)?,
    })
}

/// Parse a label file. Blank lines are skipped; line numbers in errors are
/// 1-based.
pub fn parse_labels(text: &str) -> Result<Vec<ObjectLabel>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| parse_line(l, i + 1))
        .collect()
}

pub fn write_labels(labels: &[ObjectLabel]) -> String {
    let mut s = String::new();
    for l in labels {
        let _ = write!(
            s,
            "{} {:.2} {} {:.2}",
            l.class_name, l.truncation, l.occlusion, l.alpha
        );
        for v in l.bbox2d.iter().chain(&l.dimensions).chain(&l.location) {
            let _ = write!(s, " {v:.2}");
        }
        let _ = writeln!(s, " {:.2}", l.rotation_y);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dont_care() {
        let l = parse_labels("DontCare -1 -1 -10 503.89 169.71 590.61 190.13 -1 -1 -1 -1000 -1000 -1000 -10\n")
            .unwrap();
        assert_eq!(l.len(), 1);
        assert_eq!(l[0].class_name, "DontCare");
        assert_eq!(l[0].occlusion, -1);
        assert!(l[0].is_dont_care());
    }

    #[test]
    fn empty() {
        assert!(parse_labels("").unwrap().is_empty());
        assert_eq!(write_labels(&[]), "");
    }

    #[test]
    fn car_fields() {
        let l = &parse_labels("Car 0.00 0 -1.57 100.00 150.00 200.00 220.00 1.50 1.60 4.00 2.00 1.00 20.00 -1.47")
            .unwrap()[0];
        assert_eq!(l.class_name, "Car");
        assert_eq!(l.truncation, 0.0);
        assert_eq!(l.occlusion, 0);
        assert_eq!(l.alpha, -1.57);
        assert_eq!(l.bbox2d, [100.0, 150.0, 200.0, 220.0]);
        assert_eq!(l.dimensions, [1.5, 1.6, 4.0]);
        assert_eq!(l.location, [2.0, 1.0, 20.0]);
        assert_eq!(l.rotation_y, -1.47);
        l.validate().unwrap();
    }

    #[test]
    fn wrong_field_count_reports_line() {
        let text = "Car 0 0 0 1 2 3 4 1 1 1 0 0 5 0\n\nCar 0 0 0 1 2 3\n";
        match parse_labels(text) {
            Err(Error::LineParse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn write_uses_two_decimals() {
        let l = parse_labels("Van 0.123 1 0.5 1 2 3 4 1.555 2 3 4 5 6 0.1").unwrap();
        assert_eq!(
            write_labels(&l),
            "Van 0.12 1 0.50 1.00 2.00 3.00 4.00 1.55 2.00 3.00 4.00 5.00 6.00 0.10\n"
        );
    }
}
