//! Character detection on slip scans.
//!
//! - [`segment_slip`]: projection-profile segmenter producing character boxes.
//! - [`reading_order`]: column clustering, right-to-left, top-to-bottom.
//! - [`evaluate_detection`]: greedy IoU matching with precision / recall / F1.
//! - [`DetectionRecord`]: the JSON Lines exchange format shared by gold
//!   annotations and external detector output.

mod eval;
mod order;
mod segment;

use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::GrayImage;

pub use eval::{evaluate_detection, evaluate_detection_batch, iou, DetectionEvalConfig, DetectionScores};
pub use order::{reading_order, reading_order_with};
pub use segment::{segment_slip, SegmenterParams};

/// Axis-aligned box in pixels, origin top-left. Serialized as `[x, y, w, h]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct BoundingBox {
    pub x: f64,
    pub y: f64,
    pub w: f64,
    pub h: f64,
}

impl BoundingBox {
    pub const fn new(x: f64, y: f64, w: f64, h: f64) -> Self {
        Self { x, y, w, h }
    }

    pub fn area(&self) -> f64 {
        self.w.max(0.0) * self.h.max(0.0)
    }

    pub fn x_center(&self) -> f64 {
        self.x + self.w / 2.0
    }

    pub fn y_center(&self) -> f64 {
        self.y + self.h / 2.0
    }

    pub fn right(&self) -> f64 {
        self.x + self.w
    }

    pub fn bottom(&self) -> f64 {
        self.y + self.h
    }

    pub fn is_valid(&self) -> bool {
        self.w > 0.0 && self.h > 0.0
    }

    /// Pixel-grid crop rectangle `(x, y, w, h)`, rounding outward.
    pub fn pixel_rect(&self) -> (i64, i64, i64, i64) {
        let x0 = self.x.floor() as i64;
        let y0 = self.y.floor() as i64;
        let x1 = self.right().ceil() as i64;
        let y1 = self.bottom().ceil() as i64;
        (x0, y0, x1 - x0, y1 - y0)
    }
}

impl From<[f64; 4]> for BoundingBox {
    fn from([x, y, w, h]: [f64; 4]) -> Self {
        Self { x, y, w, h }
    }
}

impl From<BoundingBox> for [f64; 4] {
    fn from(b: BoundingBox) -> Self {
        [b.x, b.y, b.w, b.h]
    }
}

/// Anything that turns a slip image into character boxes.
pub trait Detector {
    fn detect(&self, image: &GrayImage) -> Vec<BoundingBox>;
}

impl Detector for SegmenterParams {
    fn detect(&self, image: &GrayImage) -> Vec<BoundingBox> {
        segment_slip(image, self)
    }
}

/// Boxes produced elsewhere (e.g. a neural detector), replayed verbatim.
#[derive(Debug, Clone)]
pub struct PrecomputedBoxes(pub Vec<BoundingBox>);

impl Detector for PrecomputedBoxes {
    fn detect(&self, _image: &GrayImage) -> Vec<BoundingBox> {
        self.0.clone()
    }
}

/// One line of a detection exchange file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub slip_id: String,
    pub boxes: Vec<BoundingBox>,
}

#[derive(Debug, Error)]
pub enum DetectionFileError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate slip_id {slip_id}")]
    DuplicateSlip { line: usize, slip_id: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub fn read_detections<R: BufRead>(reader: R) -> Result<Vec<DetectionRecord>, DetectionFileError> {
    let mut out: Vec<DetectionRecord> = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: DetectionRecord =
            serde_json::from_str(&line).map_err(|e| DetectionFileError::Malformed {
                line: idx + 1,
                message: e.to_string(),
            })?;
        if out.iter().any(|r| r.slip_id == record.slip_id) {
            return Err(DetectionFileError::DuplicateSlip {
                line: idx + 1,
                slip_id: record.slip_id,
            });
        }
        out.push(record);
    }
    Ok(out)
}

pub fn load_detections(path: impl AsRef<Path>) -> Result<Vec<DetectionRecord>, DetectionFileError> {
    read_detections(BufReader::new(File::open(path)?))
}

pub fn write_detections<W: Write>(records: &[DetectionRecord], mut out: W) -> io::Result<()> {
    for record in records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
