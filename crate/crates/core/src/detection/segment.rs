//! Projection-profile character segmentation for single-column slips.
//!
//! 1. Otsu binarization, ink = darker class; isolated ink pixels (no ink in
//!    their 8-neighbourhood) are discarded as speckle.
//! 2. Row ink profile, smoothed by a centred moving average.
//! 3. Bands = runs of rows whose smoothed profile exceeds `α · max`.
//! 4. Bands separated by fewer than `min_gap` rows are merged; bands shorter
//!    than `min_height` rows are dropped.
//! 5. Each band is trimmed to its inked rows and tightened horizontally by its
//!    column profile.

use serde::{Deserialize, Serialize};

use super::BoundingBox;
use crate::raster::{ink_mask, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmenterParams {
    /// Moving-average window over the row profile, in rows.
    pub smoothing_window: usize,
    /// Band threshold as a fraction of the maximum smoothed row ink.
    pub band_threshold: f64,
    /// Bands closer than this many rows are merged.
    pub min_gap: usize,
    /// Bands shorter than this many rows are dropped.
    pub min_height: usize,
    /// Column split distance in median box widths (used by reading order).
    pub column_gap_factor: f64,
}

impl Default for SegmenterParams {
    fn default() -> Self {
        Self {
            smoothing_window: 5,
            band_threshold: 0.08,
            min_gap: 3,
            min_height: 8,
            column_gap_factor: 1.5,
        }
    }
}

impl SegmenterParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.smoothing_window == 0 || self.min_gap == 0 || self.min_height == 0 {
            return Err("window, gap and height parameters must be positive".into());
        }
        if !(self.band_threshold > 0.0 && self.band_threshold < 1.0) {
            return Err(format!("band threshold must lie in (0, 1), got {}", self.band_threshold));
        }
        if self.column_gap_factor <= 0.0 {
            return Err("column gap factor must be positive".into());
        }
        Ok(())
    }
}

struct InkGrid {
    w: usize,
    h: usize,
    ink: Vec<bool>,
}

impl InkGrid {
    fn from_image(image: &GrayImage) -> Self {
        let (w, h) = (image.width() as usize, image.height() as usize);
        let values: Vec<f64> = image.pixels().map(|p| p[0] as f64).collect();
        let ink = ink_mask(&values);
        let mut grid = Self { w, h, ink };
        grid.despeckle();
        grid
    }

    fn at(&self, x: usize, y: usize) -> bool {
        self.ink[y * self.w + x]
    }

    fn despeckle(&mut self) {
        let isolated: Vec<usize> = (0..self.h)
            .flat_map(|y| (0..self.w).map(move |x| (x, y)))
            .filter(|&(x, y)| self.at(x, y) && !self.has_ink_neighbour(x, y))
            .map(|(x, y)| y * self.w + x)
            .collect();
        for idx in isolated {
            self.ink[idx] = false;
        }
    }

    fn has_ink_neighbour(&self, x: usize, y: usize) -> bool {
        let (x0, x1) = (x.saturating_sub(1), (x + 1).min(self.w - 1));
        let (y0, y1) = (y.saturating_sub(1), (y + 1).min(self.h - 1));
        (y0..=y1).any(|ny| (x0..=x1).any(|nx| (nx, ny) != (x, y) && self.at(nx, ny)))
    }

    fn row_count(&self, y: usize) -> usize {
        (0..self.w).filter(|&x| self.at(x, y)).count()
    }
}

pub fn segment_slip(image: &GrayImage, params: &SegmenterParams) -> Vec<BoundingBox> {
    if image.width() == 0 || image.height() == 0 {
        return Vec::new();
    }
    let grid = InkGrid::from_image(image);
    let rows: Vec<f64> = (0..grid.h).map(|y| grid.row_count(y) as f64).collect();
    let smoothed = moving_average(&rows, params.smoothing_window);
    let peak = smoothed.iter().copied().fold(0.0, f64::max);
    if peak <= 0.0 {
        return Vec::new();
    }

    let bands = find_bands(&smoothed, params.band_threshold * peak);
    let bands = merge_bands(bands, params.min_gap);

    bands
        .into_iter()
        .filter(|(start, end)| end - start >= params.min_height)
        .filter_map(|(start, end)| tighten(&grid, start, end))
        .collect()
}

/// Centred moving average with zero padding beyond the image edge.
fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let half = window / 2;
    (0..values.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + window - half).min(values.len());
            values[lo..hi].iter().sum::<f64>() / window as f64
        })
        .collect()
}

/// Half-open row ranges where `profile > threshold`.
fn find_bands(profile: &[f64], threshold: f64) -> Vec<(usize, usize)> {
    let mut bands = Vec::new();
    let mut start = None;
    for (i, &v) in profile.iter().enumerate() {
        match (v > threshold, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                bands.push((s, i));
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        bands.push((s, profile.len()));
    }
    bands
}

fn merge_bands(bands: Vec<(usize, usize)>, min_gap: usize) -> Vec<(usize, usize)> {
    let mut merged: Vec<(usize, usize)> = Vec::with_capacity(bands.len());
    for band in bands {
        match merged.last_mut() {
            Some(last) if band.0 - last.1 < min_gap => last.1 = band.1,
            _ => merged.push(band),
        }
    }
    merged
}

fn tighten(grid: &InkGrid, start: usize, end: usize) -> Option<BoundingBox> {
    let inked_rows: Vec<usize> = (start..end).filter(|&y| grid.row_count(y) > 0).collect();
    let (&top, &bottom) = (inked_rows.first()?, inked_rows.last()?);
    let inked_cols: Vec<usize> = (0..grid.w)
        .filter(|&x| (top..=bottom).any(|y| grid.at(x, y)))
        .collect();
    let (&left, &right) = (inked_cols.first()?, inked_cols.last()?);
    Some(BoundingBox::new(
        left as f64,
        top as f64,
        (right - left + 1) as f64,
        (bottom - top + 1) as f64,
    ))
}
