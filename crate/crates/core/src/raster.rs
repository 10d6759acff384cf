//! Grayscale raster helpers: loading, Otsu thresholding, area resampling.

use std::path::Path;

pub use image::GrayImage;
use image::Luma;

/// Otsu class means closer than this are treated as a single-tone image.
pub const MIN_OTSU_CONTRAST: f64 = 48.0;

/// Loads PNG or JPEG; colour input is converted by luminance.
pub fn load_gray(path: impl AsRef<Path>) -> image::ImageResult<GrayImage> {
    Ok(image::open(path)?.into_luma8())
}

pub fn decode_gray(bytes: &[u8]) -> image::ImageResult<GrayImage> {
    Ok(image::load_from_memory(bytes)?.into_luma8())
}

pub fn encode_png(img: &GrayImage) -> image::ImageResult<Vec<u8>> {
    let mut out = std::io::Cursor::new(Vec::new());
    img.write_to(&mut out, image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

pub fn histogram(pixels: impl IntoIterator<Item = u8>) -> [u64; 256] {
    let mut hist = [0u64; 256];
    for p in pixels {
        hist[p as usize] += 1;
    }
    hist
}

/// Otsu split of a histogram. Returns `(threshold, mean_below, mean_above)`
/// where pixels `<= threshold` form the dark class, or `None` when the image
/// has a single gray level.
pub fn otsu(hist: &[u64; 256]) -> Option<(u8, f64, f64)> {
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return None;
    }
    let sum_all: f64 = hist
        .iter()
        .enumerate()
        .map(|(v, &n)| v as f64 * n as f64)
        .sum();

    let mut best: Option<(u8, f64, f64, f64)> = None;
    let mut w0 = 0u64;
    let mut sum0 = 0.0;
    for (t, &n) in hist.iter().enumerate().take(255) {
        w0 += n;
        sum0 += t as f64 * n as f64;
        let w1 = total - w0;
        if w0 == 0 || w1 == 0 {
            continue;
        }
        let m0 = sum0 / w0 as f64;
        let m1 = (sum_all - sum0) / w1 as f64;
        let between = w0 as f64 * w1 as f64 * (m1 - m0) * (m1 - m0);
        if best.is_none_or(|(_, _, _, b)| between > b) {
            best = Some((t as u8, m0, m1, between));
        }
    }
    best.map(|(t, m0, m1, _)| (t, m0, m1))
}

/// Ink mask (`true` = dark) of a sample of gray values.
///
/// Uses Otsu when the two classes are well separated; otherwise the image is
/// single-tone and every pixel is classed against mid-gray, so an all-white
/// raster is blank and an all-black raster is solid ink.
pub fn ink_mask(values: &[f64]) -> Vec<bool> {
    let hist = histogram(values.iter().map(|v| v.round().clamp(0.0, 255.0) as u8));
    let threshold = match otsu(&hist) {
        Some((t, m0, m1)) if m1 - m0 >= MIN_OTSU_CONTRAST => t as f64 + 0.5,
        _ => 127.5,
    };
    values.iter().map(|&v| v.round() <= threshold).collect()
}

/// Area-averaging resample to `out_w × out_h`. Each output pixel is the
/// coverage-weighted mean of the input pixels under its footprint.
pub fn area_resize(img: &GrayImage, out_w: usize, out_h: usize) -> Vec<f64> {
    let (in_w, in_h) = (img.width() as usize, img.height() as usize);
    let xs = footprints(in_w, out_w);
    let ys = footprints(in_h, out_h);
    let mut out = vec![0.0; out_w * out_h];
    for (oy, yw) in ys.iter().enumerate() {
        for (ox, xw) in xs.iter().enumerate() {
            let mut acc = 0.0;
            let mut weight = 0.0;
            for &(iy, wy) in yw {
                for &(ix, wx) in xw {
                    let w = wy * wx;
                    acc += w * img.get_pixel(ix as u32, iy as u32)[0] as f64;
                    weight += w;
                }
            }
            out[oy * out_w + ox] = acc / weight;
        }
    }
    out
}

/// For each output cell, the input indices it covers with their overlap
/// lengths (in input pixel units).
fn footprints(n_in: usize, n_out: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = n_in as f64 / n_out as f64;
    (0..n_out)
        .map(|o| {
            let start = o as f64 * scale;
            let end = (o + 1) as f64 * scale;
            let first = start.floor() as usize;
            let last = (end.ceil() as usize).min(n_in);
            (first..last)
                .filter_map(|i| {
                    let overlap = end.min(i as f64 + 1.0) - start.max(i as f64);
                    (overlap > 1e-12).then_some((i, overlap))
                })
                .collect()
        })
        .collect()
}

/// Crops `(x, y, w, h)`, clamped to the image. Returns `None` when the clamped
/// region is empty.
pub fn crop(img: &GrayImage, x: i64, y: i64, w: i64, h: i64) -> Option<GrayImage> {
    let x0 = x.clamp(0, img.width() as i64);
    let y0 = y.clamp(0, img.height() as i64);
    let x1 = (x + w).clamp(0, img.width() as i64);
    let y1 = (y + h).clamp(0, img.height() as i64);
    if x1 <= x0 || y1 <= y0 {
        return None;
    }
    Some(image::imageops::crop_imm(img, x0 as u32, y0 as u32, (x1 - x0) as u32, (y1 - y0) as u32).to_image())
}

pub fn filled(w: u32, h: u32, value: u8) -> GrayImage {
    GrayImage::from_pixel(w, h, Luma([value]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn otsu_splits_bimodal() {
        let mut hist = [0u64; 256];
        hist[40] = 100;
        hist[200] = 300;
        let (t, m0, m1) = otsu(&hist).unwrap();
        assert!((40..200).contains(&t));
        assert_eq!((m0, m1), (40.0, 200.0));
    }

    #[test]
    fn otsu_single_level_is_none() {
        let mut hist = [0u64; 256];
        hist[90] = 10;
        assert!(otsu(&hist).is_none());
    }

    #[test]
    fn ink_mask_single_tone() {
        assert!(ink_mask(&[255.0; 16]).iter().all(|&b| !b));
        assert!(ink_mask(&[0.0; 16]).iter().all(|&b| b));
    }

    #[test]
    fn area_resize_preserves_mean_on_exact_halving() {
        let mut img = filled(4, 2, 0);
        img.put_pixel(1, 0, Luma([200]));
        img.put_pixel(2, 1, Luma([100]));
        let out = area_resize(&img, 2, 1);
        assert_eq!(out, vec![50.0, 25.0]);
    }

    #[test]
    fn area_resize_upsampling_replicates() {
        let img = filled(1, 1, 77);
        assert!(area_resize(&img, 3, 3).iter().all(|&v| (v - 77.0).abs() < 1e-9));
    }

    #[test]
    fn area_resize_fractional_weights() {
        // 3 → 2: output 0 covers [0, 1.5), output 1 covers [1.5, 3).
        let mut img = filled(3, 1, 0);
        img.put_pixel(1, 0, Luma([90]));
        let out = area_resize(&img, 2, 1);
        assert!((out[0] - 30.0).abs() < 1e-9);
        assert!((out[1] - 30.0).abs() < 1e-9);
    }

    #[test]
    fn crop_clamps() {
        let img = filled(10, 10, 5);
        assert_eq!(crop(&img, -2, 8, 5, 5).unwrap().dimensions(), (3, 2));
        assert!(crop(&img, 12, 0, 3, 3).is_none());
    }
}
