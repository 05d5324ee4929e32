//! Reads a placed barcode back out of a dataset image.
//!
//! The module grid is known from the sample metadata, so each module
//! centre is mapped through the recorded augmentation homography, the
//! image is sampled there, and the samples are thresholded with Otsu's
//! method before running the symbology decoder.

use idbsynth_core::bits::BitGrid;
use idbsynth_core::code128::{self, Code128Error};
use idbsynth_core::pdf417::{self, Pdf417Error};
use image::RgbImage;

use crate::augment::Homography;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ExtractError {
    #[error("pdf417: {0}")]
    Pdf417(#[from] Pdf417Error),
    #[error("code 128: {0}")]
    Code128(#[from] Code128Error),
}

/// Where the symbol was drawn before augmentation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModuleGrid {
    pub origin: (f64, f64),
    pub scale: f64,
    pub modules: (usize, usize),
}

/// Bilinear luminance at continuous coordinates, edges clamped.
pub fn luminance_at(image: &RgbImage, x: f64, y: f64) -> f64 {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let (u, v) = (x - 0.5, y - 0.5);
    let (x0, y0) = (u.floor(), v.floor());
    let (fx, fy) = (u - x0, v - y0);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let lum = |xx: i64, yy: i64| {
        let p = image.get_pixel(xx.clamp(0, w - 1) as u32, yy.clamp(0, h - 1) as u32);
        0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
    };
    let top = lum(x0, y0) + (lum(x0 + 1, y0) - lum(x0, y0)) * fx;
    let bottom = lum(x0, y0 + 1) + (lum(x0 + 1, y0 + 1) - lum(x0, y0 + 1)) * fx;
    top + (bottom - top) * fy
}

const OFFSETS: [f64; 3] = [-0.2, 0.0, 0.2];

/// Mean luminance of 3x3 points around the centre of module `(mx, my)`.
fn module_value(image: &RgbImage, grid: &ModuleGrid, map: &Homography, mx: usize, my: usize) -> f64 {
    let mut sum = 0.0;
    for dy in OFFSETS {
        for dx in OFFSETS {
            let x = grid.origin.0 + (mx as f64 + 0.5 + dx) * grid.scale;
            let y = grid.origin.1 + (my as f64 + 0.5 + dy) * grid.scale;
            let (u, v) = map.apply(x, y);
            sum += luminance_at(image, u, v);
        }
    }
    sum / 9.0
}

/// Otsu threshold over values in `0..=255`.
pub fn otsu_threshold(values: &[f64]) -> f64 {
    let mut hist = [0u64; 256];
    for &v in values {
        hist[v.round().clamp(0.0, 255.0) as usize] += 1;
    }
    let total = values.len() as f64;
    let sum_all: f64 = hist.iter().enumerate().map(|(i, &c)| i as f64 * c as f64).sum();
    let (mut w0, mut sum0) = (0.0, 0.0);
    let (mut best, mut best_t) = (-1.0, 127.5);
    for (t, &c) in hist.iter().enumerate() {
        w0 += c as f64;
        sum0 += t as f64 * c as f64;
        let w1 = total - w0;
        if w0 == 0.0 || w1 == 0.0 {
            continue;
        }
        let (m0, m1) = (sum0 / w0, (sum_all - sum0) / w1);
        let between = w0 * w1 * (m0 - m1) * (m0 - m1);
        if between > best {
            best = between;
            best_t = t as f64 + 0.5;
        }
    }
    best_t
}

fn thresholds(values: &[f64]) -> [f64; 3] {
    let t = otsu_threshold(values);
    [t, t - 20.0, t + 20.0]
}

/// Module samples in row-major order.
pub fn sample_modules(image: &RgbImage, grid: &ModuleGrid, map: &Homography) -> Vec<f64> {
    let (w, h) = grid.modules;
    let mut out = Vec::with_capacity(w * h);
    for my in 0..h {
        for mx in 0..w {
            out.push(module_value(image, grid, map, mx, my));
        }
    }
    out
}

pub fn read_pdf417(image: &RgbImage, grid: &ModuleGrid, map: &Homography) -> Result<Vec<u8>, ExtractError> {
    let values = sample_modules(image, grid, map);
    let (w, h) = grid.modules;
    let mut first_err = None;
    for t in thresholds(&values) {
        let mut bits = BitGrid::new(w, h);
        for (i, v) in values.iter().enumerate() {
            bits.set(i % w, i / w, *v < t);
        }
        match pdf417::decode_matrix(&bits) {
            Ok(p) => return Ok(p),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.expect("at least one threshold").into())
}

/// Averages each module column over the bar height, then decodes the runs.
pub fn read_code128(image: &RgbImage, grid: &ModuleGrid, map: &Homography) -> Result<String, ExtractError> {
    let (w, h) = grid.modules;
    let rows: Vec<usize> = (1..=7).map(|k| k * h / 8).collect();
    let columns: Vec<f64> = (0..w)
        .map(|mx| rows.iter().map(|&my| module_value(image, grid, map, mx, my)).sum::<f64>() / rows.len() as f64)
        .collect();
    let mut first_err = None;
    for t in thresholds(&columns) {
        let bits: Vec<bool> = columns.iter().map(|v| *v < t).collect();
        match code128::decode_runs(&runs_of(&bits)) {
            Ok(s) => return Ok(s),
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    Err(first_err.expect("at least one threshold").into())
}

/// Run lengths, bar first; leading light modules are dropped.
pub fn runs_of(bits: &[bool]) -> Vec<u32> {
    let start = bits.iter().position(|b| *b).unwrap_or(bits.len());
    let end = bits.iter().rposition(|b| *b).map_or(start, |i| i + 1);
    let mut runs = Vec::new();
    let mut prev = None;
    for &b in &bits[start..end] {
        if prev == Some(b) {
            *runs.last_mut().expect("run open") += 1;
        } else {
            runs.push(1);
            prev = Some(b);
        }
    }
    runs
}
