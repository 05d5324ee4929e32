//! Barcode placement on templates, detection labels and the dataset split.

use std::path::PathBuf;

use idbsynth_core::bits::BitGrid;
use idbsynth_core::pdf417::{self, Columns, EcLevel, Pdf417Error, Pdf417Symbol};
use idbsynth_core::record::DocumentKind;
use idbsynth_core::seed;
use image::{Rgb, RgbImage};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::template::{Rect, Template};

#[derive(Debug, thiserror::Error)]
pub enum CompositeError {
    #[error("template {template}: placement {placement_w}x{placement_h} px cannot hold {needed_w}x{needed_h} modules")]
    PlacementTooSmall { template: String, placement_w: u32, placement_h: u32, needed_w: usize, needed_h: usize },
    #[error("template {template}: {message}")]
    InvalidTemplate { template: String, message: String },
    #[error("template image {path}: {message}")]
    Image { path: PathBuf, message: String },
    #[error("template manifest: {0}")]
    Manifest(String),
    #[error("symbol has no modules")]
    EmptySymbol,
    #[error(transparent)]
    Pdf417(#[from] Pdf417Error),
}

/// Detection class; the document kind lives in the sample metadata.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Symbology {
    Pdf417,
    Code128,
}

impl Symbology {
    pub const fn class_id(self) -> u8 {
        match self {
            Symbology::Pdf417 => 0,
            Symbology::Code128 => 1,
        }
    }

    pub fn from_class_id(id: u8) -> Option<Symbology> {
        match id {
            0 => Some(Symbology::Pdf417),
            1 => Some(Symbology::Code128),
            _ => None,
        }
    }

    /// Blank modules kept on every side of the symbol.
    pub const fn quiet_zone(self) -> usize {
        match self {
            Symbology::Pdf417 => 2,
            Symbology::Code128 => 10,
        }
    }
}

/// Code 128 bar height in modules.
pub fn code128_bar_height(width_modules: usize) -> usize {
    (width_modules * 15).div_ceil(100).max(20)
}

/// Linear symbol as a grid: every module row repeats the bar pattern.
pub fn code128_grid(runs: &[u8]) -> BitGrid {
    let width: usize = runs.iter().map(|&r| r as usize).sum();
    let mut row = Vec::with_capacity(width);
    for (i, &r) in runs.iter().enumerate() {
        row.extend(std::iter::repeat_n(i % 2 == 0, r as usize));
    }
    let height = code128_bar_height(width);
    let mut grid = BitGrid::new(width, height);
    for y in 0..height {
        grid.row_mut(y).copy_from_slice(&row);
    }
    grid
}

/// Largest integer module size at which the symbol and its quiet zone fit.
pub fn fit_scale(modules_w: usize, modules_h: usize, quiet: usize, placement: Rect) -> Option<u32> {
    let sw = (modules_w + 2 * quiet) as u64;
    let sh = (modules_h + 2 * quiet) as u64;
    let s = (placement.w as u64 / sw).min(placement.h as u64 / sh);
    (s >= 1).then_some(s as u32)
}

/// Pixel rectangle in continuous coordinates, `x1`/`y1` exclusive.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PixelBox {
    pub x0: f64,
    pub y0: f64,
    pub x1: f64,
    pub y1: f64,
}

impl PixelBox {
    pub fn width(&self) -> f64 {
        self.x1 - self.x0
    }

    pub fn height(&self) -> f64 {
        self.y1 - self.y0
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn corners(&self) -> [(f64, f64); 4] {
        [(self.x0, self.y0), (self.x1, self.y0), (self.x1, self.y1), (self.x0, self.y1)]
    }

    pub fn clip(&self, w: u32, h: u32) -> PixelBox {
        PixelBox {
            x0: self.x0.clamp(0.0, w as f64),
            y0: self.y0.clamp(0.0, h as f64),
            x1: self.x1.clamp(0.0, w as f64),
            y1: self.y1.clamp(0.0, h as f64),
        }
    }

    pub fn normalized(&self, w: u32, h: u32) -> BBox {
        let (w, h) = (w as f64, h as f64);
        BBox {
            cx: (self.x0 + self.x1) / 2.0 / w,
            cy: (self.y0 + self.y1) / 2.0 / h,
            w: self.width() / w,
            h: self.height() / h,
        }
    }
}

/// Normalized centre and size.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BBox {
    pub cx: f64,
    pub cy: f64,
    pub w: f64,
    pub h: f64,
}

impl BBox {
    /// Strictly inside the unit square.
    pub fn is_valid(&self) -> bool {
        let inside = |c: f64, half: f64| c - half > 0.0 && c + half < 1.0;
        self.w > 0.0 && self.h > 0.0 && inside(self.cx, self.w / 2.0) && inside(self.cy, self.h / 2.0)
    }

    pub fn to_pixels(&self, w: u32, h: u32) -> PixelBox {
        let (w, h) = (w as f64, h as f64);
        PixelBox {
            x0: (self.cx - self.w / 2.0) * w,
            y0: (self.cy - self.h / 2.0) * h,
            x1: (self.cx + self.w / 2.0) * w,
            y1: (self.cy + self.h / 2.0) * h,
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
#[error("bad annotation line {line:?}: {reason}")]
pub struct AnnotationError {
    pub line: String,
    pub reason: &'static str,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Annotation {
    pub class_id: u8,
    pub bbox: BBox,
}

impl Annotation {
    /// `class cx cy w h`, six decimals.
    pub fn to_line(&self) -> String {
        let b = self.bbox;
        format!("{} {:.6} {:.6} {:.6} {:.6}", self.class_id, b.cx, b.cy, b.w, b.h)
    }

    pub fn parse(line: &str) -> Result<Annotation, AnnotationError> {
        let err = |reason| AnnotationError { line: line.to_string(), reason };
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() != 5 {
            return Err(err("expected five fields"));
        }
        let class_id: u8 = parts[0].parse().map_err(|_| err("bad class id"))?;
        Symbology::from_class_id(class_id).ok_or(err("unknown class id"))?;
        let mut v = [0.0f64; 4];
        for (slot, p) in v.iter_mut().zip(&parts[1..]) {
            *slot = p.parse().map_err(|_| err("bad number"))?;
        }
        Ok(Annotation { class_id, bbox: BBox { cx: v[0], cy: v[1], w: v[2], h: v[3] } })
    }
}

/// A symbol drawn onto a template.
#[derive(Clone, Debug)]
pub struct Placed {
    pub image: RgbImage,
    pub scale: u32,
    /// Top-left pixel of the first module.
    pub origin: (u32, u32),
    /// Symbol size in modules, quiet zone excluded.
    pub modules: (usize, usize),
    pub quiet: usize,
    /// Symbol extent without the quiet zone.
    pub bbox: PixelBox,
}

impl Placed {
    pub fn annotation(&self, symbology: Symbology) -> Annotation {
        Annotation { class_id: symbology.class_id(), bbox: self.bbox.normalized(self.image.width(), self.image.height()) }
    }
}

/// Draws `symbol` centred in the template placement at the largest integer
/// scale that fits with `quiet` blank modules on every side.
pub fn overlay(template: &Template, symbol: &BitGrid, quiet: usize) -> Result<Placed, CompositeError> {
    if symbol.width() == 0 || symbol.height() == 0 {
        return Err(CompositeError::EmptySymbol);
    }
    let p = template.spec.placement;
    let scale = fit_scale(symbol.width(), symbol.height(), quiet, p).ok_or_else(|| CompositeError::PlacementTooSmall {
        template: template.spec.template_id.clone(),
        placement_w: p.w,
        placement_h: p.h,
        needed_w: symbol.width() + 2 * quiet,
        needed_h: symbol.height() + 2 * quiet,
    })?;
    let s = scale;
    let block_w = (symbol.width() + 2 * quiet) as u32 * s;
    let block_h = (symbol.height() + 2 * quiet) as u32 * s;
    let bx = p.x + (p.w - block_w) / 2;
    let by = p.y + (p.h - block_h) / 2;
    let mut image = template.image.clone();
    for y in by..by + block_h {
        for x in bx..bx + block_w {
            image.put_pixel(x, y, Rgb([255; 3]));
        }
    }
    let origin = (bx + quiet as u32 * s, by + quiet as u32 * s);
    for my in 0..symbol.height() {
        let row = symbol.row(my);
        for (mx, _) in row.iter().enumerate().filter(|(_, d)| **d) {
            let (x0, y0) = (origin.0 + mx as u32 * s, origin.1 + my as u32 * s);
            for y in y0..y0 + s {
                for x in x0..x0 + s {
                    image.put_pixel(x, y, Rgb([0; 3]));
                }
            }
        }
    }
    let bbox = PixelBox {
        x0: origin.0 as f64,
        y0: origin.1 as f64,
        x1: (origin.0 + symbol.width() as u32 * s) as f64,
        y1: (origin.1 + symbol.height() as u32 * s) as f64,
    };
    Ok(Placed { image, scale, origin, modules: (symbol.width(), symbol.height()), quiet, bbox })
}

/// Encodes at the column count that gives the largest module scale in
/// `placement`; ties go to fewer columns.
pub fn fit_pdf417(payload: &[u8], ec_level: EcLevel, placement: Rect, quiet: usize) -> Result<(Pdf417Symbol, u32), CompositeError> {
    let mut best: Option<(Pdf417Symbol, u32)> = None;
    let mut first_err = None;
    for c in 1..=pdf417::MAX_COLUMNS {
        match pdf417::encode(payload, ec_level, Columns::Fixed(c)) {
            Ok(sym) => {
                if let Some(s) = fit_scale(sym.matrix.width(), sym.matrix.height(), quiet, placement) {
                    if best.as_ref().is_none_or(|(_, b)| s > *b) {
                        best = Some((sym, s));
                    }
                }
            }
            Err(Pdf417Error::RowLimitExceeded { .. }) => {}
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    if let Some(found) = best {
        return Ok(found);
    }
    if let Some(e) = first_err {
        return Err(e.into());
    }
    Err(CompositeError::PlacementTooSmall {
        template: String::new(),
        placement_w: placement.w,
        placement_h: placement.h,
        needed_w: pdf417::symbol_width(pdf417::MAX_COLUMNS) + 2 * quiet,
        needed_h: pdf417::MIN_ROWS * pdf417::ROW_HEIGHT + 2 * quiet,
    })
}

/// Sample indices per split, each list in input order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
}

/// Stratified split: within each kind the indices are shuffled with a
/// stream derived from `seed` and the kind, and the first
/// `floor(train_fraction * n)` go to training.
pub fn split_dataset(kinds: &[DocumentKind], train_fraction: f64, seed: u64) -> Split {
    let mut train = vec![false; kinds.len()];
    for (ki, kind) in DocumentKind::ALL.into_iter().enumerate() {
        let mut idx: Vec<usize> = (0..kinds.len()).filter(|&i| kinds[i] == kind).collect();
        let mut rng = seed::rng(seed::mix(seed, ki as u64));
        idx.shuffle(&mut rng);
        // The epsilon keeps products like 0.29 * 100 from flooring to 28.
        let take = ((train_fraction * idx.len() as f64) + 1e-9).floor() as usize;
        for &i in idx.iter().take(take) {
            train[i] = true;
        }
    }
    let (t, v): (Vec<usize>, Vec<usize>) = (0..kinds.len()).partition(|&i| train[i]);
    Split { train: t, val: v }
}
