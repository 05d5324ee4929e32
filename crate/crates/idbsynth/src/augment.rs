//! Seeded photometric and geometric augmentation.
//!
//! Ops run in a fixed order: noise, Gaussian blur, motion blur, colour,
//! then rotation, scaling and perspective. The three geometric ops are
//! composed into one homography about the image centre and the image is
//! resampled once. Every draw is recorded in an [`AugmentTrace`];
//! [`apply_trace`] on the original image reproduces the output bit for bit.
//!
//! Coordinates are continuous: pixel `(i, j)` covers `[i, i+1) x [j, j+1)`
//! and its centre is `(i + 0.5, j + 0.5)`.

use std::path::Path;

use idbsynth_core::seed;
use image::{Rgb, RgbImage};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::compositor::PixelBox;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum AugmentError {
    #[error("bounding box collapsed to {area:.3} px after the geometric ops")]
    DegenerateBox { area: f64 },
    #[error("invalid augment policy: {0}")]
    InvalidPolicy(String),
}

/// `[low, high]`; draws are uniform and `high` is never reached unless
/// `low == high`.
pub type Range = [f64; 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseRule {
    pub probability: f64,
    /// Standard deviation in 8-bit intensity units.
    pub sigma: Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianBlurRule {
    pub probability: f64,
    /// Kernel standard deviation in pixels.
    pub radius: Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MotionBlurRule {
    pub probability: f64,
    pub length: Range,
    /// Degrees, 0 horizontal.
    pub angle: Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColorRule {
    pub probability: f64,
    pub brightness: Range,
    pub contrast: Range,
    pub saturation: Range,
    /// Degrees.
    pub hue: Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RotateRule {
    pub probability: f64,
    pub degrees: Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleRule {
    pub probability: f64,
    pub factor: Range,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerspectiveRule {
    pub probability: f64,
    /// Largest corner displacement as a fraction of the smaller image side.
    pub max_offset: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentPolicy {
    pub noise: NoiseRule,
    pub gaussian_blur: GaussianBlurRule,
    pub motion_blur: MotionBlurRule,
    pub color: ColorRule,
    pub rotate: RotateRule,
    pub scale: ScaleRule,
    pub perspective: PerspectiveRule,
}

impl Default for AugmentPolicy {
    fn default() -> Self {
        AugmentPolicy {
            noise: NoiseRule { probability: 0.5, sigma: [0.0, 25.0] },
            gaussian_blur: GaussianBlurRule { probability: 0.3, radius: [0.5, 2.0] },
            motion_blur: MotionBlurRule { probability: 0.1, length: [3.0, 15.0], angle: [0.0, 180.0] },
            color: ColorRule {
                probability: 0.5,
                brightness: [-0.3, 0.3],
                contrast: [-0.3, 0.3],
                saturation: [-0.3, 0.3],
                hue: [-18.0, 18.0],
            },
            rotate: RotateRule { probability: 0.5, degrees: [-15.0, 15.0] },
            scale: ScaleRule { probability: 0.5, factor: [0.85, 1.15] },
            perspective: PerspectiveRule { probability: 0.3, max_offset: 0.05 },
        }
    }
}

impl AugmentPolicy {
    /// Every op disabled.
    pub fn none() -> AugmentPolicy {
        AugmentPolicy::default().with_probability(0.0)
    }

    /// The same ranges with every op at probability `p`.
    pub fn with_probability(mut self, p: f64) -> AugmentPolicy {
        self.noise.probability = p;
        self.gaussian_blur.probability = p;
        self.motion_blur.probability = p;
        self.color.probability = p;
        self.rotate.probability = p;
        self.scale.probability = p;
        self.perspective.probability = p;
        self
    }

    pub fn load(path: &Path) -> Result<AugmentPolicy, AugmentError> {
        let text = std::fs::read_to_string(path).map_err(|e| AugmentError::InvalidPolicy(format!("{}: {e}", path.display())))?;
        let p: AugmentPolicy =
            serde_json::from_str(&text).map_err(|e| AugmentError::InvalidPolicy(format!("{}: {e}", path.display())))?;
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        fn range(name: &str, r: Range, lo: f64, hi: f64, open_top: bool) -> Result<(), AugmentError> {
            let top_ok = if open_top { r[1] <= hi && (r[0] < hi) } else { r[1] <= hi };
            if !(r[0] >= lo && r[0] <= r[1] && top_ok) {
                return Err(AugmentError::InvalidPolicy(format!("{name} range {r:?} outside [{lo}, {hi}]")));
            }
            Ok(())
        }
        let probs = [
            ("noise", self.noise.probability),
            ("gaussian_blur", self.gaussian_blur.probability),
            ("motion_blur", self.motion_blur.probability),
            ("color", self.color.probability),
            ("rotate", self.rotate.probability),
            ("scale", self.scale.probability),
            ("perspective", self.perspective.probability),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(AugmentError::InvalidPolicy(format!("{name} probability {p} outside [0, 1]")));
            }
        }
        range("noise.sigma", self.noise.sigma, 0.0, 25.0, false)?;
        range("gaussian_blur.radius", self.gaussian_blur.radius, 0.5, 2.0, false)?;
        range("motion_blur.length", self.motion_blur.length, 3.0, 15.0, false)?;
        range("motion_blur.angle", self.motion_blur.angle, 0.0, 180.0, true)?;
        range("color.brightness", self.color.brightness, -0.3, 0.3, false)?;
        range("color.contrast", self.color.contrast, -0.3, 0.3, false)?;
        range("color.saturation", self.color.saturation, -0.3, 0.3, false)?;
        range("color.hue", self.color.hue, -18.0, 18.0, false)?;
        range("rotate.degrees", self.rotate.degrees, -15.0, 15.0, false)?;
        range("scale.factor", self.scale.factor, 0.85, 1.15, false)?;
        if !(0.0..=0.05).contains(&self.perspective.max_offset) {
            return Err(AugmentError::InvalidPolicy(format!("perspective.max_offset {} outside [0, 0.05]", self.perspective.max_offset)));
        }
        Ok(())
    }
}

/// One applied op with its drawn parameters.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum AugmentOp {
    Noise { sigma: f64, seed: u64 },
    GaussianBlur { radius: f64 },
    MotionBlur { length: f64, angle: f64 },
    Color { brightness: f64, contrast: f64, saturation: f64, hue: f64 },
    /// Counterclockwise as displayed.
    Rotate { degrees: f64 },
    Scale { factor: f64 },
    /// Pixel displacement of the top-left, top-right, bottom-right and
    /// bottom-left image corners.
    Perspective { offsets: [[f64; 2]; 4] },
}

impl AugmentOp {
    pub const fn name(&self) -> &'static str {
        match self {
            AugmentOp::Noise { .. } => "noise",
            AugmentOp::GaussianBlur { .. } => "gaussian_blur",
            AugmentOp::MotionBlur { .. } => "motion_blur",
            AugmentOp::Color { .. } => "color",
            AugmentOp::Rotate { .. } => "rotate",
            AugmentOp::Scale { .. } => "scale",
            AugmentOp::Perspective { .. } => "perspective",
        }
    }

    pub const fn is_geometric(&self) -> bool {
        matches!(self, AugmentOp::Rotate { .. } | AugmentOp::Scale { .. } | AugmentOp::Perspective { .. })
    }
}

pub const OP_ORDER: [&str; 7] = ["noise", "gaussian_blur", "motion_blur", "color", "rotate", "scale", "perspective"];

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AugmentTrace {
    pub ops: Vec<AugmentOp>,
}

impl AugmentTrace {
    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.ops.iter().map(AugmentOp::name).collect()
    }

    /// The composed geometric map for an image of `w` x `h` pixels.
    pub fn homography(&self, w: u32, h: u32) -> Homography {
        self.ops.iter().fold(Homography::IDENTITY, |acc, op| match op_homography(op, w, h) {
            Some(m) => m.then_after(&acc),
            None => acc,
        })
    }
}

/// Row-major 3x3 projective map on continuous pixel coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Homography(pub [f64; 9]);

impl Homography {
    pub const IDENTITY: Homography = Homography([1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);

    pub fn translate(dx: f64, dy: f64) -> Homography {
        Homography([1.0, 0.0, dx, 0.0, 1.0, dy, 0.0, 0.0, 1.0])
    }

    /// Rotation by `degrees` counterclockwise as displayed (y points down)
    /// about `(cx, cy)`.
    pub fn rotate_about(degrees: f64, cx: f64, cy: f64) -> Homography {
        let (s, c) = degrees.to_radians().sin_cos();
        let r = Homography([c, s, 0.0, -s, c, 0.0, 0.0, 0.0, 1.0]);
        Homography::translate(cx, cy).mul(&r).mul(&Homography::translate(-cx, -cy))
    }

    pub fn scale_about(f: f64, cx: f64, cy: f64) -> Homography {
        let m = Homography([f, 0.0, 0.0, 0.0, f, 0.0, 0.0, 0.0, 1.0]);
        Homography::translate(cx, cy).mul(&m).mul(&Homography::translate(-cx, -cy))
    }

    /// The map sending each `src[i]` to `dst[i]`.
    pub fn from_quad(src: [(f64, f64); 4], dst: [(f64, f64); 4]) -> Option<Homography> {
        let mut a = [[0.0f64; 9]; 8];
        for i in 0..4 {
            let ((x, y), (u, v)) = (src[i], dst[i]);
            a[2 * i] = [x, y, 1.0, 0.0, 0.0, 0.0, -u * x, -u * y, u];
            a[2 * i + 1] = [0.0, 0.0, 0.0, x, y, 1.0, -v * x, -v * y, v];
        }
        // Gauss-Jordan with partial pivoting on the 8x8 system.
        for col in 0..8 {
            let pivot = (col..8).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
            if a[pivot][col].abs() < 1e-12 {
                return None;
            }
            a.swap(col, pivot);
            let p = a[col][col];
            for k in col..9 {
                a[col][k] /= p;
            }
            for row in 0..8 {
                if row != col {
                    let f = a[row][col];
                    if f != 0.0 {
                        for k in col..9 {
                            a[row][k] -= f * a[col][k];
                        }
                    }
                }
            }
        }
        let h: Vec<f64> = a.iter().map(|r| r[8]).collect();
        Some(Homography([h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0]))
    }

    pub fn mul(&self, o: &Homography) -> Homography {
        let (a, b) = (&self.0, &o.0);
        let mut m = [0.0; 9];
        for r in 0..3 {
            for c in 0..3 {
                m[r * 3 + c] = (0..3).map(|k| a[r * 3 + k] * b[k * 3 + c]).sum();
            }
        }
        Homography(m)
    }

    /// `self` applied after `first`.
    pub fn then_after(&self, first: &Homography) -> Homography {
        self.mul(first)
    }

    pub fn inverse(&self) -> Option<Homography> {
        let m = &self.0;
        let cof = [
            m[4] * m[8] - m[5] * m[7],
            m[2] * m[7] - m[1] * m[8],
            m[1] * m[5] - m[2] * m[4],
            m[5] * m[6] - m[3] * m[8],
            m[0] * m[8] - m[2] * m[6],
            m[2] * m[3] - m[0] * m[5],
            m[3] * m[7] - m[4] * m[6],
            m[1] * m[6] - m[0] * m[7],
            m[0] * m[4] - m[1] * m[3],
        ];
        let det = m[0] * cof[0] + m[1] * cof[3] + m[2] * cof[6];
        if det.abs() < 1e-15 {
            return None;
        }
        Some(Homography(cof.map(|c| c / det)))
    }

    pub fn apply(&self, x: f64, y: f64) -> (f64, f64) {
        let m = &self.0;
        let w = m[6] * x + m[7] * y + m[8];
        ((m[0] * x + m[1] * y + m[2]) / w, (m[3] * x + m[4] * y + m[5]) / w)
    }

    pub fn is_identity(&self) -> bool {
        *self == Homography::IDENTITY
    }
}

fn op_homography(op: &AugmentOp, w: u32, h: u32) -> Option<Homography> {
    let (cx, cy) = (w as f64 / 2.0, h as f64 / 2.0);
    match *op {
        AugmentOp::Rotate { degrees } if degrees != 0.0 => Some(Homography::rotate_about(degrees, cx, cy)),
        AugmentOp::Scale { factor } if factor != 1.0 => Some(Homography::scale_about(factor, cx, cy)),
        AugmentOp::Perspective { offsets } if offsets.iter().flatten().any(|v| *v != 0.0) => {
            let (w, h) = (w as f64, h as f64);
            let src = [(0.0, 0.0), (w, 0.0), (w, h), (0.0, h)];
            let mut dst = src;
            for (d, o) in dst.iter_mut().zip(offsets) {
                d.0 += o[0];
                d.1 += o[1];
            }
            Homography::from_quad(src, dst)
        }
        _ => None,
    }
}

fn to_u8(v: f32) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Adds i.i.d. normal noise to every channel of every pixel.
pub fn add_gaussian_noise(image: &RgbImage, sigma: f64, seed: u64) -> RgbImage {
    let mut out = image.clone();
    if sigma == 0.0 {
        return out;
    }
    let mut rng = seed::rng(seed);
    for v in out.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v = (*v as f64 + sigma * z).round().clamp(0.0, 255.0) as u8;
    }
    out
}

/// Normalized Gaussian taps for offsets `-half..=half`, truncated at 3 sigma.
pub fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let half = (3.0 * sigma).ceil().max(0.0) as i64;
    let raw: Vec<f64> = (-half..=half).map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp()).collect();
    let sum: f64 = raw.iter().sum();
    raw.iter().map(|v| (v / sum) as f32).collect()
}

/// Separable Gaussian blur with `sigma = radius`; edges clamp.
pub fn gaussian_blur(image: &RgbImage, radius: f64) -> RgbImage {
    if radius <= 0.0 {
        return image.clone();
    }
    let kernel = gaussian_kernel(radius);
    let half = (kernel.len() / 2) as i64;
    let (w, h) = (image.width() as i64, image.height() as i64);
    let src = image.as_raw();
    let mut tmp = vec![0f32; src.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f32; 3];
            for (k, wt) in kernel.iter().enumerate() {
                let sx = (x + k as i64 - half).clamp(0, w - 1);
                let i = ((y * w + sx) * 3) as usize;
                for c in 0..3 {
                    acc[c] += wt * src[i + c] as f32;
                }
            }
            let o = ((y * w + x) * 3) as usize;
            tmp[o..o + 3].copy_from_slice(&acc);
        }
    }
    let mut out = RgbImage::new(image.width(), image.height());
    let dst: &mut [u8] = &mut out;
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f32; 3];
            for (k, wt) in kernel.iter().enumerate() {
                let sy = (y + k as i64 - half).clamp(0, h - 1);
                let i = ((sy * w + x) * 3) as usize;
                for c in 0..3 {
                    acc[c] += wt * tmp[i + c];
                }
            }
            let o = ((y * w + x) * 3) as usize;
            for c in 0..3 {
                dst[o + c] = to_u8(acc[c]);
            }
        }
    }
    out
}

/// Bilinear sample at pixel-index coordinates with clamped edges.
fn sample_clamped(src: &[u8], w: i64, h: i64, x: f64, y: f64) -> [f32; 3] {
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = ((x - x0) as f32, (y - y0) as f32);
    let (x0, y0) = (x0 as i64, y0 as i64);
    let at = |xx: i64, yy: i64| {
        let i = ((yy.clamp(0, h - 1) * w + xx.clamp(0, w - 1)) * 3) as usize;
        [src[i] as f32, src[i + 1] as f32, src[i + 2] as f32]
    };
    let (a, b, c, d) = (at(x0, y0), at(x0 + 1, y0), at(x0, y0 + 1), at(x0 + 1, y0 + 1));
    let mut out = [0f32; 3];
    for k in 0..3 {
        let top = a[k] + (b[k] - a[k]) * fx;
        let bottom = c[k] + (d[k] - c[k]) * fx;
        out[k] = top + (bottom - top) * fy;
    }
    out
}

/// Averages `round(length)` equally weighted taps spaced one pixel apart
/// along a line through each pixel at `angle` degrees.
pub fn motion_blur(image: &RgbImage, length: f64, angle: f64) -> RgbImage {
    let n = length.round().max(1.0) as usize;
    if n == 1 {
        return image.clone();
    }
    let (s, c) = angle.to_radians().sin_cos();
    let taps: Vec<(f64, f64)> = (0..n)
        .map(|k| {
            let t = k as f64 - (n as f64 - 1.0) / 2.0;
            (t * c, -t * s)
        })
        .collect();
    let (w, h) = (image.width() as i64, image.height() as i64);
    let src = image.as_raw();
    let mut out = RgbImage::new(image.width(), image.height());
    let dst: &mut [u8] = &mut out;
    let inv = 1.0 / n as f32;
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f32; 3];
            for &(dx, dy) in &taps {
                let v = sample_clamped(src, w, h, x as f64 + dx, y as f64 + dy);
                for k in 0..3 {
                    acc[k] += v[k];
                }
            }
            let o = ((y * w + x) * 3) as usize;
            for k in 0..3 {
                dst[o + k] = to_u8(acc[k] * inv);
            }
        }
    }
    out
}

fn rotate_hue(rgb: [f32; 3], degrees: f32) -> [f32; 3] {
    let [r, g, b] = rgb;
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta <= 0.0 {
        return rgb;
    }
    let mut hue = if max == r {
        60.0 * ((g - b) / delta)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    hue = (hue + degrees).rem_euclid(360.0);
    let sat = delta / max;
    let c = max * sat;
    let x = c * (1.0 - ((hue / 60.0).rem_euclid(2.0) - 1.0).abs());
    let m = max - c;
    let (r1, g1, b1) = match (hue / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r1 + m, g1 + m, b1 + m]
}

/// Brightness, contrast, saturation, then hue; each delta is a fraction
/// except `hue`, in degrees. Values clamp after every stage and round once.
///
/// * brightness: `v + b * 255`
/// * contrast: `(v - 127.5) * (1 + c) + 127.5`
/// * saturation: `L + (v - L) * (1 + s)` with `L = 0.299 R + 0.587 G + 0.114 B`
/// * hue: rotation of the HSV hue angle
///
/// Rounding is half away from zero.
pub fn adjust_color(image: &RgbImage, brightness: f64, contrast: f64, saturation: f64, hue: f64) -> RgbImage {
    let mut out = image.clone();
    if brightness == 0.0 && contrast == 0.0 && saturation == 0.0 && hue == 0.0 {
        return out;
    }
    let (b, c, s, h) = (brightness as f32, contrast as f32, saturation as f32, hue as f32);
    let clamp = |v: f32| v.clamp(0.0, 255.0);
    for px in out.pixels_mut() {
        let mut v = [px[0] as f32, px[1] as f32, px[2] as f32];
        if b != 0.0 {
            v = v.map(|x| clamp(x + b * 255.0));
        }
        if c != 0.0 {
            v = v.map(|x| clamp((x - 127.5) * (1.0 + c) + 127.5));
        }
        if s != 0.0 {
            let l = 0.299 * v[0] + 0.587 * v[1] + 0.114 * v[2];
            v = v.map(|x| clamp(l + (x - l) * (1.0 + s)));
        }
        if h != 0.0 {
            v = rotate_hue(v, h).map(clamp);
        }
        *px = Rgb(v.map(to_u8));
    }
    out
}

/// Resamples through `map` (source to destination), bilinear, white outside
/// the source.
pub fn warp(image: &RgbImage, map: &Homography) -> RgbImage {
    let inv = map.inverse().expect("augment maps are invertible");
    let (w, h) = (image.width() as i64, image.height() as i64);
    let src = image.as_raw();
    let mut out = RgbImage::new(image.width(), image.height());
    let dst: &mut [u8] = &mut out;
    let at = |x: i64, y: i64, k: usize| -> f32 {
        if x < 0 || y < 0 || x >= w || y >= h {
            255.0
        } else {
            src[((y * w + x) * 3) as usize + k] as f32
        }
    };
    for y in 0..h {
        for x in 0..w {
            let (sx, sy) = inv.apply(x as f64 + 0.5, y as f64 + 0.5);
            let (u, v) = (sx - 0.5, sy - 0.5);
            let o = ((y * w + x) * 3) as usize;
            if !(u > -1.0 && v > -1.0 && u < w as f64 && v < h as f64) {
                dst[o..o + 3].fill(255);
                continue;
            }
            let (x0, y0) = (u.floor(), v.floor());
            let (fx, fy) = ((u - x0) as f32, (v - y0) as f32);
            let (x0, y0) = (x0 as i64, y0 as i64);
            for k in 0..3 {
                let top = at(x0, y0, k) + (at(x0 + 1, y0, k) - at(x0, y0, k)) * fx;
                let bottom = at(x0, y0 + 1, k) + (at(x0 + 1, y0 + 1, k) - at(x0, y0 + 1, k)) * fx;
                dst[o + k] = to_u8(top + (bottom - top) * fy);
            }
        }
    }
    out
}

/// Axis-aligned hull of the mapped corners of `bbox`, clipped to the image.
pub fn transform_bbox(bbox: &PixelBox, map: &Homography, w: u32, h: u32) -> Result<PixelBox, AugmentError> {
    let pts = bbox.corners().map(|(x, y)| map.apply(x, y));
    let hull = PixelBox {
        x0: pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        y0: pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min),
        x1: pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
        y1: pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max),
    };
    let clipped = hull.clip(w, h);
    if !(clipped.area() >= 1.0) {
        return Err(AugmentError::DegenerateBox { area: clipped.area() });
    }
    Ok(clipped)
}

/// One geometric op on an image and its box.
pub fn geometric(image: &RgbImage, bbox: &PixelBox, op: &AugmentOp) -> Result<(RgbImage, PixelBox), AugmentError> {
    let trace = AugmentTrace { ops: vec![op.clone()] };
    let out = apply_trace(image, bbox, &trace)?;
    Ok((out.image, out.bbox))
}

#[derive(Clone, Debug)]
pub struct Augmented {
    pub image: RgbImage,
    pub bbox: PixelBox,
    /// Source-to-output map of the geometric ops.
    pub homography: Homography,
}

/// Replays `trace` on `image`.
pub fn apply_trace(image: &RgbImage, bbox: &PixelBox, trace: &AugmentTrace) -> Result<Augmented, AugmentError> {
    let (w, h) = image.dimensions();
    let map = trace.homography(w, h);
    let new_box = if map.is_identity() { *bbox } else { transform_bbox(bbox, &map, w, h)? };
    let mut img = image.clone();
    for op in &trace.ops {
        img = match *op {
            AugmentOp::Noise { sigma, seed } => add_gaussian_noise(&img, sigma, seed),
            AugmentOp::GaussianBlur { radius } => gaussian_blur(&img, radius),
            AugmentOp::MotionBlur { length, angle } => motion_blur(&img, length, angle),
            AugmentOp::Color { brightness, contrast, saturation, hue } => {
                adjust_color(&img, brightness, contrast, saturation, hue)
            }
            _ => continue,
        };
    }
    if !map.is_identity() {
        img = warp(&img, &map);
    }
    Ok(Augmented { image: img, bbox: new_box, homography: map })
}

fn uniform<R: Rng>(rng: &mut R, r: Range) -> f64 {
    if r[0] == r[1] {
        r[0]
    } else {
        r[0] + (r[1] - r[0]) * rng.random::<f64>()
    }
}

/// Draws which ops fire and their parameters, in canonical order.
pub fn sample_trace(policy: &AugmentPolicy, w: u32, h: u32, seed: u64) -> AugmentTrace {
    let mut rng = seed::rng(seed);
    let mut ops = Vec::new();
    if rng.random_bool(policy.noise.probability) {
        ops.push(AugmentOp::Noise { sigma: uniform(&mut rng, policy.noise.sigma), seed: rng.random() });
    }
    if rng.random_bool(policy.gaussian_blur.probability) {
        ops.push(AugmentOp::GaussianBlur { radius: uniform(&mut rng, policy.gaussian_blur.radius) });
    }
    if rng.random_bool(policy.motion_blur.probability) {
        let length = uniform(&mut rng, policy.motion_blur.length);
        ops.push(AugmentOp::MotionBlur { length, angle: uniform(&mut rng, policy.motion_blur.angle) });
    }
    if rng.random_bool(policy.color.probability) {
        let c = &policy.color;
        ops.push(AugmentOp::Color {
            brightness: uniform(&mut rng, c.brightness),
            contrast: uniform(&mut rng, c.contrast),
            saturation: uniform(&mut rng, c.saturation),
            hue: uniform(&mut rng, c.hue),
        });
    }
    if rng.random_bool(policy.rotate.probability) {
        ops.push(AugmentOp::Rotate { degrees: uniform(&mut rng, policy.rotate.degrees) });
    }
    if rng.random_bool(policy.scale.probability) {
        ops.push(AugmentOp::Scale { factor: uniform(&mut rng, policy.scale.factor) });
    }
    if rng.random_bool(policy.perspective.probability) {
        let max = policy.perspective.max_offset * w.min(h) as f64;
        let mut offsets = [[0.0; 2]; 4];
        for o in &mut offsets {
            let r = max * rng.random::<f64>();
            let phi = std::f64::consts::TAU * rng.random::<f64>();
            *o = [r * phi.cos(), r * phi.sin()];
        }
        ops.push(AugmentOp::Perspective { offsets });
    }
    AugmentTrace { ops }
}

/// Draws a trace from `policy` and applies it.
pub fn augment_sample(
    image: &RgbImage,
    bbox: &PixelBox,
    policy: &AugmentPolicy,
    seed: u64,
) -> Result<(Augmented, AugmentTrace), AugmentError> {
    let trace = sample_trace(policy, image.width(), image.height(), seed);
    let out = apply_trace(image, bbox, &trace)?;
    Ok((out, trace))
}
