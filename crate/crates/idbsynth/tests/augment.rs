use idbsynth::augment::{
    add_gaussian_noise, adjust_color, apply_trace, augment_sample, gaussian_blur, geometric, motion_blur, sample_trace,
    AugmentError, AugmentOp, AugmentPolicy, AugmentTrace, Homography, OP_ORDER,
};
use idbsynth::compositor::{fit_pdf417, overlay, PixelBox};
use idbsynth::template::{Rect, Template};
use idbsynth::compositor::Symbology;
use idbsynth_core::pdf417::EcLevel;
use idbsynth_core::record::DocumentKind;
use image::{Rgb, RgbImage};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};

fn constant(w: u32, h: u32, v: u8) -> RgbImage {
    RgbImage::from_pixel(w, h, Rgb([v; 3]))
}

fn random_image(w: u32, h: u32, seed: u64) -> RgbImage {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    RgbImage::from_fn(w, h, |_, _| Rgb([rng.random(), rng.random(), rng.random()]))
}

fn mean(img: &RgbImage) -> f64 {
    img.as_raw().iter().map(|&v| v as f64).sum::<f64>() / img.as_raw().len() as f64
}

fn boxed(x0: f64, y0: f64, x1: f64, y1: f64) -> PixelBox {
    PixelBox { x0, y0, x1, y1 }
}

#[test]
fn noise_sigma_zero_is_identity() {
    let img = random_image(64, 48, 1);
    assert_eq!(add_gaussian_noise(&img, 0.0, 99), img);
}

#[test]
fn noise_standard_deviation() {
    let img = constant(320, 320, 128);
    let out = add_gaussian_noise(&img, 10.0, 5);
    let vals: Vec<f64> = out.pixels().map(|p| p[0] as f64).collect();
    assert!(vals.len() >= 100_000);
    let m = vals.iter().sum::<f64>() / vals.len() as f64;
    let sd = (vals.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / vals.len() as f64).sqrt();
    assert!((9.0..=11.0).contains(&sd), "{sd}");
    assert!((m - 128.0).abs() < 0.2, "{m}");
    assert_eq!(out, add_gaussian_noise(&img, 10.0, 5));
    assert_ne!(out, add_gaussian_noise(&img, 10.0, 6));
}

#[test]
fn blur_preserves_constant_and_mean() {
    let c = constant(50, 40, 77);
    assert_eq!(gaussian_blur(&c, 1.7), c);
    assert_eq!(motion_blur(&c, 11.0, 33.0), c);
    let img = random_image(200, 200, 2);
    let m = mean(&img);
    assert!((mean(&gaussian_blur(&img, 2.0)) - m).abs() < 0.5);
    assert!((mean(&motion_blur(&img, 9.0, 0.0)) - m).abs() < 0.5);
}

#[test]
fn tiny_radius_is_identity() {
    let img = random_image(40, 30, 3);
    assert_eq!(gaussian_blur(&img, 0.05), img);
    assert_eq!(gaussian_blur(&img, 0.0), img);
    assert_eq!(motion_blur(&img, 1.0, 45.0), img);
}

#[test]
fn motion_blur_spreads_line_horizontally() {
    let mut img = constant(41, 21, 255);
    for y in 0..21 {
        img.put_pixel(20, y, Rgb([0; 3]));
    }
    let out = motion_blur(&img, 9.0, 0.0);
    // 8 of 9 taps white: 255 * 8 / 9 = 226.67
    for y in 0..21 {
        let dark: Vec<u32> = (0..41).filter(|&x| out.get_pixel(x, y)[0] < 255).collect();
        assert_eq!(dark, (16..=24).collect::<Vec<_>>());
        assert_eq!(out.get_pixel(20, y)[0], 227);
    }
    let out = motion_blur(&img, 9.0, 90.0);
    assert_eq!(out.get_pixel(20, 10)[0], 0);
    assert_eq!(out.get_pixel(19, 10)[0], 255);
}

#[test]
fn colour_examples() {
    let gray = constant(4, 4, 100);
    assert_eq!(adjust_color(&gray, 0.1, 0.0, 0.0, 0.0), constant(4, 4, 126));
    assert_eq!(adjust_color(&gray, 0.0, 0.0, 0.0, 15.0), gray);
    assert_eq!(adjust_color(&gray, 0.0, 0.0, 0.3, 0.0), gray);
    let img = random_image(16, 16, 4);
    assert_eq!(adjust_color(&img, 0.0, 0.0, 0.0, 0.0), img);
    // 200 -> (200 - 127.5) * 1.2 + 127.5 = 214.5 -> 215
    assert_eq!(adjust_color(&constant(1, 1, 200), 0.0, 0.2, 0.0, 0.0).get_pixel(0, 0)[0], 215);
    assert_eq!(adjust_color(&constant(1, 1, 250), 0.3, 0.0, 0.0, 0.0).get_pixel(0, 0)[0], 255);
}

#[test]
fn hue_rotation_of_primaries() {
    let red = RgbImage::from_pixel(1, 1, Rgb([255, 0, 0]));
    assert_eq!(*adjust_color(&red, 0.0, 0.0, 0.0, 120.0).get_pixel(0, 0), Rgb([0, 255, 0]));
    assert_eq!(*adjust_color(&red, 0.0, 0.0, 0.0, -120.0).get_pixel(0, 0), Rgb([0, 0, 255]));
    assert_eq!(*adjust_color(&red, 0.0, 0.0, 0.0, 60.0).get_pixel(0, 0), Rgb([255, 255, 0]));
}

#[test]
fn rotate_zero_is_identity() {
    let img = random_image(60, 40, 5);
    let b = boxed(10.0, 5.0, 30.0, 20.0);
    let (out, nb) = geometric(&img, &b, &AugmentOp::Rotate { degrees: 0.0 }).unwrap();
    assert_eq!(out, img);
    assert_eq!(nb, b);
}

#[test]
fn centred_square_quarter_turn() {
    let img = constant(100, 100, 200);
    let b = boxed(30.0, 30.0, 70.0, 70.0);
    let (_, nb) = geometric(&img, &b, &AugmentOp::Rotate { degrees: 90.0 }).unwrap();
    for (a, e) in [(nb.x0, 30.0), (nb.y0, 30.0), (nb.x1, 70.0), (nb.y1, 70.0)] {
        assert!((a - e).abs() < 1e-9, "{nb:?}");
    }
}

#[test]
fn rotated_box_hull() {
    // normalized (0.4, 0.4, 0.2, 0.1) on a square image, 30 degrees counterclockwise
    let b = boxed(300.0, 350.0, 500.0, 450.0);
    let (_, nb) = geometric(&constant(1000, 1000, 255), &b, &AugmentOp::Rotate { degrees: 30.0 }).unwrap();
    // oracle in y-up coordinates about the centre
    let t = 30f64.to_radians();
    let pts: Vec<(f64, f64)> = [(-0.2, 0.15), (0.0, 0.15), (0.0, 0.05), (-0.2, 0.05)]
        .iter()
        .map(|&(x, y)| (x * t.cos() - y * t.sin(), x * t.sin() + y * t.cos()))
        .map(|(x, y)| (0.5 + x, 0.5 - y))
        .collect();
    let xmin = pts.iter().map(|p| p.0).fold(f64::MAX, f64::min);
    let xmax = pts.iter().map(|p| p.0).fold(f64::MIN, f64::max);
    let ymin = pts.iter().map(|p| p.1).fold(f64::MAX, f64::min);
    let ymax = pts.iter().map(|p| p.1).fold(f64::MIN, f64::max);
    let got = nb.normalized(1000, 1000);
    let want = [(xmin + xmax) / 2.0, (ymin + ymax) / 2.0, xmax - xmin, ymax - ymin];
    for (g, w) in [got.cx, got.cy, got.w, got.h].iter().zip(want) {
        assert!((g - w).abs() < 1e-6, "{got:?} vs {want:?}");
    }
}

#[test]
fn box_pushed_out_of_frame_is_degenerate() {
    let img = constant(100, 100, 255);
    let b = boxed(0.0, 0.0, 2.0, 2.0);
    let err = geometric(&img, &b, &AugmentOp::Scale { factor: 1.15 }).unwrap_err();
    assert!(matches!(err, AugmentError::DegenerateBox { .. }));
}

#[test]
fn trace_probabilities() {
    let none = AugmentPolicy::none();
    for s in 0..50 {
        assert!(sample_trace(&none, 300, 200, s).is_empty());
    }
    let all = AugmentPolicy::default().with_probability(1.0);
    for s in 0..50 {
        assert_eq!(sample_trace(&all, 300, 200, s).names(), OP_ORDER.to_vec());
    }
    let half = AugmentPolicy::default().with_probability(0.5);
    let mut counts = [0usize; 7];
    let n = 10_000;
    for s in 0..n {
        for name in sample_trace(&half, 300, 200, s as u64).names() {
            counts[OP_ORDER.iter().position(|o| *o == name).unwrap()] += 1;
        }
    }
    for (name, c) in OP_ORDER.iter().zip(counts) {
        let rate = c as f64 / n as f64;
        assert!((0.48..=0.52).contains(&rate), "{name}: {rate}");
    }
}

#[test]
fn drawn_parameters_stay_in_range() {
    let p = AugmentPolicy::default().with_probability(1.0);
    for s in 0..500 {
        for op in sample_trace(&p, 1012, 638, s).ops {
            match op {
                AugmentOp::Noise { sigma, .. } => assert!((0.0..=25.0).contains(&sigma)),
                AugmentOp::GaussianBlur { radius } => assert!((0.5..=2.0).contains(&radius)),
                AugmentOp::MotionBlur { length, angle } => {
                    assert!((3.0..=15.0).contains(&length));
                    assert!((0.0..180.0).contains(&angle));
                }
                AugmentOp::Color { brightness, contrast, saturation, hue } => {
                    for v in [brightness, contrast, saturation] {
                        assert!(v.abs() <= 0.3);
                    }
                    assert!(hue.abs() <= 18.0);
                }
                AugmentOp::Rotate { degrees } => assert!(degrees.abs() <= 15.0),
                AugmentOp::Scale { factor } => assert!((0.85..=1.15).contains(&factor)),
                AugmentOp::Perspective { offsets } => {
                    for o in offsets {
                        assert!(o[0].hypot(o[1]) <= 0.05 * 638.0 + 1e-9);
                    }
                }
            }
        }
    }
}

fn identity_trace() -> AugmentTrace {
    AugmentTrace {
        ops: vec![
            AugmentOp::Noise { sigma: 0.0, seed: 7 },
            AugmentOp::GaussianBlur { radius: 0.0 },
            AugmentOp::MotionBlur { length: 1.0, angle: 0.0 },
            AugmentOp::Color { brightness: 0.0, contrast: 0.0, saturation: 0.0, hue: 0.0 },
            AugmentOp::Rotate { degrees: 0.0 },
            AugmentOp::Scale { factor: 1.0 },
            AugmentOp::Perspective { offsets: [[0.0; 2]; 4] },
        ],
    }
}

#[test]
fn identity_parameters_are_bit_exact() {
    let img = random_image(120, 80, 6);
    let b = boxed(10.0, 10.0, 60.0, 50.0);
    let out = apply_trace(&img, &b, &identity_trace()).unwrap();
    assert_eq!(out.image.as_raw(), img.as_raw());
    assert_eq!(out.bbox, b);
    assert!(out.homography.is_identity());
}

#[test]
fn replay_from_serialized_trace() {
    let img = random_image(150, 100, 7);
    let b = boxed(40.0, 30.0, 110.0, 70.0);
    let policy = AugmentPolicy::default().with_probability(1.0);
    let (out, trace) = augment_sample(&img, &b, &policy, 11).unwrap();
    let json = serde_json::to_string(&trace).unwrap();
    let back: AugmentTrace = serde_json::from_str(&json).unwrap();
    assert_eq!(back, trace);
    let again = apply_trace(&img, &b, &back).unwrap();
    assert_eq!(again.image.as_raw(), out.image.as_raw());
    assert_eq!(again.bbox, out.bbox);
}

#[test]
fn policy_validation() {
    AugmentPolicy::default().validate().unwrap();
    AugmentPolicy::none().validate().unwrap();
    let mut p = AugmentPolicy::default();
    p.noise.probability = 1.5;
    assert!(p.validate().is_err());
    let mut p = AugmentPolicy::default();
    p.rotate.degrees = [-20.0, 15.0];
    assert!(p.validate().is_err());
    let mut p = AugmentPolicy::default();
    p.scale.factor = [1.1, 0.9];
    assert!(p.validate().is_err());
    let mut p = AugmentPolicy::default();
    p.perspective.max_offset = 0.2;
    assert!(p.validate().is_err());
    let json = serde_json::to_string(&AugmentPolicy::default()).unwrap();
    assert_eq!(serde_json::from_str::<AugmentPolicy>(&json).unwrap(), AugmentPolicy::default());
    assert!(serde_json::from_str::<AugmentPolicy>(r#"{"blur": {}}"#).is_err());
    let partial: AugmentPolicy = serde_json::from_str(r#"{"rotate": {"probability": 1.0, "degrees": [-5.0, 5.0]}}"#).unwrap();
    assert_eq!(partial.scale, AugmentPolicy::default().scale);
}

#[test]
fn quad_homography_hits_corners() {
    let src = [(0.0, 0.0), (200.0, 0.0), (200.0, 100.0), (0.0, 100.0)];
    let dst = [(3.0, -2.0), (205.0, 4.0), (190.0, 98.0), (-6.0, 103.0)];
    let h = Homography::from_quad(src, dst).unwrap();
    let inv = h.inverse().unwrap();
    for (s, d) in src.iter().zip(dst) {
        let (u, v) = h.apply(s.0, s.1);
        assert!((u - d.0).abs() < 1e-9 && (v - d.1).abs() < 1e-9);
        let (x, y) = inv.apply(u, v);
        assert!((x - s.0).abs() < 1e-9 && (y - s.1).abs() < 1e-9);
    }
}

fn symbol_sample() -> (RgbImage, PixelBox, (f64, f64), u32, (usize, usize), Vec<(usize, usize)>) {
    let t = Template::blank("b", DocumentKind::DriverLicense, Symbology::Pdf417, (400, 260), Rect { x: 60, y: 40, w: 280, h: 180 })
        .unwrap();
    let (sym, _) = fit_pdf417(b"AUGMENT BOX CHECK 0123456789", EcLevel::new(2).unwrap(), t.spec.placement, 2).unwrap();
    let placed = overlay(&t, &sym.matrix, 2).unwrap();
    let mut dark = Vec::new();
    for y in 0..sym.matrix.height() {
        for x in 0..sym.matrix.width() {
            if sym.matrix.get(x, y) {
                dark.push((x, y));
            }
        }
    }
    let origin = (placed.origin.0 as f64, placed.origin.1 as f64);
    (placed.image, placed.bbox, origin, placed.scale, placed.modules, dark)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn box_contains_every_mapped_module(seed in any::<u64>()) {
        let (img, b, origin, s, _, dark) = symbol_sample();
        let policy = AugmentPolicy::default().with_probability(1.0);
        let Ok((out, _)) = augment_sample(&img, &b, &policy, seed) else { return Ok(()) };
        let (w, h) = img.dimensions();
        for &(mx, my) in &dark {
            let (u, v) = out.homography.apply(origin.0 + (mx as f64 + 0.5) * s as f64, origin.1 + (my as f64 + 0.5) * s as f64);
            if u < 0.0 || v < 0.0 || u > w as f64 || v > h as f64 {
                continue;
            }
            prop_assert!(u >= out.bbox.x0 && u <= out.bbox.x1 && v >= out.bbox.y0 && v <= out.bbox.y1);
        }
        // the box is the hull of the mapped symbol corners
        let pts = b.corners().map(|(x, y)| out.homography.apply(x, y));
        let x0 = pts.iter().map(|p| p.0).fold(f64::MAX, f64::min).max(0.0);
        prop_assert!((out.bbox.x0 - x0).abs() < 1e-9);
    }

    #[test]
    fn augmentation_is_deterministic(seed in any::<u64>()) {
        let img = random_image(80, 60, 8);
        let b = boxed(20.0, 15.0, 60.0, 45.0);
        let policy = AugmentPolicy::default().with_probability(0.7);
        let a = augment_sample(&img, &b, &policy, seed);
        let c = augment_sample(&img, &b, &policy, seed);
        match (a, c) {
            (Ok((x, tx)), Ok((y, ty))) => {
                prop_assert_eq!(tx, ty);
                prop_assert_eq!(x.image.as_raw(), y.image.as_raw());
            }
            (Err(x), Err(y)) => prop_assert_eq!(x, y),
            _ => prop_assert!(false),
        }
    }

    #[test]
    fn noise_keeps_range_and_mean(v in 40u8..216, sigma in 0.0f64..25.0) {
        let out = add_gaussian_noise(&constant(60, 60, v), sigma, 3);
        prop_assert!((mean(&out) - v as f64).abs() < 1.0);
    }
}
