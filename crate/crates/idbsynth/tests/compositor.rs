use idbsynth::compositor::{
    code128_bar_height, code128_grid, fit_pdf417, fit_scale, overlay, split_dataset, Annotation, BBox, CompositeError,
    Symbology,
};
use idbsynth::extract::{read_code128, read_pdf417};
use idbsynth::augment::Homography;
use idbsynth::template::{Rect, Template, TemplateSet, TemplateSpec};
use idbsynth_core::bits::BitGrid;
use idbsynth_core::code128;
use idbsynth_core::pdf417::{self, Columns, EcLevel, MAX_COLUMNS};
use idbsynth_core::record::DocumentKind;
use image::{Rgb, RgbImage};
use proptest::prelude::*;

fn square(n: usize) -> BitGrid {
    let mut g = BitGrid::new(n, n);
    for y in 0..n {
        for x in 0..n {
            g.set(x, y, (x + y) % 2 == 0);
        }
    }
    g
}

fn blank(kind: DocumentKind, sym: Symbology, size: (u32, u32), placement: Rect) -> Template {
    Template::blank("t", kind, sym, size, placement).unwrap()
}

/// Largest s with (m + 2q) * s <= p along both axes, by counting up.
fn scale_oracle(mw: usize, mh: usize, q: usize, p: Rect) -> u32 {
    let mut s = 0;
    while ((mw + 2 * q) as u32 * (s + 1)) <= p.w && ((mh + 2 * q) as u32 * (s + 1)) <= p.h {
        s += 1;
    }
    s
}

#[test]
fn scale_examples() {
    let p = Rect { x: 0, y: 0, w: 300, h: 300 };
    assert_eq!(fit_scale(100, 100, 2, p), Some(2));
    assert_eq!(fit_scale(100, 100, 2, Rect { w: 104, h: 104, ..p }), Some(1));
    assert_eq!(fit_scale(100, 100, 2, Rect { w: 103, h: 300, ..p }), None);
    assert_eq!(fit_scale(100, 100, 2, Rect { w: 20, h: 300, ..p }), None);
}

#[test]
fn too_small_placement_errors() {
    let spec = TemplateSpec {
        template_id: "narrow".into(),
        image_path: "narrow.png".into(),
        width_px: 200,
        height_px: 200,
        placement: Rect { x: 10, y: 10, w: 20, h: 150 },
        symbology: Symbology::Pdf417,
        document_kind: DocumentKind::DriverLicense,
    };
    assert!(spec.validate().is_err());
    let t = Template { spec, image: RgbImage::from_pixel(200, 200, Rgb([200; 3])) };
    assert!(matches!(overlay(&t, &square(30), 2), Err(CompositeError::PlacementTooSmall { .. })));

    let t = blank(DocumentKind::DriverLicense, Symbology::Pdf417, (200, 200), Rect { x: 0, y: 0, w: 60, h: 60 });
    let err = overlay(&t, &square(100), 2).unwrap_err();
    assert!(matches!(err, CompositeError::PlacementTooSmall { needed_w: 104, .. }), "{err:?}");
    assert!(matches!(overlay(&t, &BitGrid::new(0, 0), 2), Err(CompositeError::EmptySymbol)));
}

#[test]
fn centred_full_width_annotation() {
    let t = blank(DocumentKind::DriverLicense, Symbology::Pdf417, (640, 640), Rect { x: 0, y: 0, w: 640, h: 640 });
    let placed = overlay(&t, &square(100), 2).unwrap();
    assert_eq!(placed.scale, 6);
    // block 624 px, offset 8, symbol from 20 to 620
    assert_eq!(placed.origin, (20, 20));
    assert_eq!(placed.annotation(Symbology::Pdf417).to_line(), "0 0.500000 0.500000 0.937500 0.937500");
}

#[test]
fn modules_drawn_at_scale() {
    let t = blank(DocumentKind::DriverLicense, Symbology::Pdf417, (300, 200), Rect { x: 17, y: 9, w: 260, h: 180 });
    let g = square(21);
    let placed = overlay(&t, &g, 2).unwrap();
    let s = placed.scale;
    assert_eq!(s, scale_oracle(21, 21, 2, t.spec.placement));
    for my in 0..21 {
        for mx in 0..21 {
            for (dx, dy) in [(0, 0), (s - 1, s - 1)] {
                let px = placed.image.get_pixel(placed.origin.0 + mx as u32 * s + dx, placed.origin.1 + my as u32 * s + dy);
                assert_eq!(px[0] == 0, g.get(mx, my));
            }
        }
    }
    // quiet zone corner stays white, outside the block keeps the template
    let q = placed.origin.0 - 2 * s;
    assert_eq!(*placed.image.get_pixel(q, placed.origin.1 - 1), Rgb([255; 3]));
    assert_eq!(*placed.image.get_pixel(0, 0), *t.image.get_pixel(0, 0));
}

#[test]
fn code128_class_and_height() {
    let sym = code128::encode_c128("POL-123456").unwrap();
    let grid = code128_grid(&sym.runs);
    assert_eq!(grid.width(), sym.modules_total);
    assert_eq!(grid.height(), code128_bar_height(sym.modules_total));
    assert_eq!(code128_bar_height(100), 20);
    assert_eq!(code128_bar_height(200), 30);
    assert_eq!(code128_bar_height(201), 31);
    let t = blank(DocumentKind::InsuranceCard, Symbology::Code128, (1012, 638), Rect { x: 106, y: 270, w: 800, h: 240 });
    let placed = overlay(&t, &grid, Symbology::Code128.quiet_zone()).unwrap();
    let line = placed.annotation(Symbology::Code128).to_line();
    assert!(line.starts_with("1 "), "{line}");
}

#[test]
fn fit_pdf417_chooses_best_columns() {
    let placement = Rect { x: 40, y: 150, w: 932, h: 400 };
    let payload = vec![b'x'; 300];
    let ec = EcLevel::new(5).unwrap();
    let (sym, scale) = fit_pdf417(&payload, ec, placement, 2).unwrap();
    let mut best = (0, 0);
    for c in 1..=MAX_COLUMNS {
        if let Ok(s) = pdf417::encode(&payload, ec, Columns::Fixed(c)) {
            let sc = scale_oracle(s.matrix.width(), s.matrix.height(), 2, placement);
            if sc > best.0 {
                best = (sc, c);
            }
        }
    }
    assert_eq!((scale, sym.columns), (best.0, best.1));
}

#[test]
fn bundled_templates() {
    let set = TemplateSet::bundled();
    assert_eq!(set.all().len(), 6);
    for kind in DocumentKind::ALL {
        let ts = set.for_kind(kind);
        assert_eq!(ts.len(), 2, "{kind}");
        for t in ts {
            let want = if kind == DocumentKind::InsuranceCard { Symbology::Code128 } else { Symbology::Pdf417 };
            assert_eq!(t.spec.symbology, want);
            assert_eq!(t.image.dimensions(), (t.spec.width_px, t.spec.height_px));
            t.spec.validate().unwrap();
        }
    }
}

#[test]
fn clean_overlay_decodes() {
    let set = TemplateSet::bundled();
    for t in set.all() {
        match t.spec.symbology {
            Symbology::Pdf417 => {
                let payload: Vec<u8> = (0..400u32).map(|i| (i * 37 % 251) as u8).collect();
                let (sym, _) = fit_pdf417(&payload, EcLevel::new(5).unwrap(), t.spec.placement, 2).unwrap();
                let placed = overlay(t, &sym.matrix, 2).unwrap();
                let grid = grid_of(&placed);
                assert_eq!(read_pdf417(&placed.image, &grid, &Homography::IDENTITY).unwrap(), payload);
            }
            Symbology::Code128 => {
                let sym = code128::encode_c128("AET-55501234").unwrap();
                let placed = overlay(t, &code128_grid(&sym.runs), 10).unwrap();
                let grid = grid_of(&placed);
                assert_eq!(read_code128(&placed.image, &grid, &Homography::IDENTITY).unwrap(), "AET-55501234");
            }
        }
    }
}

fn grid_of(p: &idbsynth::compositor::Placed) -> idbsynth::extract::ModuleGrid {
    idbsynth::extract::ModuleGrid {
        origin: (p.origin.0 as f64, p.origin.1 as f64),
        scale: p.scale as f64,
        modules: p.modules,
    }
}

fn kinds(dl: usize, ins: usize, uni: usize) -> Vec<DocumentKind> {
    let mut v = vec![DocumentKind::DriverLicense; dl];
    v.extend(vec![DocumentKind::InsuranceCard; ins]);
    v.extend(vec![DocumentKind::UniversityId; uni]);
    v
}

fn count(k: &[DocumentKind], idx: &[usize], kind: DocumentKind) -> usize {
    idx.iter().filter(|&&i| k[i] == kind).count()
}

#[test]
fn split_examples() {
    let k = kinds(10, 10, 0);
    let s = split_dataset(&k, 0.8, 1);
    assert_eq!(count(&k, &s.train, DocumentKind::DriverLicense), 8);
    assert_eq!(count(&k, &s.train, DocumentKind::InsuranceCard), 8);
    assert_eq!(count(&k, &s.val, DocumentKind::DriverLicense), 2);
    assert_eq!(count(&k, &s.val, DocumentKind::InsuranceCard), 2);
    assert_eq!(s, split_dataset(&k, 0.8, 1));
    assert_ne!(s, split_dataset(&k, 0.8, 2));

    let k = kinds(3400, 3300, 3300);
    let s = split_dataset(&k, 0.8, 9);
    assert_eq!(s.train.len(), 8000);
    assert_eq!(count(&k, &s.train, DocumentKind::DriverLicense), 2720);
    assert_eq!(count(&k, &s.train, DocumentKind::UniversityId), 2640);

    let k = kinds(100, 0, 0);
    assert_eq!(split_dataset(&k, 0.29, 0).train.len(), 29);
}

proptest! {
    #[test]
    fn annotation_round_trip(cx in 0.01f64..0.99, cy in 0.01f64..0.99, w in 0.001f64..1.0, h in 0.001f64..1.0, c in 0u8..2) {
        let a = Annotation { class_id: c, bbox: BBox { cx, cy, w, h } };
        let b = Annotation::parse(&a.to_line()).unwrap();
        prop_assert_eq!(b.class_id, c);
        for (x, y) in [(b.bbox.cx, cx), (b.bbox.cy, cy), (b.bbox.w, w), (b.bbox.h, h)] {
            prop_assert!((x - y).abs() <= 5e-7);
        }
    }

    #[test]
    fn fit_scale_matches_oracle(mw in 1usize..200, mh in 1usize..200, q in 0usize..12, pw in 40u32..1200, ph in 40u32..800) {
        let p = Rect { x: 0, y: 0, w: pw, h: ph };
        let o = scale_oracle(mw, mh, q, p);
        prop_assert_eq!(fit_scale(mw, mh, q, p), (o > 0).then_some(o));
    }

    #[test]
    fn split_is_stratified_partition(dl in 0usize..60, ins in 0usize..60, uni in 0usize..60, f in 0.0f64..=1.0, seed in any::<u64>()) {
        let k = kinds(dl, ins, uni);
        let s = split_dataset(&k, f, seed);
        let mut all: Vec<usize> = s.train.iter().chain(&s.val).copied().collect();
        all.sort();
        prop_assert_eq!(all, (0..k.len()).collect::<Vec<_>>());
        for (kind, n) in [(DocumentKind::DriverLicense, dl), (DocumentKind::InsuranceCard, ins), (DocumentKind::UniversityId, uni)] {
            let t = s.train.iter().filter(|&&i| k[i] == kind).count() as f64;
            prop_assert!((t - f * n as f64).abs() <= 1.0);
        }
    }
}
