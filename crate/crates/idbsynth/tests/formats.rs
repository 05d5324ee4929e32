use std::path::Path;

use idbsynth::formats::{corpus_path, read_pbm, runs_from_text, runs_to_text, write_pbm, Corpus, FormatError};
use idbsynth_core::bits::BitGrid;
use idbsynth_core::code128;
use idbsynth_core::record::{generate_template_records, DocumentKind, RecordSchema, Source};
use proptest::prelude::*;

fn grid_from(bits: &[bool], w: usize) -> BitGrid {
    let h = bits.len() / w;
    let mut g = BitGrid::new(w, h);
    for (i, &b) in bits.iter().take(w * h).enumerate() {
        g.set(i % w, i / w, b);
    }
    g
}

#[test]
fn pbm_header_and_packing() {
    let g = grid_from(&[true, false, true, true, false, false, false, true, true, true], 10);
    let bytes = write_pbm(&g, 1);
    assert_eq!(&bytes[..8], b"P4\n10 1\n");
    // 1011 0001 11(00 0000)
    assert_eq!(&bytes[8..], &[0b1011_0001, 0b1100_0000]);
}

#[test]
fn pbm_ascii_variant() {
    let text = b"P1\n# comment\n4 2\n1 0 0 1\n0 1 1 0\n";
    let g = read_pbm(text, 1).unwrap();
    assert_eq!((g.width(), g.height()), (4, 2));
    assert_eq!(g.row(0), &[true, false, false, true]);
    assert_eq!(g.row(1), &[false, true, true, false]);
}

#[test]
fn pbm_rejects_mixed_blocks() {
    let g = grid_from(&[true, false, false, true], 2);
    let bytes = write_pbm(&g, 1);
    assert!(matches!(read_pbm(&bytes, 2), Err(FormatError::Pbm(_))));
    assert!(matches!(read_pbm(b"P6\n1 1\n\0\0\0", 1), Err(FormatError::Pbm(_))));
}

#[test]
fn runs_text() {
    assert_eq!(runs_to_text(&[2, 1, 1]), "2,1,1\n");
    assert_eq!(runs_from_text(" 2, 1,1\n").unwrap(), vec![2, 1, 1]);
    assert!(runs_from_text("2,0,1").is_err());
    assert!(runs_from_text("2,x").is_err());
    assert!(runs_from_text("").is_err());
}

#[test]
fn runs_file_decodes() {
    let sym = code128::encode_c128("INS-0042").unwrap();
    let runs: Vec<u32> = sym.runs.iter().map(|&r| r as u32).collect();
    let back = runs_from_text(&runs_to_text(&runs)).unwrap();
    assert_eq!(code128::decode_runs(&back).unwrap(), "INS-0042");
}

#[test]
fn corpus_round_trip_and_header() {
    let schema = RecordSchema::for_kind(DocumentKind::InsuranceCard);
    let records = generate_template_records(&schema, "Aetna", "USA", 25, 3).unwrap();
    let c = Corpus { kind: DocumentKind::InsuranceCard, source: Source::Template, records };
    let dir = tempfile::tempdir().unwrap();
    let path = corpus_path(dir.path(), c.kind, c.source);
    assert!(path.ends_with("insurance_card.template.txt"));
    c.write(&path).unwrap();
    assert_eq!(Corpus::read(&path).unwrap(), c);

    let p = Path::new("x.txt");
    assert!(matches!(Corpus::parse("", p), Err(FormatError::Corpus { line: 1, .. })));
    assert!(matches!(Corpus::parse("kind=driver_license\n", p), Err(FormatError::Corpus { line: 1, .. })));
    let bad = format!("# idbsynth corpus kind=insurance_card source=template\n{}\nnot a record\n", c.records[0].to_line());
    assert!(matches!(Corpus::parse(&bad, p), Err(FormatError::Corpus { line: 3, .. })));
}

proptest! {
    #[test]
    fn pbm_round_trip(w in 1usize..40, bits in prop::collection::vec(any::<bool>(), 1..400), px in 1usize..4) {
        prop_assume!(bits.len() >= w);
        let g = grid_from(&bits, w);
        let back = read_pbm(&write_pbm(&g, px), px).unwrap();
        prop_assert_eq!(back, g);
    }

    #[test]
    fn runs_round_trip(runs in prop::collection::vec(1u32..20, 1..100)) {
        prop_assert_eq!(runs_from_text(&runs_to_text(&runs)).unwrap(), runs);
    }
}
