use idbsynth_core::aamva::{parse_aamva, serialize_aamva, AamvaDocument, AamvaError, AamvaProfile, HEADER_LEN};
use idbsynth_core::record::{generate_template_records, DocumentKind, IdentityRecord, IssuerProfiles, RecordSchema};
use proptest::prelude::*;

const VERSIONS: (&str, &str) = ("10", "00");

fn record(seed: u64) -> IdentityRecord {
    let schema = RecordSchema::for_kind(DocumentKind::DriverLicense);
    generate_template_records(&schema, "California", "USA", 1, seed).unwrap().remove(0)
}

fn payload(r: &IdentityRecord) -> Vec<u8> {
    serialize_aamva(r, &AamvaProfile::default(), "636000", VERSIONS).unwrap()
}

fn find(hay: &[u8], needle: &[u8]) -> Option<usize> {
    hay.windows(needle.len()).position(|w| w == needle)
}

#[test]
fn compliance_header() {
    let p = payload(&record(1));
    assert_eq!(&p[..4], &[0x40, 0x0a, 0x1e, 0x0d]);
    assert_eq!(&p[4..9], b"ANSI ");
    assert_eq!(&p[9..HEADER_LEN], b"636000100001");
    assert_eq!(&p[HEADER_LEN..HEADER_LEN + 6], b"DL0031");
}

#[test]
fn family_name_element() {
    let mut r = record(2);
    r.fields.set("family_name", "Nguyen");
    let p = payload(&r);
    let at = find(&p, b"DCSNguyen").unwrap();
    assert_eq!(p[at + 9], 0x0a);
    let dob = r.get("date_of_birth").unwrap();
    let mmddccyy = format!("DBB{}{}{}", &dob[5..7], &dob[8..10], &dob[..4]);
    assert!(find(&p, mmddccyy.as_bytes()).is_some());
    assert_eq!(*p.last().unwrap(), 0x0d);
}

#[test]
fn missing_license_number() {
    let mut r = record(3);
    r.fields.remove("license_number");
    assert_eq!(
        serialize_aamva(&r, &AamvaProfile::default(), "636000", VERSIONS),
        Err(AamvaError::MissingMandatoryField("DAQ".into()))
    );
}

#[test]
fn non_ascii_rejected() {
    let mut r = record(4);
    r.fields.set("first_name", "Zoë");
    assert!(matches!(
        serialize_aamva(&r, &AamvaProfile::default(), "636000", VERSIONS),
        Err(AamvaError::NonAsciiValue { element }) if element == "DAC"
    ));
}

#[test]
fn wrong_kind_and_bad_iin() {
    let schema = RecordSchema::for_kind(DocumentKind::UniversityId);
    let u = generate_template_records(&schema, "Harvard University", "USA", 1, 0).unwrap().remove(0);
    assert_eq!(serialize_aamva(&u, &AamvaProfile::default(), "636000", VERSIONS), Err(AamvaError::WrongKind));
    assert!(matches!(
        serialize_aamva(&record(0), &AamvaProfile::default(), "63600", VERSIONS),
        Err(AamvaError::BadHeader(_))
    ));
}

#[test]
fn truncated_designator() {
    let p = payload(&record(5));
    let cut = &p[..p.len() - 4];
    assert!(matches!(parse_aamva(cut, &AamvaProfile::default()), Err(AamvaError::DesignatorOutOfBounds { .. })));
    let mut bad = p.clone();
    bad[0] = b'#';
    assert!(matches!(parse_aamva(&bad, &AamvaProfile::default()), Err(AamvaError::BadHeader(_))));
    assert!(matches!(parse_aamva(&[], &AamvaProfile::default()), Err(AamvaError::BadHeader(_))));
}

#[test]
fn duplicate_element_by_surgery() {
    let mut r = record(6);
    r.fields.set("family_name", "Nguyen");
    let p = payload(&r);
    // Insert a second DCS element before the closing CR and grow the length.
    let mut doc = p[..p.len() - 1].to_vec();
    doc.extend_from_slice(b"DCSTran\n\r");
    let len: usize = std::str::from_utf8(&doc[27..31]).unwrap().parse().unwrap();
    doc.splice(27..31, format!("{:04}", len + 8).into_bytes());
    assert_eq!(
        parse_aamva(&doc, &AamvaProfile::default()),
        Err(AamvaError::DuplicateElement { subfile: "DL".into(), element: "DCS".into() })
    );
}

#[test]
fn golden_payload() {
    let golden = include_bytes!("golden/dl_california.aamva");
    let doc = AamvaDocument::from_bytes(golden).unwrap();
    assert_eq!(doc.iin, "636000");
    let r = parse_aamva(golden, &AamvaProfile::default()).unwrap();
    assert_eq!(r.get("family_name"), Some("Nguyen"));
    assert_eq!(r.get("date_of_birth"), Some("1990-07-04"));
    assert_eq!(r.issuer, "California");
    assert_eq!(payload(&r), golden.to_vec());
}

#[test]
fn every_issuer_round_trips() {
    let profiles = IssuerProfiles::bundled();
    let schema = RecordSchema::for_kind(DocumentKind::DriverLicense);
    for issuer in profiles.issuers(DocumentKind::DriverLicense) {
        for r in generate_template_records(&schema, issuer, "USA", 100, 8).unwrap() {
            assert_eq!(parse_aamva(&payload(&r), &AamvaProfile::default()).unwrap(), r);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn round_trip(seed in any::<u64>()) {
        let r = record(seed);
        let back = parse_aamva(&payload(&r), &AamvaProfile::default()).unwrap();
        prop_assert_eq!(back, r);
    }

    #[test]
    fn designators_slice_subfiles(seed in any::<u64>()) {
        let p = payload(&record(seed));
        let doc = AamvaDocument::from_bytes(&p).unwrap();
        prop_assert_eq!(doc.to_bytes(), p.clone());
        for (sub, (offset, len)) in doc.subfiles.iter().zip(doc.designators()) {
            let bytes = sub.to_bytes();
            prop_assert_eq!(&p[offset..offset + len], bytes.as_slice());
        }
    }

    #[test]
    fn constant_prefix(a in any::<u64>(), b in any::<u64>()) {
        let (pa, pb) = (payload(&record(a)), payload(&record(b)));
        prop_assert_eq!(&pa[..9], &pb[..9]);
    }
}
