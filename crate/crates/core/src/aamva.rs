//! AAMVA DL/ID card-design payloads: the bytes a US driver license carries
//! in its PDF417 symbol.
//!
//! A payload is a fixed header, one ten-byte designator per subfile, then the
//! subfiles themselves. Each subfile is its two-letter type followed by
//! elements written as `id value LF` and closed by CR.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;

use serde::de::{MapAccess, Visitor};
use serde::{Deserialize, Deserializer};

use crate::record::date::Date;
use crate::record::{validate_record, DocumentKind, FieldMap, IdentityRecord, RecordSchema, Source};

/// `@`, LF, RS, CR.
pub const COMPLIANCE: [u8; 4] = [0x40, 0x0a, 0x1e, 0x0d];
pub const FILE_TYPE: &[u8; 5] = b"ANSI ";
pub const HEADER_LEN: usize = 21;
pub const DESIGNATOR_LEN: usize = 10;
const LF: u8 = 0x0a;
const CR: u8 = 0x0d;

const BUNDLED_PROFILE: &str = include_str!("../data/aamva_profile.json");

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum AamvaError {
    #[error("not a driver license record")]
    WrongKind,
    #[error("record does not validate: {0}")]
    InvalidRecord(String),
    #[error("mandatory element {0} has no value")]
    MissingMandatoryField(String),
    #[error("element {element} holds a byte outside printable ASCII")]
    NonAsciiValue { element: String },
    #[error("bad header: {0}")]
    BadHeader(&'static str),
    #[error("designator {index} ({offset}+{length}) exceeds the {payload_len}-byte payload")]
    DesignatorOutOfBounds { index: usize, offset: usize, length: usize, payload_len: usize },
    #[error("element {element} appears twice in subfile {subfile}")]
    DuplicateElement { subfile: String, element: String },
    #[error("malformed element {0:?}")]
    BadElement(String),
    #[error("element {element} holds {value:?}, not a {format} date")]
    BadDate { element: String, value: String, format: String },
    #[error("no DL subfile")]
    NoDlSubfile,
    #[error("profile: {0}")]
    Profile(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subfile {
    pub subfile_type: String,
    pub elements: Vec<(String, String)>,
}

impl Subfile {
    pub fn get(&self, element: &str) -> Option<&str> {
        self.elements.iter().find(|(e, _)| e == element).map(|(_, v)| v.as_str())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::from(self.subfile_type.as_bytes());
        for (id, value) in &self.elements {
            out.extend_from_slice(id.as_bytes());
            out.extend_from_slice(value.as_bytes());
            out.push(LF);
        }
        out.push(CR);
        out
    }

    fn parse(bytes: &[u8]) -> Result<Subfile, AamvaError> {
        if bytes.len() < 2 {
            return Err(AamvaError::BadHeader("subfile shorter than its type"));
        }
        let subfile_type = ascii(&bytes[..2]).ok_or(AamvaError::BadHeader("subfile type"))?;
        let mut body = &bytes[2..];
        if let Some(rest) = body.strip_suffix(&[CR]) {
            body = rest;
        }
        let mut elements: Vec<(String, String)> = Vec::new();
        for raw in body.split(|&b| b == LF || b == CR).filter(|s| !s.is_empty()) {
            let text = ascii(raw).ok_or_else(|| AamvaError::BadElement(lossy(raw)))?;
            if text.len() < 3 || !valid_element_id(&text[..3]) {
                return Err(AamvaError::BadElement(text));
            }
            let (id, value) = text.split_at(3);
            if elements.iter().any(|(e, _)| e == id) {
                return Err(AamvaError::DuplicateElement { subfile: subfile_type.clone(), element: id.to_string() });
            }
            elements.push((id.to_string(), value.to_string()));
        }
        Ok(Subfile { subfile_type, elements })
    }
}

fn lossy(bytes: &[u8]) -> String {
    bytes.iter().map(|&b| if (0x20..0x7f).contains(&b) { b as char } else { '?' }).collect()
}

fn ascii(bytes: &[u8]) -> Option<String> {
    bytes.iter().all(|&b| (0x20..0x7f).contains(&b)).then(|| bytes.iter().map(|&b| b as char).collect())
}

fn valid_element_id(id: &str) -> bool {
    id.len() == 3 && id.bytes().all(|b| b.is_ascii_uppercase() || b.is_ascii_digit())
}

fn digits(s: &str, n: usize) -> bool {
    s.len() == n && s.bytes().all(|b| b.is_ascii_digit())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AamvaDocument {
    pub iin: String,
    pub aamva_version: String,
    pub jurisdiction_version: String,
    pub subfiles: Vec<Subfile>,
}

impl AamvaDocument {
    /// The subfile of type `DL`, if present.
    pub fn dl(&self) -> Option<&Subfile> {
        self.subfiles.iter().find(|s| s.subfile_type == "DL")
    }

    /// `(offset, length)` of every subfile in [`Self::to_bytes`] output.
    pub fn designators(&self) -> Vec<(usize, usize)> {
        let mut offset = HEADER_LEN + DESIGNATOR_LEN * self.subfiles.len();
        self.subfiles
            .iter()
            .map(|s| {
                let len = s.to_bytes().len();
                let d = (offset, len);
                offset += len;
                d
            })
            .collect()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::from(COMPLIANCE);
        out.extend_from_slice(FILE_TYPE);
        out.extend_from_slice(self.iin.as_bytes());
        out.extend_from_slice(self.aamva_version.as_bytes());
        out.extend_from_slice(self.jurisdiction_version.as_bytes());
        out.extend_from_slice(alloc::format!("{:02}", self.subfiles.len()).as_bytes());
        for (s, (offset, len)) in self.subfiles.iter().zip(self.designators()) {
            out.extend_from_slice(s.subfile_type.as_bytes());
            out.extend_from_slice(alloc::format!("{offset:04}{len:04}").as_bytes());
        }
        for s in &self.subfiles {
            out.extend(s.to_bytes());
        }
        out
    }

    pub fn from_bytes(payload: &[u8]) -> Result<AamvaDocument, AamvaError> {
        if payload.len() < HEADER_LEN {
            return Err(AamvaError::BadHeader("payload shorter than the header"));
        }
        if payload[..4] != COMPLIANCE {
            return Err(AamvaError::BadHeader("compliance indicator"));
        }
        if &payload[4..9] != FILE_TYPE {
            return Err(AamvaError::BadHeader("file type"));
        }
        let head = ascii(&payload[9..HEADER_LEN]).ok_or(AamvaError::BadHeader("non-ASCII header"))?;
        let (iin, rest) = head.split_at(6);
        let (aamva_version, rest) = rest.split_at(2);
        let (jurisdiction_version, entries) = rest.split_at(2);
        if !digits(iin, 6) || !digits(aamva_version, 2) || !digits(jurisdiction_version, 2) || !digits(entries, 2) {
            return Err(AamvaError::BadHeader("header fields must be digits"));
        }
        let entries: usize = entries.parse().expect("two digits");
        if entries == 0 {
            return Err(AamvaError::BadHeader("no subfiles"));
        }
        let table_end = HEADER_LEN + DESIGNATOR_LEN * entries;
        if payload.len() < table_end {
            return Err(AamvaError::BadHeader("designator table truncated"));
        }
        let mut subfiles = Vec::with_capacity(entries);
        for index in 0..entries {
            let d = &payload[HEADER_LEN + DESIGNATOR_LEN * index..HEADER_LEN + DESIGNATOR_LEN * (index + 1)];
            let d = ascii(d).ok_or(AamvaError::BadHeader("non-ASCII designator"))?;
            let (kind, nums) = d.split_at(2);
            let (offset, length) = nums.split_at(4);
            if !digits(offset, 4) || !digits(length, 4) {
                return Err(AamvaError::BadHeader("designator fields must be digits"));
            }
            let (offset, length): (usize, usize) = (offset.parse().expect("digits"), length.parse().expect("digits"));
            if offset < table_end || offset + length > payload.len() {
                return Err(AamvaError::DesignatorOutOfBounds { index, offset, length, payload_len: payload.len() });
            }
            let sub = Subfile::parse(&payload[offset..offset + length])?;
            if sub.subfile_type != kind {
                return Err(AamvaError::BadHeader("subfile type differs from its designator"));
            }
            subfiles.push(sub);
        }
        Ok(AamvaDocument {
            iin: iin.to_string(),
            aamva_version: aamva_version.to_string(),
            jurisdiction_version: jurisdiction_version.to_string(),
            subfiles,
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DateFormat {
    Mmddccyy,
    Ccyymmdd,
}

impl DateFormat {
    fn parse(s: &str) -> Option<DateFormat> {
        match s {
            "MMDDCCYY" => Some(DateFormat::Mmddccyy),
            "CCYYMMDD" => Some(DateFormat::Ccyymmdd),
            _ => None,
        }
    }

    pub const fn as_str(self) -> &'static str {
        match self {
            DateFormat::Mmddccyy => "MMDDCCYY",
            DateFormat::Ccyymmdd => "CCYYMMDD",
        }
    }

    fn render(self, d: Date) -> String {
        match self {
            DateFormat::Mmddccyy => d.mmddccyy(),
            DateFormat::Ccyymmdd => alloc::format!("{:04}{:02}{:02}", d.year, d.month, d.day),
        }
    }

    fn read(self, s: &str) -> Option<Date> {
        match self {
            DateFormat::Mmddccyy => Date::parse_mmddccyy(s),
            DateFormat::Ccyymmdd if digits(s, 8) => {
                Date::new(s[..4].parse().ok()?, s[4..6].parse().ok()?, s[6..].parse().ok()?)
            }
            DateFormat::Ccyymmdd => None,
        }
    }
}

/// Ordered list of pairs read from a JSON object, keeping document order.
struct OrderedPairs(Vec<(String, String)>);

impl<'de> Deserialize<'de> for OrderedPairs {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl<'de> Visitor<'de> for V {
            type Value = OrderedPairs;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an object of field names to element ids")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<OrderedPairs, A::Error> {
                let mut out = Vec::new();
                while let Some(pair) = map.next_entry::<String, String>()? {
                    out.push(pair);
                }
                Ok(OrderedPairs(out))
            }
        }
        d.deserialize_map(V)
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileFile {
    field_to_element: OrderedPairs,
    date_format: String,
    mandatory_elements: Vec<String>,
}

/// Which record field goes into which element, in emission order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AamvaProfile {
    pub field_to_element: Vec<(String, String)>,
    pub date_format: DateFormat,
    pub mandatory_elements: Vec<String>,
}

impl Default for AamvaProfile {
    fn default() -> Self {
        AamvaProfile::from_json(BUNDLED_PROFILE).expect("bundled AAMVA profile")
    }
}

impl AamvaProfile {
    pub fn from_json(text: &str) -> Result<AamvaProfile, AamvaError> {
        let file: ProfileFile = serde_json::from_str(text).map_err(|e| AamvaError::Profile(e.to_string()))?;
        let date_format = DateFormat::parse(&file.date_format)
            .ok_or_else(|| AamvaError::Profile(alloc::format!("unknown date format {:?}", file.date_format)))?;
        let profile = AamvaProfile { field_to_element: file.field_to_element.0, date_format, mandatory_elements: file.mandatory_elements };
        profile.check()?;
        Ok(profile)
    }

    fn check(&self) -> Result<(), AamvaError> {
        let schema = RecordSchema::for_kind(DocumentKind::DriverLicense);
        for (i, (field, element)) in self.field_to_element.iter().enumerate() {
            if !schema.has_field(field) {
                return Err(AamvaError::Profile(alloc::format!("{field} is not a driver license field")));
            }
            if !valid_element_id(element) {
                return Err(AamvaError::Profile(alloc::format!("bad element id {element:?}")));
            }
            if self.field_to_element[..i].iter().any(|(f, e)| f == field || e == element) {
                return Err(AamvaError::Profile(alloc::format!("{field} or {element} mapped twice")));
            }
        }
        if let Some(m) = self.mandatory_elements.iter().find(|m| self.field_for(m).is_none()) {
            return Err(AamvaError::Profile(alloc::format!("mandatory element {m} is not mapped")));
        }
        Ok(())
    }

    pub fn element_for(&self, field: &str) -> Option<&str> {
        self.field_to_element.iter().find(|(f, _)| f == field).map(|(_, e)| e.as_str())
    }

    pub fn field_for(&self, element: &str) -> Option<&str> {
        self.field_to_element.iter().find(|(_, e)| e == element).map(|(f, _)| f.as_str())
    }
}

fn is_date_field(field: &str) -> bool {
    matches!(field, "date_of_birth" | "issue_date" | "expiry_date")
}

fn check_header_text(iin: &str, versions: (&str, &str)) -> Result<(), AamvaError> {
    if !digits(iin, 6) {
        return Err(AamvaError::BadHeader("IIN must be six digits"));
    }
    if !digits(versions.0, 2) || !digits(versions.1, 2) {
        return Err(AamvaError::BadHeader("versions must be two digits"));
    }
    Ok(())
}

/// Header, one designator and the DL subfile for a driver license record.
pub fn serialize_aamva(
    record: &IdentityRecord,
    profile: &AamvaProfile,
    iin: &str,
    versions: (&str, &str),
) -> Result<Vec<u8>, AamvaError> {
    if record.kind != DocumentKind::DriverLicense {
        return Err(AamvaError::WrongKind);
    }
    check_header_text(iin, versions)?;
    for m in &profile.mandatory_elements {
        let field = profile.field_for(m).expect("checked profile");
        if record.get(field).is_none_or(|v| v.is_empty()) {
            return Err(AamvaError::MissingMandatoryField(m.clone()));
        }
    }
    let report = validate_record(record);
    if let Some(v) = report.violations.first() {
        return Err(AamvaError::InvalidRecord(v.message.clone()));
    }
    let mut elements = Vec::with_capacity(profile.field_to_element.len());
    for (field, element) in &profile.field_to_element {
        let Some(value) = record.get(field) else { continue };
        let value = if is_date_field(field) {
            let d = Date::parse_iso(value).ok_or_else(|| AamvaError::InvalidRecord(alloc::format!("{field} is not a date")))?;
            profile.date_format.render(d)
        } else {
            value.to_string()
        };
        if !value.bytes().all(|b| (0x20..0x7f).contains(&b)) {
            return Err(AamvaError::NonAsciiValue { element: element.clone() });
        }
        elements.push((element.clone(), value));
    }
    let doc = AamvaDocument {
        iin: iin.to_string(),
        aamva_version: versions.0.to_string(),
        jurisdiction_version: versions.1.to_string(),
        subfiles: alloc::vec![Subfile { subfile_type: "DL".into(), elements }],
    };
    Ok(doc.to_bytes())
}

/// Reads a payload back into a driver license record. Elements the profile
/// does not map are ignored; fields come out in schema order.
pub fn parse_aamva(payload: &[u8], profile: &AamvaProfile) -> Result<IdentityRecord, AamvaError> {
    if payload.is_empty() {
        return Err(AamvaError::BadHeader("empty payload"));
    }
    let doc = AamvaDocument::from_bytes(payload)?;
    let dl = doc.dl().ok_or(AamvaError::NoDlSubfile)?;
    let mut mapped = FieldMap::new();
    for (element, value) in &dl.elements {
        let Some(field) = profile.field_for(element) else { continue };
        let value = if is_date_field(field) {
            profile
                .date_format
                .read(value)
                .ok_or_else(|| AamvaError::BadDate {
                    element: element.clone(),
                    value: value.clone(),
                    format: profile.date_format.as_str().into(),
                })?
                .iso()
        } else {
            value.clone()
        };
        mapped.set(field, value);
    }
    if let Some(m) = profile.mandatory_elements.iter().find(|m| dl.get(m).is_none_or(str::is_empty)) {
        return Err(AamvaError::MissingMandatoryField(m.clone()));
    }
    let schema = RecordSchema::for_kind(DocumentKind::DriverLicense);
    let fields: FieldMap = schema.fields().filter_map(|f| mapped.get(f).map(|v| (f, v))).collect();
    Ok(IdentityRecord {
        kind: DocumentKind::DriverLicense,
        issuer: fields.get("issuing_state").unwrap_or_default().to_string(),
        country: fields.get("country").unwrap_or_default().to_string(),
        fields,
        source: Source::Template,
    })
}
