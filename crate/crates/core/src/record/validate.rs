use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use super::date::Date;
use super::{IdentityRecord, RecordError, RecordSchema, SEPARATOR};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Rule {
    Missing,
    Empty,
    Format,
    SeparatorBan,
    ControlCharacter,
    BadKey,
    DateOrder,
}

impl Rule {
    pub const fn as_str(self) -> &'static str {
        match self {
            Rule::Missing => "missing",
            Rule::Empty => "empty",
            Rule::Format => "format",
            Rule::SeparatorBan => "separator_ban",
            Rule::ControlCharacter => "control_character",
            Rule::BadKey => "bad_key",
            Rule::DateOrder => "date_order",
        }
    }
}

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Violation {
    pub field: String,
    pub rule: Rule,
    pub message: String,
}

#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct ValidationReport {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn has(&self, field: &str, rule: Rule) -> bool {
        self.violations.iter().any(|v| v.field == field && v.rule == rule)
    }
}

pub(crate) fn valid_key(k: &str) -> bool {
    !k.is_empty() && k.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'_')
}

/// Checks presence, formats, the separator ban and date order.
pub fn validate_record(record: &IdentityRecord) -> ValidationReport {
    let schema = RecordSchema::for_kind(record.kind);
    let mut violations = Vec::new();
    let mut push = |field: &str, rule: Rule, message: String| {
        violations.push(Violation { field: field.into(), rule, message });
    };

    for f in &schema.required_fields {
        match record.get(f) {
            None => push(f, Rule::Missing, format!("{f} is required")),
            Some(v) if v.trim().is_empty() => push(f, Rule::Empty, format!("{f} is empty")),
            Some(_) => {}
        }
    }
    for (k, v) in record.fields.iter() {
        if !valid_key(k) {
            push(k, Rule::BadKey, format!("field name {k:?} is not lowercase snake case"));
        }
        if v.contains(SEPARATOR) {
            push(k, Rule::SeparatorBan, format!("{k} contains the reserved '|'"));
        }
        if v.chars().any(char::is_control) {
            push(k, Rule::ControlCharacter, format!("{k} contains a control character"));
        }
        if v.trim().is_empty() {
            if !schema.required_fields.iter().any(|r| r == k) {
                push(k, Rule::Empty, format!("{k} is empty"));
            }
            continue;
        }
        if let Some(rule) = schema.rule(k) {
            if !rule.check(v) {
                push(k, Rule::Format, format!("{k} = {v:?} is not {}", rule.describe()));
            }
        }
    }
    for (a, b) in &schema.date_order {
        let (Some(da), Some(db)) = (
            record.get(a).and_then(Date::parse_iso),
            record.get(b).and_then(Date::parse_iso),
        ) else {
            continue;
        };
        if da >= db {
            push(b, Rule::DateOrder, format!("{b} {db} is not after {a} {da}"));
        }
    }
    ValidationReport { ok: violations.is_empty(), violations }
}

/// Keeps the first record of every group equal on all `key_fields`,
/// preserving order.
pub fn dedup_records(records: &[IdentityRecord], key_fields: &[&str]) -> Result<Vec<IdentityRecord>, RecordError> {
    if key_fields.is_empty() {
        return Err(RecordError::InvalidRequest("no key fields"));
    }
    for r in records {
        let schema = RecordSchema::for_kind(r.kind);
        if let Some(bad) = key_fields.iter().find(|k| !schema.has_field(k)) {
            return Err(RecordError::UnknownKeyField(String::from(*bad)));
        }
    }
    let mut seen: BTreeSet<Vec<Option<&str>>> = BTreeSet::new();
    let mut out = Vec::new();
    for r in records {
        let key: Vec<Option<&str>> = key_fields.iter().map(|k| r.get(k)).collect();
        if seen.insert(key) {
            out.push(r.clone());
        }
    }
    Ok(out)
}
