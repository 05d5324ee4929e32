use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::date::Date;
use super::validate::{valid_key, Rule};
use super::{
    validate_record, DocumentKind, FieldMap, FormatRule, IdentityRecord, RecordError, RecordSchema, Source, SEPARATOR,
};

// Common alternative spellings of schema field names.
const ALIASES: &[(&str, &str)] = &[
    ("last_name", "family_name"),
    ("surname", "family_name"),
    ("given_name", "first_name"),
    ("street", "address_street"),
    ("street_address", "address_street"),
    ("address", "address_street"),
    ("city", "address_city"),
    ("state", "address_state"),
    ("zip", "address_postal"),
    ("zip_code", "address_postal"),
    ("postal_code", "address_postal"),
    ("dob", "date_of_birth"),
    ("birth_date", "date_of_birth"),
    ("license_no", "license_number"),
    ("dl_number", "license_number"),
    ("driver_license_number", "license_number"),
    ("expiration_date", "expiry_date"),
    ("issued_date", "issue_date"),
    ("policy_no", "policy_number"),
    ("insurance_provider", "provider"),
    ("plan", "plan_type"),
    ("effective_date", "coverage_start"),
    ("student_number", "student_id"),
    ("name", "__name"),
];

fn normalize_key(raw: &str) -> Option<String> {
    let raw = raw.trim().trim_matches(|c| c == '*' || c == '"' || c == '\'' || c == '`').trim();
    if raw.is_empty() || raw.len() > 40 || !raw.starts_with(|c: char| c.is_ascii_alphabetic()) {
        return None;
    }
    let key: String = raw
        .chars()
        .map(|c| match c {
            ' ' | '-' | '.' => '_',
            c => c.to_ascii_lowercase(),
        })
        .collect();
    valid_key(&key).then_some(key)
}

fn canonical(key: String, schema: &RecordSchema) -> String {
    if schema.has_field(&key) {
        return key;
    }
    match ALIASES.iter().find(|(a, _)| *a == key) {
        // A bare "name" means the holder name where the schema has one.
        Some((_, "__name")) => match schema.kind {
            DocumentKind::InsuranceCard => "member_name".into(),
            DocumentKind::UniversityId => "student_name".into(),
            DocumentKind::DriverLicense => key,
        },
        Some((_, target)) if schema.has_field(target) => (*target).into(),
        _ => key,
    }
}

fn clean_value(v: &str) -> &str {
    let v = v.trim();
    let v = v.trim_matches('*').trim();
    if v.len() >= 2 && ((v.starts_with('"') && v.ends_with('"')) || (v.starts_with('\'') && v.ends_with('\''))) {
        v[1..v.len() - 1].trim()
    } else {
        v
    }
}

/// The line carrying the fields: code fences dropped, then the line with the
/// most separators. Responses with one `key: value` per line are joined.
fn field_line(text: &str) -> Option<String> {
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with("```"))
        .collect();
    let best = lines.iter().copied().max_by_key(|l| l.matches(SEPARATOR).count())?;
    if best.contains(SEPARATOR) {
        return Some(best.to_string());
    }
    let keyed: Vec<&str> = lines
        .iter()
        .map(|l| l.trim_start_matches(['-', '*', ' ']))
        .filter(|l| l.split_once(':').is_some_and(|(k, _)| normalize_key(k).is_some()))
        .collect();
    if keyed.len() >= 2 {
        let mut joined = String::new();
        for (i, l) in keyed.iter().enumerate() {
            if i > 0 {
                joined.push(SEPARATOR);
            }
            joined.push_str(l);
        }
        return Some(joined);
    }
    None
}

fn malformed(reason: &'static str, segment: &str, missing: Vec<String>) -> RecordError {
    RecordError::MalformedResponse { reason, segment: segment.to_string(), missing }
}

/// Parses a chat-model response without issuer context.
pub fn parse_llm_response(text: &str, schema: &RecordSchema) -> Result<IdentityRecord, RecordError> {
    parse_llm_response_with(text, schema, None, None)
}

/// Parses a chat-model response. Keyed `key: value` segments and bare
/// positional values may be mixed; bare values fill the schema fields not yet
/// named, in schema order. When given, `issuer` and `country` fill the
/// issuer and country fields the response left out.
pub fn parse_llm_response_with(
    text: &str,
    schema: &RecordSchema,
    issuer: Option<&str>,
    country: Option<&str>,
) -> Result<IdentityRecord, RecordError> {
    if text.trim().is_empty() {
        return Err(malformed("empty response", "", Vec::new()));
    }
    let line = field_line(text).ok_or_else(|| malformed("unsplittable text", text.trim(), Vec::new()))?;

    let mut entries: Vec<(String, String, String)> = Vec::new();
    let mut bare: Vec<(String, String)> = Vec::new();
    for segment in line.split(SEPARATOR).map(str::trim).filter(|s| !s.is_empty()) {
        let body = segment.trim_start_matches(['-', ' ']);
        let keyed = body.split_once(':').and_then(|(k, v)| normalize_key(k).map(|k| (k, v)));
        match keyed {
            Some((k, v)) => {
                let k = canonical(k, schema);
                if entries.iter().any(|(e, _, _)| *e == k) {
                    return Err(malformed("duplicate field", segment, Vec::new()));
                }
                entries.push((k, clean_value(v).to_string(), segment.to_string()));
            }
            None => bare.push((clean_value(body).to_string(), segment.to_string())),
        }
    }
    if !bare.is_empty() {
        let open: Vec<String> =
            schema.fields().filter(|f| !entries.iter().any(|(e, _, _)| e == f)).map(String::from).collect();
        let mut open = open.into_iter();
        for (value, segment) in bare {
            let field = open.next().ok_or_else(|| malformed("more values than schema fields", &segment, Vec::new()))?;
            entries.push((field, value, segment));
        }
        // Keep schema order for the positional part.
        entries.sort_by_key(|(k, _, _)| schema.fields().position(|f| f == k).unwrap_or(usize::MAX));
    }

    let issuer_field = schema.kind.issuer_field();
    for (field, ctx) in [(issuer_field, issuer), ("country", country)] {
        if let Some(ctx) = ctx {
            let present = entries.iter().any(|(e, _, _)| e == field);
            if schema.has_field(field) && !present {
                entries.push((field.to_string(), ctx.to_string(), String::new()));
            }
        }
    }

    let missing: Vec<String> = schema
        .required_fields
        .iter()
        .filter(|f| !entries.iter().any(|(e, v, _)| e == *f && !v.is_empty()))
        .cloned()
        .collect();
    if !missing.is_empty() {
        return Err(malformed("missing required fields", &line, missing));
    }

    for (field, value, segment) in entries.iter_mut() {
        match schema.rule(field) {
            Some(FormatRule::Date) if Date::parse_iso(value).is_none() => {
                if let Some(d) = Date::parse_loose(value) {
                    *value = d.iso();
                }
            }
            Some(FormatRule::Pattern(_)) => {
                // Identifiers are case-insensitive in model output.
                let upper = value.to_ascii_uppercase();
                if schema.rule(field).is_some_and(|r| r.check(&upper)) {
                    *value = upper;
                }
            }
            _ => {}
        }
        if let Some(rule) = schema.rule(field) {
            if !rule.check(value) {
                return Err(RecordError::FormatViolation {
                    field: field.clone(),
                    rule: rule.describe(),
                    segment: segment.clone(),
                });
            }
        }
    }

    let fields: FieldMap = entries.iter().map(|(k, v, _)| (k.clone(), v.clone())).collect();
    let record = IdentityRecord {
        kind: schema.kind,
        issuer: issuer.or(fields.get(issuer_field)).unwrap_or_default().to_string(),
        country: country.or(fields.get("country")).unwrap_or_default().to_string(),
        fields,
        source: Source::Llm,
    };
    check(record, |field| entries.iter().find(|(k, _, _)| k == field).map_or("", |e| e.2.as_str()))
}

fn check<'a>(record: IdentityRecord, segment_of: impl Fn(&str) -> &'a str) -> Result<IdentityRecord, RecordError> {
    let report = validate_record(&record);
    match report.violations.first() {
        None => Ok(record),
        Some(v) => Err(RecordError::FormatViolation {
            field: v.field.clone(),
            rule: if v.rule == Rule::Format { v.message.clone() } else { v.rule.as_str().to_string() },
            segment: segment_of(&v.field).to_string(),
        }),
    }
}

/// Strict reader for corpus lines written by [`IdentityRecord::to_line`].
pub fn parse_record_line(line: &str, kind: DocumentKind, source: Source) -> Result<IdentityRecord, RecordError> {
    let line = line.trim_end_matches(['\r', '\n']);
    if line.trim().is_empty() {
        return Err(malformed("empty line", "", Vec::new()));
    }
    let mut fields = FieldMap::new();
    let mut segments = Vec::new();
    for segment in line.split(SEPARATOR) {
        let (k, v) = segment.split_once(':').ok_or_else(|| malformed("segment without key", segment, Vec::new()))?;
        let (k, v) = (k.trim(), v.trim());
        if !valid_key(k) {
            return Err(malformed("bad field name", segment, Vec::new()));
        }
        if fields.contains(k) {
            return Err(malformed("duplicate field", segment, Vec::new()));
        }
        fields.set(k, v);
        segments.push((k.to_string(), segment.to_string()));
    }
    let schema = RecordSchema::for_kind(kind);
    let missing: Vec<String> = schema.required_fields.iter().filter(|f| !fields.contains(f)).cloned().collect();
    if !missing.is_empty() {
        return Err(malformed("missing required fields", line, missing));
    }
    let record = IdentityRecord {
        kind,
        issuer: fields.get(kind.issuer_field()).unwrap_or_default().to_string(),
        country: fields.get("country").unwrap_or_default().to_string(),
        fields,
        source,
    };
    check(record, |field| segments.iter().find(|(k, _)| k == field).map_or("", |s| s.1.as_str()))
}
