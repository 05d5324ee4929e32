//! Fictional identity-document records.
//!
//! Records come from two places: the template generator, which draws names
//! and streets from bundled pools and expands identifier patterns from
//! issuer profiles, and the parser for chat-model responses. Both produce
//! [`IdentityRecord`]s that pass [`validate_record`].

pub mod date;
mod generate;
mod parse;
pub mod pattern;
mod profile;
mod schema;
mod validate;

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::{Deserialize, Serialize};

pub use generate::{generate_template_records, TemplateGenerator};
pub use parse::{parse_llm_response, parse_llm_response_with, parse_record_line};
pub use profile::{IssuerEntry, IssuerProfiles, ResolvedProfile, WordPools};
pub use schema::{FormatRule, RecordSchema};
pub use validate::{dedup_records, validate_record, Rule, ValidationReport, Violation};

/// Separator between serialized fields; banned inside values.
pub const SEPARATOR: char = '|';

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    DriverLicense,
    InsuranceCard,
    UniversityId,
}

impl DocumentKind {
    pub const ALL: [DocumentKind; 3] = [DocumentKind::DriverLicense, DocumentKind::InsuranceCard, DocumentKind::UniversityId];

    pub const fn as_str(self) -> &'static str {
        match self {
            DocumentKind::DriverLicense => "driver_license",
            DocumentKind::InsuranceCard => "insurance_card",
            DocumentKind::UniversityId => "university_id",
        }
    }

    pub fn parse(s: &str) -> Option<DocumentKind> {
        DocumentKind::ALL.into_iter().find(|k| k.as_str() == s)
    }

    /// Field naming the issuer of this kind of document.
    pub const fn issuer_field(self) -> &'static str {
        match self {
            DocumentKind::DriverLicense => "issuing_state",
            DocumentKind::InsuranceCard => "provider",
            DocumentKind::UniversityId => "university",
        }
    }
}

impl fmt::Display for DocumentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Source {
    Llm,
    Template,
}

impl Source {
    pub const fn as_str(self) -> &'static str {
        match self {
            Source::Llm => "llm",
            Source::Template => "template",
        }
    }
}

/// Field name to value, in insertion order.
#[derive(Clone, PartialEq, Eq, Hash, Default, Debug)]
pub struct FieldMap(Vec<(String, String)>);

impl FieldMap {
    pub fn new() -> FieldMap {
        FieldMap(Vec::new())
    }

    pub fn get(&self, name: &str) -> Option<&str> {
        self.0.iter().find(|(k, _)| k == name).map(|(_, v)| v.as_str())
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    /// Replaces the value in place or appends a new field.
    pub fn set(&mut self, name: impl Into<String>, value: impl Into<String>) {
        let name = name.into();
        let value = value.into();
        match self.0.iter_mut().find(|(k, _)| *k == name) {
            Some(slot) => slot.1 = value,
            None => self.0.push((name, value)),
        }
    }

    pub fn remove(&mut self, name: &str) -> Option<String> {
        let i = self.0.iter().position(|(k, _)| k == name)?;
        Some(self.0.remove(i).1)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl<K: Into<String>, V: Into<String>> FromIterator<(K, V)> for FieldMap {
    fn from_iter<I: IntoIterator<Item = (K, V)>>(iter: I) -> Self {
        let mut m = FieldMap::new();
        for (k, v) in iter {
            m.set(k, v);
        }
        m
    }
}

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct IdentityRecord {
    pub kind: DocumentKind,
    pub fields: FieldMap,
    /// State, insurer or university.
    pub issuer: String,
    pub country: String,
    pub source: Source,
}

impl IdentityRecord {
    pub fn get(&self, field: &str) -> Option<&str> {
        self.fields.get(field)
    }

    /// `key: value|key: value`, in field order.
    pub fn to_line(&self) -> String {
        let mut out = String::new();
        for (i, (k, v)) in self.fields.iter().enumerate() {
            if i > 0 {
                out.push(SEPARATOR);
            }
            out.push_str(k);
            out.push_str(": ");
            out.push_str(v);
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RecordError {
    #[error("invalid request: {0}")]
    InvalidRequest(&'static str),
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("no {kind} profile for issuer {issuer:?}")]
    UnknownIssuer { kind: DocumentKind, issuer: String },
    #[error("issuer profile: {0}")]
    Profile(String),
    #[error("unknown key field {0:?}")]
    UnknownKeyField(String),
    #[error("malformed response ({reason}) at segment {segment:?}; missing {missing:?}")]
    MalformedResponse { reason: &'static str, segment: String, missing: Vec<String> },
    #[error("field {field} fails {rule} at segment {segment:?}")]
    FormatViolation { field: String, rule: String, segment: String },
    #[error("could not draw a unique {field} after {attempts} attempts")]
    IdentifierSpaceExhausted { field: String, attempts: usize },
}
