use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::date::Date;
use super::pattern::Pattern;
use super::{DocumentKind, RecordError};

/// How a field value must look.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum FormatRule {
    /// Free text of `min..=max` characters without control characters.
    Text { min: usize, max: usize },
    Pattern(Pattern),
    /// ISO `YYYY-MM-DD`.
    Date,
    Year { min: i32, max: i32 },
}

impl FormatRule {
    pub fn check(&self, value: &str) -> bool {
        match self {
            FormatRule::Text { min, max } => {
                let n = value.chars().count();
                (*min..=*max).contains(&n) && !value.chars().any(char::is_control) && value.trim() == value
            }
            FormatRule::Pattern(p) => p.matches(value),
            FormatRule::Date => Date::parse_iso(value).is_some(),
            FormatRule::Year { min, max } => {
                value.len() == 4 && value.parse::<i32>().is_ok_and(|y| (*min..=*max).contains(&y))
            }
        }
    }

    pub fn describe(&self) -> String {
        match self {
            FormatRule::Text { min, max } => alloc::format!("text of {min} to {max} characters"),
            FormatRule::Pattern(p) => alloc::format!("pattern {}", p.as_str()),
            FormatRule::Date => "date YYYY-MM-DD".to_string(),
            FormatRule::Year { min, max } => alloc::format!("year {min} to {max}"),
        }
    }
}

/// Field layout of one document kind.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordSchema {
    pub kind: DocumentKind,
    pub required_fields: Vec<String>,
    pub optional_fields: Vec<String>,
    pub field_formats: Vec<(String, FormatRule)>,
    /// Pairs `(earlier, later)` of date fields that must be strictly ordered.
    pub date_order: Vec<(String, String)>,
    /// Field that must be unique within a generated batch.
    pub identifier: String,
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn pattern(src: &str) -> FormatRule {
    FormatRule::Pattern(Pattern::parse(src).expect("built-in pattern"))
}

const NAME: FormatRule = FormatRule::Text { min: 1, max: 64 };
const SHORT: FormatRule = FormatRule::Text { min: 1, max: 40 };
const LONG: FormatRule = FormatRule::Text { min: 1, max: 96 };

impl RecordSchema {
    /// The built-in schema for `kind`.
    pub fn for_kind(kind: DocumentKind) -> RecordSchema {
        match kind {
            DocumentKind::DriverLicense => RecordSchema {
                kind,
                required_fields: names(&[
                    "family_name",
                    "first_name",
                    "address_street",
                    "address_city",
                    "address_state",
                    "address_postal",
                    "date_of_birth",
                    "license_number",
                    "issue_date",
                    "expiry_date",
                    "issuing_state",
                    "country",
                ]),
                optional_fields: Vec::new(),
                field_formats: alloc::vec![
                    ("family_name".into(), NAME),
                    ("first_name".into(), NAME),
                    ("address_street".into(), LONG),
                    ("address_city".into(), SHORT),
                    ("address_state".into(), pattern("AA")),
                    ("address_postal".into(), pattern("9{5}(-9{4})?")),
                    ("date_of_birth".into(), FormatRule::Date),
                    ("license_number".into(), pattern("[A-Z0-9\\-]{4,20}")),
                    ("issue_date".into(), FormatRule::Date),
                    ("expiry_date".into(), FormatRule::Date),
                    ("issuing_state".into(), SHORT),
                    ("country".into(), SHORT),
                ],
                date_order: alloc::vec![
                    ("date_of_birth".into(), "issue_date".into()),
                    ("issue_date".into(), "expiry_date".into()),
                ],
                identifier: "license_number".into(),
            },
            DocumentKind::InsuranceCard => RecordSchema {
                kind,
                required_fields: names(&[
                    "member_name",
                    "policy_number",
                    "provider",
                    "plan_type",
                    "coverage_start",
                    "coverage_end",
                ]),
                optional_fields: names(&["group_number", "country"]),
                field_formats: alloc::vec![
                    ("member_name".into(), NAME),
                    ("policy_number".into(), pattern("[A-Z0-9\\-]{5,24}")),
                    ("provider".into(), LONG),
                    ("plan_type".into(), SHORT),
                    ("coverage_start".into(), FormatRule::Date),
                    ("coverage_end".into(), FormatRule::Date),
                    ("group_number".into(), pattern("[A-Z0-9\\-]{3,20}")),
                    ("country".into(), SHORT),
                ],
                date_order: alloc::vec![("coverage_start".into(), "coverage_end".into())],
                identifier: "policy_number".into(),
            },
            DocumentKind::UniversityId => RecordSchema {
                kind,
                required_fields: names(&["student_name", "student_id", "department", "enrollment_year", "university"]),
                optional_fields: names(&["country"]),
                field_formats: alloc::vec![
                    ("student_name".into(), NAME),
                    ("student_id".into(), pattern("[A-Z0-9\\-]{4,20}")),
                    ("department".into(), LONG),
                    ("enrollment_year".into(), FormatRule::Year { min: 1950, max: 2100 }),
                    ("university".into(), LONG),
                    ("country".into(), SHORT),
                ],
                date_order: Vec::new(),
                identifier: "student_id".into(),
            },
        }
    }

    pub fn rule(&self, field: &str) -> Option<&FormatRule> {
        self.field_formats.iter().find(|(f, _)| f == field).map(|(_, r)| r)
    }

    /// Required then optional fields, in schema order.
    pub fn fields(&self) -> impl Iterator<Item = &str> {
        self.required_fields.iter().chain(&self.optional_fields).map(String::as_str)
    }

    pub fn has_field(&self, field: &str) -> bool {
        self.fields().any(|f| f == field)
    }

    /// Checks the schema's own invariants.
    pub fn check(&self) -> Result<(), RecordError> {
        if self.required_fields.is_empty() {
            return Err(RecordError::InvalidSchema("no required fields".into()));
        }
        for f in &self.required_fields {
            if self.optional_fields.contains(f) {
                return Err(RecordError::InvalidSchema(alloc::format!("{f} is both required and optional")));
            }
        }
        for f in self.fields() {
            if self.rule(f).is_none() {
                return Err(RecordError::InvalidSchema(alloc::format!("{f} has no format rule")));
            }
        }
        for (a, b) in &self.date_order {
            if self.rule(a) != Some(&FormatRule::Date) || self.rule(b) != Some(&FormatRule::Date) {
                return Err(RecordError::InvalidSchema(alloc::format!("{a} < {b} orders non-date fields")));
            }
        }
        if !self.required_fields.contains(&self.identifier) {
            return Err(RecordError::InvalidSchema("identifier is not a required field".into()));
        }
        Ok(())
    }
}
