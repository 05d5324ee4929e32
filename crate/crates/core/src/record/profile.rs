//! Issuer format profiles and the bundled word pools.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Deserialize;

use super::pattern::Pattern;
use super::{DocumentKind, RecordError};

const BUNDLED: &str = include_str!("../../data/issuers.json");
const GIVEN: &str = include_str!("../../data/given_names.txt");
const SURNAMES: &str = include_str!("../../data/surnames.txt");
const STREETS: &str = include_str!("../../data/streets.txt");

fn pool(text: &'static str) -> Vec<&'static str> {
    text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).collect()
}

/// Name and street pools.
pub struct WordPools {
    pub given_names: Vec<&'static str>,
    pub surnames: Vec<&'static str>,
    pub streets: Vec<&'static str>,
}

impl WordPools {
    pub fn bundled() -> WordPools {
        WordPools { given_names: pool(GIVEN), surnames: pool(SURNAMES), streets: pool(STREETS) }
    }
}

/// Format entries for one issuer, as written in a profile file. Missing
/// entries fall back to the generic profile of the same document kind.
#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct IssuerEntry {
    #[serde(default)]
    pub country: Option<String>,
    #[serde(default)]
    pub state_code: Option<String>,
    /// Pattern of the document's identifier field.
    #[serde(default)]
    pub identifier: Option<String>,
    #[serde(default)]
    pub group_number: Option<String>,
    #[serde(default)]
    pub postal: Option<String>,
    #[serde(default)]
    pub validity_years: Option<u8>,
    #[serde(default)]
    pub cities: Vec<String>,
    #[serde(default)]
    pub plan_types: Vec<String>,
    #[serde(default)]
    pub departments: Vec<String>,
}

impl IssuerEntry {
    fn overlay(&mut self, base: &IssuerEntry) {
        fn fill<T: Clone>(slot: &mut Option<T>, from: &Option<T>) {
            if slot.is_none() {
                slot.clone_from(from);
            }
        }
        fill(&mut self.country, &base.country);
        fill(&mut self.state_code, &base.state_code);
        fill(&mut self.identifier, &base.identifier);
        fill(&mut self.group_number, &base.group_number);
        fill(&mut self.postal, &base.postal);
        fill(&mut self.validity_years, &base.validity_years);
        for (mine, theirs) in [
            (&mut self.cities, &base.cities),
            (&mut self.plan_types, &base.plan_types),
            (&mut self.departments, &base.departments),
        ] {
            if mine.is_empty() {
                mine.clone_from(theirs);
            }
        }
    }
}

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
struct GenericEntries {
    #[serde(default)]
    driver_license: IssuerEntry,
    #[serde(default)]
    insurance_card: IssuerEntry,
    #[serde(default)]
    university_id: IssuerEntry,
}

/// Issuer name to format entries, per document kind.
#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct IssuerProfiles {
    #[serde(default)]
    driver_license: BTreeMap<String, IssuerEntry>,
    #[serde(default)]
    insurance_card: BTreeMap<String, IssuerEntry>,
    #[serde(default)]
    university_id: BTreeMap<String, IssuerEntry>,
    #[serde(default)]
    generic: GenericEntries,
}

/// A profile with all patterns compiled and all fallbacks applied.
#[derive(Clone, Debug)]
pub struct ResolvedProfile {
    pub issuer: String,
    pub country: Option<String>,
    pub state_code: String,
    pub identifier: Pattern,
    pub group_number: Option<Pattern>,
    pub postal: Pattern,
    pub validity_years: u8,
    pub cities: Vec<String>,
    pub plan_types: Vec<String>,
    pub departments: Vec<String>,
    /// True when no issuer-specific entry existed.
    pub generic: bool,
}

/// Two-letter code from an issuer name: initials of the first two words,
/// or the first two letters of a single word.
fn derived_code(issuer: &str) -> String {
    let words: Vec<&str> = issuer.split_whitespace().filter(|w| w.chars().next().is_some_and(char::is_alphabetic)).collect();
    let letters: String = match words.as_slice() {
        [a, b, ..] => [a.chars().next(), b.chars().next()].into_iter().flatten().collect(),
        [a] => a.chars().filter(|c| c.is_ascii_alphabetic()).take(2).collect(),
        [] => String::new(),
    };
    let code: String = letters.chars().filter(char::is_ascii_alphabetic).map(|c| c.to_ascii_uppercase()).collect();
    if code.len() == 2 {
        code
    } else {
        "ZZ".to_string()
    }
}

impl IssuerProfiles {
    pub fn bundled() -> IssuerProfiles {
        IssuerProfiles::from_json(BUNDLED).expect("bundled issuer profiles parse")
    }

    pub fn from_json(text: &str) -> Result<IssuerProfiles, RecordError> {
        serde_json::from_str(text).map_err(|e| RecordError::Profile(e.to_string()))
    }

    /// Entries of `other` replace or add to these.
    pub fn merge(&mut self, other: IssuerProfiles) {
        self.driver_license.extend(other.driver_license);
        self.insurance_card.extend(other.insurance_card);
        self.university_id.extend(other.university_id);
        let g = other.generic;
        for (mine, theirs) in [
            (&mut self.generic.driver_license, g.driver_license),
            (&mut self.generic.insurance_card, g.insurance_card),
            (&mut self.generic.university_id, g.university_id),
        ] {
            if theirs != IssuerEntry::default() {
                let mut next = theirs;
                next.overlay(mine);
                *mine = next;
            }
        }
    }

    fn tables(&self, kind: DocumentKind) -> (&BTreeMap<String, IssuerEntry>, &IssuerEntry) {
        match kind {
            DocumentKind::DriverLicense => (&self.driver_license, &self.generic.driver_license),
            DocumentKind::InsuranceCard => (&self.insurance_card, &self.generic.insurance_card),
            DocumentKind::UniversityId => (&self.university_id, &self.generic.university_id),
        }
    }

    pub fn issuers(&self, kind: DocumentKind) -> impl Iterator<Item = &str> {
        self.tables(kind).0.keys().map(String::as_str)
    }

    pub fn entry(&self, kind: DocumentKind, issuer: &str) -> Option<&IssuerEntry> {
        self.tables(kind).0.get(issuer)
    }

    /// Compiles the profile for `issuer`, falling back to the generic entry
    /// when `allow_generic` is set.
    pub fn resolve(&self, kind: DocumentKind, issuer: &str, allow_generic: bool) -> Result<ResolvedProfile, RecordError> {
        let (table, generic) = self.tables(kind);
        let (mut entry, is_generic) = match table.get(issuer) {
            Some(e) => (e.clone(), false),
            None if allow_generic => (IssuerEntry::default(), true),
            None => return Err(RecordError::UnknownIssuer { kind, issuer: issuer.to_string() }),
        };
        entry.overlay(generic);
        let compile = |field: &str, src: Option<&String>| -> Result<Pattern, RecordError> {
            let src = src.ok_or_else(|| RecordError::Profile(alloc::format!("{issuer}: no {field} pattern")))?;
            Pattern::parse(src).map_err(|e| RecordError::Profile(e.to_string()))
        };
        let needs_list = |name: &str, list: &Vec<String>, needed: bool| -> Result<(), RecordError> {
            if needed && list.is_empty() {
                Err(RecordError::Profile(alloc::format!("{issuer}: no {name}")))
            } else {
                Ok(())
            }
        };
        needs_list("cities", &entry.cities, kind == DocumentKind::DriverLicense)?;
        needs_list("plan_types", &entry.plan_types, kind == DocumentKind::InsuranceCard)?;
        needs_list("departments", &entry.departments, kind == DocumentKind::UniversityId)?;
        let postal = match kind {
            DocumentKind::DriverLicense => compile("postal", entry.postal.as_ref())?,
            _ => Pattern::parse("9{5}").expect("static pattern"),
        };
        Ok(ResolvedProfile {
            issuer: issuer.to_string(),
            country: entry.country.clone(),
            state_code: entry.state_code.clone().unwrap_or_else(|| derived_code(issuer)),
            identifier: compile("identifier", entry.identifier.as_ref())?,
            group_number: entry.group_number.as_ref().map(|g| compile("group_number", Some(g))).transpose()?,
            postal,
            validity_years: entry.validity_years.unwrap_or(5),
            cities: entry.cities,
            plan_types: entry.plan_types,
            departments: entry.departments,
            generic: is_generic,
        })
    }
}
