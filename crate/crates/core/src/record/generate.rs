use alloc::collections::BTreeSet;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::date::Date;
use super::profile::{IssuerProfiles, ResolvedProfile, WordPools};
use super::{DocumentKind, FieldMap, IdentityRecord, RecordError, RecordSchema, Source};
use crate::seed;

const MAX_REDRAWS: usize = 1000;

/// Template-based record generator.
pub struct TemplateGenerator {
    profiles: IssuerProfiles,
    pools: WordPools,
    generic_fallback: bool,
}

impl Default for TemplateGenerator {
    fn default() -> Self {
        TemplateGenerator::new(IssuerProfiles::bundled())
    }
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn date_between(rng: &mut ChaCha8Rng, lo: Date, hi: Date) -> Date {
    Date::from_days(rng.random_range(lo.to_days()..=hi.to_days()))
}

const fn d(year: i32, month: u8, day: u8) -> Date {
    Date { year, month, day }
}

impl TemplateGenerator {
    pub fn new(profiles: IssuerProfiles) -> TemplateGenerator {
        TemplateGenerator { profiles, pools: WordPools::bundled(), generic_fallback: false }
    }

    /// Lets issuers without a profile use the generic entries.
    pub fn with_generic_fallback(mut self, enabled: bool) -> TemplateGenerator {
        self.generic_fallback = enabled;
        self
    }

    pub fn profiles(&self) -> &IssuerProfiles {
        &self.profiles
    }

    /// `n` records for `issuer`, a pure function of the arguments.
    pub fn generate(
        &self,
        schema: &RecordSchema,
        issuer: &str,
        country: &str,
        n: usize,
        seed: u64,
    ) -> Result<Vec<IdentityRecord>, RecordError> {
        if n == 0 {
            return Err(RecordError::InvalidRequest("n must be at least 1"));
        }
        if issuer.trim().is_empty() || country.trim().is_empty() {
            return Err(RecordError::InvalidRequest("issuer and country must be non-empty"));
        }
        schema.check()?;
        let profile = self.profiles.resolve(schema.kind, issuer, self.generic_fallback)?;
        let mut rng = seed::rng(seed);
        let mut used = BTreeSet::new();
        let mut out = Vec::with_capacity(n);
        for _ in 0..n {
            let id = self.unique_identifier(&profile, &schema.identifier, &mut used, &mut rng)?;
            let fields = match schema.kind {
                DocumentKind::DriverLicense => self.driver_license(&profile, id, country, &mut rng),
                DocumentKind::InsuranceCard => self.insurance_card(&profile, id, country, &mut rng),
                DocumentKind::UniversityId => self.university_id(&profile, id, country, &mut rng),
            };
            let fields = schema
                .fields()
                .filter_map(|f| fields.get(f).map(|v| (f.to_string(), v.to_string())))
                .collect();
            out.push(IdentityRecord {
                kind: schema.kind,
                fields,
                issuer: issuer.to_string(),
                country: country.to_string(),
                source: Source::Template,
            });
        }
        Ok(out)
    }

    fn unique_identifier(
        &self,
        profile: &ResolvedProfile,
        field: &str,
        used: &mut BTreeSet<String>,
        rng: &mut ChaCha8Rng,
    ) -> Result<String, RecordError> {
        for _ in 0..MAX_REDRAWS {
            let id = profile.identifier.expand(rng);
            if used.insert(id.clone()) {
                return Ok(id);
            }
        }
        Err(RecordError::IdentifierSpaceExhausted { field: field.to_string(), attempts: MAX_REDRAWS })
    }

    fn person(&self, rng: &mut ChaCha8Rng) -> (&'static str, &'static str) {
        (*pick(rng, &self.pools.given_names), *pick(rng, &self.pools.surnames))
    }

    fn driver_license(&self, p: &ResolvedProfile, id: String, country: &str, rng: &mut ChaCha8Rng) -> FieldMap {
        let (first, family) = self.person(rng);
        let street = format!("{} {}", rng.random_range(1..=9999u32), pick(rng, &self.pools.streets));
        let dob = date_between(rng, d(1945, 1, 1), d(2007, 12, 31));
        let earliest = dob.add_years(16).max(d(2016, 1, 1));
        let issue = date_between(rng, earliest, d(2025, 6, 30));
        let expiry = issue.add_years(p.validity_years as i32);
        let mut f = FieldMap::new();
        f.set("family_name", family);
        f.set("first_name", first);
        f.set("address_street", street);
        f.set("address_city", pick(rng, &p.cities).as_str());
        f.set("address_state", p.state_code.as_str());
        f.set("address_postal", p.postal.expand(rng));
        f.set("date_of_birth", dob.iso());
        f.set("license_number", id);
        f.set("issue_date", issue.iso());
        f.set("expiry_date", expiry.iso());
        f.set("issuing_state", p.issuer.as_str());
        f.set("country", country);
        f
    }

    fn insurance_card(&self, p: &ResolvedProfile, id: String, country: &str, rng: &mut ChaCha8Rng) -> FieldMap {
        let (first, family) = self.person(rng);
        let start = d(rng.random_range(2021..=2025), rng.random_range(1..=12), 1);
        let end = start.add_years(1).add_days(-1);
        let mut f = FieldMap::new();
        f.set("member_name", format!("{first} {family}"));
        f.set("policy_number", id);
        f.set("provider", p.issuer.as_str());
        f.set("plan_type", pick(rng, &p.plan_types).as_str());
        f.set("coverage_start", start.iso());
        f.set("coverage_end", end.iso());
        if let Some(g) = &p.group_number {
            f.set("group_number", g.expand(rng));
        }
        f.set("country", country);
        f
    }

    fn university_id(&self, p: &ResolvedProfile, id: String, country: &str, rng: &mut ChaCha8Rng) -> FieldMap {
        let (first, family) = self.person(rng);
        let mut f = FieldMap::new();
        f.set("student_name", format!("{first} {family}"));
        f.set("student_id", id);
        f.set("department", pick(rng, &p.departments).as_str());
        f.set("enrollment_year", format!("{}", rng.random_range(2016..=2025)));
        f.set("university", p.issuer.as_str());
        f.set("country", country);
        f
    }
}

/// [`TemplateGenerator::generate`] with the bundled profiles and no generic
/// fallback.
pub fn generate_template_records(
    schema: &RecordSchema,
    issuer: &str,
    country: &str,
    n: usize,
    seed: u64,
) -> Result<Vec<IdentityRecord>, RecordError> {
    TemplateGenerator::default().generate(schema, issuer, country, n, seed)
}
