//! Per-field unique counts and Shannon entropy over whole field values.
//!
//! Values are counted exactly as emitted: no case folding, no trimming.
//! Besides schema fields, two virtual fields are available: `full_name`
//! (given and family name, or the single holder-name field) and
//! `full_address` (street, city, state and postal code).

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::record::{IdentityRecord, RecordSchema};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DiversityError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("field {field} is missing from corpus {corpus}")]
    MissingField { field: String, corpus: String },
    #[error("report: {0}")]
    Report(String),
}

/// Occurrence counts of the values of one field.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldDistribution {
    pub field: String,
    pub counts: BTreeMap<String, u64>,
    pub total: u64,
}

impl FieldDistribution {
    pub fn new(field: &str) -> FieldDistribution {
        FieldDistribution { field: field.to_string(), counts: BTreeMap::new(), total: 0 }
    }

    pub fn from_values<S: AsRef<str>>(field: &str, values: &[S]) -> Result<FieldDistribution, DiversityError> {
        if values.is_empty() {
            return Err(DiversityError::EmptyCorpus);
        }
        let mut d = FieldDistribution::new(field);
        for v in values {
            d.add(v.as_ref());
        }
        Ok(d)
    }

    pub fn add(&mut self, value: &str) {
        *self.counts.entry(value.to_string()).or_insert(0) += 1;
        self.total += 1;
    }

    /// Adds the counts of `other`; counting is a mergeable fold.
    pub fn merge(&mut self, other: &FieldDistribution) {
        for (v, c) in &other.counts {
            *self.counts.entry(v.clone()).or_insert(0) += c;
        }
        self.total += other.total;
    }

    pub fn unique(&self) -> usize {
        self.counts.len()
    }
}

/// Number of distinct exact values.
pub fn unique_count<S: AsRef<str>>(values: &[S]) -> Result<usize, DiversityError> {
    Ok(FieldDistribution::from_values("", values)?.unique())
}

/// `-Σ p log2 p` in bits over the nonzero probabilities.
pub fn shannon_entropy(dist: &FieldDistribution) -> f64 {
    if dist.total == 0 {
        return 0.0;
    }
    let total = dist.total as f64;
    let mut h = 0.0;
    for &c in dist.counts.values() {
        if c > 0 {
            let p = c as f64 / total;
            h -= p * libm::log2(p);
        }
    }
    // Rounding can leave a few ulps outside the exact bounds.
    h.clamp(0.0, libm::log2(dist.unique().max(1) as f64))
}

/// Value of `field` on `record`, resolving the virtual fields.
pub fn field_value(record: &IdentityRecord, field: &str) -> Option<String> {
    match field {
        "full_name" => {
            if let (Some(first), Some(family)) = (record.get("first_name"), record.get("family_name")) {
                return Some(alloc::format!("{first} {family}"));
            }
            record.get("member_name").or(record.get("student_name")).map(String::from)
        }
        "full_address" => {
            let street = record.get("address_street")?;
            Some(alloc::format!(
                "{street}, {}, {} {}",
                record.get("address_city")?,
                record.get("address_state")?,
                record.get("address_postal")?
            ))
        }
        f => record.get(f).map(String::from),
    }
}

fn schema_has(schema: &RecordSchema, field: &str) -> bool {
    match field {
        "full_name" => {
            (schema.has_field("first_name") && schema.has_field("family_name"))
                || schema.has_field("member_name")
                || schema.has_field("student_name")
        }
        "full_address" => ["address_street", "address_city", "address_state", "address_postal"]
            .iter()
            .all(|f| schema.has_field(f)),
        f => schema.has_field(f),
    }
}

/// Distribution of `field` over the records that carry it.
pub fn distribution(records: &[IdentityRecord], field: &str, corpus: &str) -> Result<FieldDistribution, DiversityError> {
    let first = records.first().ok_or(DiversityError::EmptyCorpus)?;
    let missing = || DiversityError::MissingField { field: field.to_string(), corpus: corpus.to_string() };
    if !schema_has(&RecordSchema::for_kind(first.kind), field) {
        return Err(missing());
    }
    let mut d = FieldDistribution::new(field);
    for r in records {
        if let Some(v) = field_value(r, field) {
            d.add(&v);
        }
    }
    if d.total == 0 {
        return Err(missing());
    }
    Ok(d)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusInfo {
    pub id: String,
    pub size: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldMetrics {
    pub unique_count: usize,
    pub entropy_bits: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldRow {
    pub field: String,
    /// One entry per corpus, in corpus order.
    pub metrics: Vec<FieldMetrics>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub corpora: Vec<CorpusInfo>,
    pub fields: Vec<FieldRow>,
}

/// Report over any number of named corpora, fields in the order given.
pub fn report(corpora: &[(&str, &[IdentityRecord])], fields: &[&str]) -> Result<DiversityReport, DiversityError> {
    if corpora.is_empty() || corpora.iter().any(|(_, r)| r.is_empty()) {
        return Err(DiversityError::EmptyCorpus);
    }
    let mut rows = Vec::with_capacity(fields.len());
    for field in fields {
        let mut metrics = Vec::with_capacity(corpora.len());
        for (id, records) in corpora {
            let d = distribution(records, field, id)?;
            metrics.push(FieldMetrics { unique_count: d.unique(), entropy_bits: shannon_entropy(&d) });
        }
        rows.push(FieldRow { field: field.to_string(), metrics });
    }
    Ok(DiversityReport {
        corpora: corpora.iter().map(|(id, r)| CorpusInfo { id: id.to_string(), size: r.len() }).collect(),
        fields: rows,
    })
}

/// Two-column report of corpus `a` against corpus `b`.
pub fn compare_corpora(
    a: (&str, &[IdentityRecord]),
    b: (&str, &[IdentityRecord]),
    fields: &[&str],
) -> Result<DiversityReport, DiversityError> {
    report(&[a, b], fields)
}

impl DiversityReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<DiversityReport, DiversityError> {
        serde_json::from_str(text).map_err(|e| DiversityError::Report(e.to_string()))
    }

    pub fn metrics(&self, field: &str, corpus: usize) -> Option<FieldMetrics> {
        self.fields.iter().find(|r| r.field == field).and_then(|r| r.metrics.get(corpus).copied())
    }

    /// Aligned plain-text table, entropies to six decimals.
    pub fn to_text(&self) -> String {
        let mut header: Vec<String> = alloc::vec!["field".into()];
        for c in &self.corpora {
            header.push(alloc::format!("{} unique", c.id));
            header.push(alloc::format!("{} entropy", c.id));
        }
        let mut rows: Vec<Vec<String>> = alloc::vec![header];
        for r in &self.fields {
            let mut row = alloc::vec![r.field.clone()];
            for m in &r.metrics {
                row.push(alloc::format!("{}", m.unique_count));
                row.push(alloc::format!("{:.6}", m.entropy_bits));
            }
            rows.push(row);
        }
        let cols = rows[0].len();
        let widths: Vec<usize> = (0..cols).map(|i| rows.iter().map(|r| r[i].len()).max().unwrap_or(0)).collect();
        let mut out = String::new();
        for c in &self.corpora {
            let _ = writeln!(out, "# {}: {} records", c.id, c.size);
        }
        for (n, row) in rows.iter().enumerate() {
            for (i, cell) in row.iter().enumerate() {
                if i == 0 {
                    let _ = write!(out, "{cell:<w$}", w = widths[0]);
                } else {
                    let _ = write!(out, "  {cell:>w$}", w = widths[i]);
                }
            }
            out.push('\n');
            if n == 0 {
                let rule = widths.iter().sum::<usize>() + 2 * (cols - 1);
                out.extend(core::iter::repeat_n('-', rule));
                out.push('\n');
            }
        }
        out
    }
}
