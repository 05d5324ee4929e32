//! Pipeline configuration file.
//!
//! Relative paths are resolved against the directory of the config file.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use idbsynth_core::record::{DocumentKind, IssuerProfiles};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {message}")]
    Read { path: PathBuf, message: String },
    #[error("invalid config: {0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    Llm,
    Template,
    Both,
}

impl Backend {
    pub fn parse(s: &str) -> Option<Backend> {
        match s {
            "llm" => Some(Backend::Llm),
            "template" => Some(Backend::Template),
            "both" => Some(Backend::Both),
            _ => None,
        }
    }

    /// Corpus sources in file order.
    pub fn sources(self) -> &'static [&'static str] {
        match self {
            Backend::Llm => &["llm"],
            Backend::Template => &["template"],
            Backend::Both => &["llm", "template"],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IssuerRef {
    pub issuer: String,
    pub country: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LlmMode {
    /// Replay when a fixture directory is configured, else live.
    #[default]
    Auto,
    Live,
    Replay,
    Record,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LlmSettings {
    pub mode: LlmMode,
    pub fixtures: Option<PathBuf>,
    /// Overrides `LLM_MODEL`.
    pub model: Option<String>,
    pub temperature: f64,
    pub max_tokens: u32,
    pub parallelism: usize,
}

impl Default for LlmSettings {
    fn default() -> Self {
        LlmSettings {
            mode: LlmMode::Auto,
            fixtures: None,
            model: None,
            temperature: crate::llm::DEFAULT_TEMPERATURE,
            max_tokens: crate::llm::DEFAULT_MAX_TOKENS,
            parallelism: 4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AugmentSettings {
    /// Policy file; the built-in default policy when absent.
    pub policy: Option<PathBuf>,
    /// Share of samples that go through augmentation.
    pub fraction: f64,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings { policy: None, fraction: 0.5 }
    }
}

#[derive(Clone, Debug, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct AuditSettings {
    pub corpus_a: Option<PathBuf>,
    pub corpus_b: Option<PathBuf>,
    pub fields: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct VerifySettings {
    pub min_clean_rate: f64,
    pub min_augmented_rate: f64,
}

impl Default for VerifySettings {
    fn default() -> Self {
        VerifySettings { min_clean_rate: 1.0, min_augmented_rate: 0.9 }
    }
}

fn default_mix() -> BTreeMap<DocumentKind, f64> {
    DocumentKind::ALL.into_iter().map(|k| (k, 1.0 / 3.0)).collect()
}

fn default_issuers() -> BTreeMap<DocumentKind, Vec<IssuerRef>> {
    let profiles = IssuerProfiles::bundled();
    DocumentKind::ALL
        .into_iter()
        .map(|k| {
            let list = profiles
                .issuers(k)
                .map(|i| IssuerRef {
                    issuer: i.to_string(),
                    country: profiles.entry(k, i).and_then(|e| e.country.clone()).unwrap_or_else(|| "USA".into()),
                })
                .collect();
            (k, list)
        })
        .collect()
}

fn default_iins() -> Vec<String> {
    (0..10).map(|i| format!("63600{i}")).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PipelineConfig {
    pub seed: u64,
    /// Total number of records, split across kinds by `mix`.
    pub count: usize,
    pub mix: BTreeMap<DocumentKind, f64>,
    pub issuers: BTreeMap<DocumentKind, Vec<IssuerRef>>,
    pub backend: Backend,
    /// Extra issuer profiles merged over the bundled ones.
    pub issuer_profiles: Option<PathBuf>,
    pub generic_fallback: bool,
    pub ec_level: u8,
    pub iin_pool: Vec<String>,
    pub augment: AugmentSettings,
    /// Template manifest; the bundled templates when absent.
    pub templates: Option<PathBuf>,
    pub output: PathBuf,
    pub train_fraction: f64,
    pub parallelism: usize,
    pub llm: LlmSettings,
    pub audit: AuditSettings,
    pub verify: VerifySettings,
    /// Share of failed samples above which `build` fails.
    pub max_failure_rate: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            seed: 1,
            count: 1000,
            mix: default_mix(),
            issuers: default_issuers(),
            backend: Backend::Template,
            issuer_profiles: None,
            generic_fallback: false,
            ec_level: 5,
            iin_pool: default_iins(),
            augment: AugmentSettings::default(),
            templates: None,
            output: PathBuf::from("out"),
            train_fraction: 0.8,
            parallelism: 1,
            llm: LlmSettings::default(),
            audit: AuditSettings::default(),
            verify: VerifySettings::default(),
            max_failure_rate: 0.01,
        }
    }
}

fn resolve(base: &Path, p: &mut PathBuf) {
    if p.is_relative() {
        *p = base.join(&*p);
    }
}

impl PipelineConfig {
    pub fn load(path: &Path) -> Result<PipelineConfig, ConfigError> {
        let read_err = |message: String| ConfigError::Read { path: path.to_path_buf(), message };
        let text = std::fs::read_to_string(path).map_err(|e| read_err(e.to_string()))?;
        let mut c: PipelineConfig =
            serde_json::from_str(&text).map_err(|e| ConfigError::Invalid(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        resolve(base, &mut c.output);
        for p in [&mut c.issuer_profiles, &mut c.templates, &mut c.augment.policy, &mut c.llm.fixtures].into_iter().flatten() {
            resolve(base, p);
        }
        for p in [&mut c.audit.corpus_a, &mut c.audit.corpus_b].into_iter().flatten() {
            resolve(base, p);
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = |m: String| Err(ConfigError::Invalid(m));
        if self.count == 0 {
            return bad("count must be at least 1".into());
        }
        let sum: f64 = self.mix.values().sum();
        if (sum - 1.0).abs() > 1e-9 || self.mix.values().any(|p| !(0.0..=1.0).contains(p)) {
            return bad(format!("mix proportions must lie in [0, 1] and sum to 1, got {sum}"));
        }
        for (kind, p) in &self.mix {
            if *p > 0.0 && self.issuers.get(kind).is_none_or(Vec::is_empty) {
                return bad(format!("no issuers listed for {kind}"));
            }
        }
        for (kind, list) in &self.issuers {
            if let Some(r) = list.iter().find(|r| r.issuer.trim().is_empty() || r.country.trim().is_empty()) {
                return bad(format!("{kind}: empty issuer or country in {r:?}"));
            }
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return bad(format!("train_fraction {} outside (0, 1)", self.train_fraction));
        }
        if self.ec_level > 8 {
            return bad(format!("ec_level {} outside 0..=8", self.ec_level));
        }
        if self.parallelism == 0 || self.llm.parallelism == 0 {
            return bad("parallelism must be at least 1".into());
        }
        if !(0.0..=1.0).contains(&self.augment.fraction) {
            return bad("augment.fraction outside [0, 1]".into());
        }
        if self.iin_pool.is_empty() || self.iin_pool.iter().any(|i| i.len() != 6 || !i.bytes().all(|b| b.is_ascii_digit())) {
            return bad("iin_pool needs six-digit entries".into());
        }
        if !(0.0..=2.0).contains(&self.llm.temperature) {
            return bad("llm.temperature outside [0, 2]".into());
        }
        Ok(())
    }

    /// Records per kind: largest-remainder rounding of `count * mix`, so the
    /// total is exactly `count`. Kinds come out in canonical order.
    pub fn kind_counts(&self) -> Vec<(DocumentKind, usize)> {
        let shares: Vec<(DocumentKind, f64)> =
            DocumentKind::ALL.into_iter().map(|k| (k, self.mix.get(&k).copied().unwrap_or(0.0))).collect();
        let mut counts: Vec<usize> = shares.iter().map(|(_, p)| (p * self.count as f64).floor() as usize).collect();
        let left = self.count - counts.iter().sum::<usize>().min(self.count);
        let mut order: Vec<usize> = (0..shares.len()).filter(|&i| shares[i].1 > 0.0).collect();
        order.sort_by(|&a, &b| {
            let ra = shares[a].1 * self.count as f64 - counts[a] as f64;
            let rb = shares[b].1 * self.count as f64 - counts[b] as f64;
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        // Each floor loses less than one record, so one pass suffices.
        for &i in order.iter().take(left) {
            counts[i] += 1;
        }
        shares.iter().zip(counts).filter(|(_, n)| *n > 0).map(|((k, _), n)| (*k, n)).collect()
    }

    /// Records per issuer for each kind; the first issuers take the
    /// remainder.
    pub fn generation_plan(&self) -> Vec<(DocumentKind, Vec<(IssuerRef, usize)>)> {
        self.kind_counts()
            .into_iter()
            .map(|(kind, n)| {
                let list = &self.issuers[&kind];
                let (base, extra) = (n / list.len(), n % list.len());
                let per: Vec<(IssuerRef, usize)> = list
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r.clone(), base + usize::from(i < extra)))
                    .filter(|(_, c)| *c > 0)
                    .collect();
                (kind, per)
            })
            .collect()
    }

    pub fn corpus_dir(&self) -> PathBuf {
        self.output.join("corpus")
    }

    pub fn dataset_dir(&self) -> PathBuf {
        self.output.join("dataset")
    }

    pub fn audit_dir(&self) -> PathBuf {
        self.output.join("audit")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_sum_exactly() {
        let mut c = PipelineConfig { count: 1000, ..Default::default() };
        assert_eq!(c.kind_counts().iter().map(|x| x.1).collect::<Vec<_>>(), [334, 333, 333]);
        c.mix = [(DocumentKind::DriverLicense, 0.5), (DocumentKind::InsuranceCard, 0.5)].into();
        c.count = 7;
        assert_eq!(c.kind_counts(), [(DocumentKind::DriverLicense, 4), (DocumentKind::InsuranceCard, 3)]);
    }

    #[test]
    fn plan_spreads_over_issuers() {
        let c = PipelineConfig { count: 30, ..Default::default() };
        for (kind, per) in c.generation_plan() {
            let n: usize = per.iter().map(|p| p.1).sum();
            assert_eq!(n, 10, "{kind}");
        }
    }

    #[test]
    fn validation() {
        let mut c = PipelineConfig::default();
        assert!(c.validate().is_ok());
        c.train_fraction = 1.0;
        assert!(c.validate().is_err());
        let mut c = PipelineConfig::default();
        c.mix.insert(DocumentKind::DriverLicense, 0.9);
        assert!(c.validate().is_err());
    }
}
