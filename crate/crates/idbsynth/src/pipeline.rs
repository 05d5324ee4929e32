//! The four pipeline stages behind the command line.
//!
//! Seeds: sample `i` of a build uses `s_i = mix(stage(seed, "sample"), i)`;
//! its template and IIN come from `stage(s_i, "template")`, the augment
//! decision from `stage(s_i, "augment")` and the op draws from
//! `mix(stage(s_i, "augment-ops"), attempt)`. The split uses
//! `stage(seed, "split")`. Template records for issuer `j` of a kind use
//! `mix(stage(seed, kind), j)`.

use std::collections::BTreeMap;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use idbsynth_core::aamva::{parse_aamva, serialize_aamva, AamvaError, AamvaProfile};
use idbsynth_core::code128;
use idbsynth_core::diversity::{compare_corpora, DiversityError, DiversityReport};
use idbsynth_core::pdf417::EcLevel;
use idbsynth_core::record::{
    dedup_records, parse_llm_response_with, validate_record, DocumentKind, IdentityRecord, IssuerProfiles, RecordError,
    RecordSchema, Source, TemplateGenerator,
};
use idbsynth_core::seed;
use image::codecs::png::{CompressionType, FilterType, PngEncoder};
use image::{ExtendedColorType, ImageEncoder, RgbImage};
use log::{info, warn};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::augment::{apply_trace, sample_trace, AugmentError, AugmentPolicy, AugmentTrace};
use crate::compositor::{code128_grid, fit_pdf417, overlay, split_dataset, Annotation, CompositeError, Symbology};
use crate::config::{ConfigError, LlmMode, PipelineConfig, VerifySettings};
use crate::dataset::{
    image_rel, label_rel, read_manifest, record_hash, sha256_hex, write_manifest, BuildSummary, KindSummary, ManifestError,
    Pdf417Params, SampleFailure, SampleMeta, SplitName, MANIFEST, SUMMARY,
};
use crate::extract::{read_code128, read_pdf417};
use crate::formats::{corpus_path, Corpus, FormatError};
use crate::llm::{batch_generate, BatchSettings, HttpEndpoint, LlmClient, LlmError, PromptTemplate};
use crate::template::TemplateSet;

/// AAMVA version and jurisdiction version written into every header.
pub const AAMVA_VERSIONS: (&str, &str) = ("10", "00");

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Llm(#[from] LlmError),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error(transparent)]
    Manifest(#[from] ManifestError),
    #[error("{failed} of {total} samples failed, above the {limit} limit")]
    TooManyFailures { failed: usize, total: usize, limit: f64 },
    #[error("verification below threshold: {0}")]
    BelowThreshold(String),
}

impl PipelineError {
    /// 1 quality gate, 2 configuration, 3 LLM, 4 input/output.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::TooManyFailures { .. } | PipelineError::BelowThreshold(_) => 1,
            PipelineError::Config(_) | PipelineError::Invalid(_) => 2,
            PipelineError::Llm(_) => 3,
            PipelineError::Io { .. } | PipelineError::Format(_) | PipelineError::Manifest(_) => 4,
        }
    }
}

impl From<CompositeError> for PipelineError {
    fn from(e: CompositeError) -> Self {
        PipelineError::Invalid(e.to_string())
    }
}

impl From<AugmentError> for PipelineError {
    fn from(e: AugmentError) -> Self {
        PipelineError::Invalid(e.to_string())
    }
}

impl From<RecordError> for PipelineError {
    fn from(e: RecordError) -> Self {
        PipelineError::Invalid(e.to_string())
    }
}

fn io(path: &Path) -> impl Fn(std::io::Error) -> PipelineError + '_ {
    move |e| PipelineError::Io { path: path.to_path_buf(), message: e.to_string() }
}

/// Prints `{"stage":..,"done":..,"total":..}` every 100 items and at the end.
struct Progress {
    stage: &'static str,
    total: usize,
    done: AtomicUsize,
}

impl Progress {
    fn new(stage: &'static str, total: usize) -> Progress {
        Progress { stage, total, done: AtomicUsize::new(0) }
    }

    fn tick(&self) {
        let n = self.done.fetch_add(1, Ordering::Relaxed) + 1;
        if n.is_multiple_of(100) || n == self.total {
            println!("{{\"stage\":\"{}\",\"done\":{n},\"total\":{}}}", self.stage, self.total);
        }
    }
}

/// Runs `f` over `0..n` on `workers` threads; results keep index order.
fn parallel_map<T: Send>(n: usize, workers: usize, f: impl Fn(usize) -> T + Sync) -> Vec<T> {
    let slots: Vec<Mutex<Option<T>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..workers.clamp(1, n.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    return;
                }
                let out = f(i);
                *slots[i].lock().expect("slot lock") = Some(out);
            });
        }
    });
    slots.into_iter().map(|m| m.into_inner().expect("slot lock").expect("every index ran")).collect()
}

fn identifier_field(kind: DocumentKind) -> &'static str {
    match kind {
        DocumentKind::DriverLicense => "license_number",
        DocumentKind::InsuranceCard => "policy_number",
        DocumentKind::UniversityId => "student_id",
    }
}

fn profiles(cfg: &PipelineConfig) -> Result<IssuerProfiles, PipelineError> {
    let mut p = IssuerProfiles::bundled();
    if let Some(path) = &cfg.issuer_profiles {
        let text = fs::read_to_string(path).map_err(io(path))?;
        p.merge(IssuerProfiles::from_json(&text)?);
    }
    Ok(p)
}

fn llm_client(cfg: &PipelineConfig) -> Result<LlmClient, PipelineError> {
    let fixtures = cfg.llm.fixtures.as_deref();
    let need_fixtures = || fixtures.ok_or(LlmError::NotConfigured("llm.fixtures"));
    let client = match cfg.llm.mode {
        LlmMode::Replay => LlmClient::replay(need_fixtures()?)?,
        LlmMode::Live => LlmClient::http(HttpEndpoint::from_env()?),
        LlmMode::Record => LlmClient::recording(HttpEndpoint::from_env()?, need_fixtures()?)?,
        LlmMode::Auto => match fixtures {
            Some(dir) if dir.join("index.json").is_file() => LlmClient::replay(dir)?,
            _ => LlmClient::http(HttpEndpoint::from_env()?),
        },
    };
    Ok(client)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub kind: DocumentKind,
    pub source: Source,
    pub path: PathBuf,
    pub records: usize,
    /// Responses that failed parsing or validation.
    pub rejected: usize,
    /// Records dropped as duplicates of an earlier identifier.
    pub duplicates: usize,
}

fn finish_corpus(
    cfg: &PipelineConfig,
    kind: DocumentKind,
    source: Source,
    records: Vec<IdentityRecord>,
    rejected: usize,
) -> Result<CorpusStats, PipelineError> {
    let before = records.len();
    let records = dedup_records(&records, &[identifier_field(kind)])?;
    let path = corpus_path(&cfg.corpus_dir(), kind, source);
    let stats = CorpusStats { kind, source, path: path.clone(), records: records.len(), rejected, duplicates: before - records.len() };
    Corpus { kind, source, records }.write(&path)?;
    info!(
        "{kind} {}: {} records, {} rejected, {} duplicates -> {}",
        source.as_str(),
        stats.records,
        rejected,
        stats.duplicates,
        path.display()
    );
    Ok(stats)
}

/// Writes `{out}/corpus/{kind}.{source}.txt` for every planned kind and
/// configured source.
pub fn cmd_generate(cfg: &PipelineConfig) -> Result<Vec<CorpusStats>, PipelineError> {
    let plan = cfg.generation_plan();
    let total: usize = plan.iter().flat_map(|(_, per)| per.iter().map(|p| p.1)).sum::<usize>() * cfg.backend.sources().len();
    let progress = Progress::new("generate", total);
    let mut stats = Vec::new();
    for &source in cfg.backend.sources() {
        let client = if source == "llm" { Some(llm_client(cfg)?) } else { None };
        let generator = TemplateGenerator::new(profiles(cfg)?).with_generic_fallback(cfg.generic_fallback);
        for (kind, per) in &plan {
            let schema = RecordSchema::for_kind(*kind);
            let mut records = Vec::new();
            let mut rejected = 0;
            for (j, (issuer, n)) in per.iter().enumerate() {
                match &client {
                    None => {
                        let s = seed::mix(seed::stage(cfg.seed, kind.as_str()), j as u64);
                        records.extend(generator.generate(&schema, &issuer.issuer, &issuer.country, *n, s)?);
                        for _ in 0..*n {
                            progress.tick();
                        }
                    }
                    Some(client) => {
                        let settings = BatchSettings {
                            model_name: cfg.llm.model.clone().unwrap_or_else(|| BatchSettings::default().model_name),
                            temperature: cfg.llm.temperature,
                            max_tokens: cfg.llm.max_tokens,
                            parallelism: cfg.llm.parallelism,
                        };
                        let pair = [(issuer.issuer.clone(), issuer.country.clone())];
                        let texts = batch_generate(client, &PromptTemplate::builtin(*kind), &pair, *n, &settings)?;
                        for (k, text) in texts.iter().enumerate() {
                            progress.tick();
                            match parse_llm_response_with(text, &schema, Some(&issuer.issuer), Some(&issuer.country)) {
                                Ok(r) if validate_record(&r).ok => records.push(r),
                                Ok(r) => {
                                    rejected += 1;
                                    warn!("{kind} {} #{k}: rejected: {:?}", issuer.issuer, validate_record(&r).violations);
                                }
                                Err(e) => {
                                    rejected += 1;
                                    warn!("{kind} {} #{k}: unparseable response: {e}", issuer.issuer);
                                }
                            }
                        }
                    }
                }
            }
            let source = if client.is_some() { Source::Llm } else { Source::Template };
            stats.push(finish_corpus(cfg, *kind, source, records, rejected)?);
        }
    }
    Ok(stats)
}

fn payload_for(record: &IdentityRecord, iin: &str) -> Result<Vec<u8>, String> {
    match record.kind {
        DocumentKind::DriverLicense => serialize_aamva(record, &AamvaProfile::default(), iin, AAMVA_VERSIONS).map_err(|e| e.to_string()),
        DocumentKind::UniversityId => Ok(record.to_line().into_bytes()),
        DocumentKind::InsuranceCard => {
            record.get("policy_number").map(|p| p.as_bytes().to_vec()).ok_or_else(|| "record has no policy_number".to_string())
        }
    }
}

struct BuildContext<'a> {
    cfg: &'a PipelineConfig,
    templates: &'a TemplateSet,
    policy: &'a AugmentPolicy,
    ec_level: EcLevel,
    staging: &'a Path,
}

const MAX_REDRAWS: u64 = 3;

fn render_sample(ctx: &BuildContext, index: usize, record: &IdentityRecord) -> Result<SampleMeta, String> {
    let s_i = seed::mix(seed::stage(ctx.cfg.seed, "sample"), index as u64);
    let id = format!("{index:06}");
    let mut pick = seed::rng(seed::stage(s_i, "template"));
    let candidates = ctx.templates.for_kind(record.kind);
    let template = candidates[pick.random_range(0..candidates.len())];
    let iin = ctx.cfg.iin_pool[pick.random_range(0..ctx.cfg.iin_pool.len())].clone();
    let payload = payload_for(record, &iin)?;
    let symbology = template.spec.symbology;
    let quiet = symbology.quiet_zone();
    let (grid, pdf) = match symbology {
        Symbology::Pdf417 => {
            let (sym, _) = fit_pdf417(&payload, ctx.ec_level, template.spec.placement, quiet).map_err(|e| e.to_string())?;
            let params = Pdf417Params { ec_level: ctx.ec_level.level(), columns: sym.columns, rows: sym.rows };
            (sym.matrix, Some(params))
        }
        Symbology::Code128 => {
            let text = std::str::from_utf8(&payload).map_err(|e| e.to_string())?;
            let sym = code128::encode_c128(text).map_err(|e| e.to_string())?;
            (code128_grid(&sym.runs), None)
        }
    };
    let placed = overlay(template, &grid, quiet).map_err(|e| e.to_string())?;
    let (w, h) = placed.image.dimensions();
    let mut image = placed.image.clone();
    let mut bbox = placed.bbox;
    let mut trace = AugmentTrace::default();
    if seed::rng(seed::stage(s_i, "augment")).random_bool(ctx.cfg.augment.fraction) {
        let ops_seed = seed::stage(s_i, "augment-ops");
        for attempt in 0..=MAX_REDRAWS {
            let t = sample_trace(ctx.policy, w, h, seed::mix(ops_seed, attempt));
            match apply_trace(&placed.image, &placed.bbox, &t) {
                // The whole symbol must stay in frame, one pixel clear of the edge.
                Ok(out) => {
                    let (fw, fh) = (w as f64 - 1.0, h as f64 - 1.0);
                    let corners = placed.bbox.corners().map(|(x, y)| out.homography.apply(x, y));
                    if corners.iter().all(|&(x, y)| x >= 1.0 && y >= 1.0 && x <= fw && y <= fh) {
                        image = out.image;
                        bbox = out.bbox;
                        trace = t;
                        break;
                    }
                }
                Err(AugmentError::DegenerateBox { .. }) => {}
                Err(e) => return Err(e.to_string()),
            }
        }
    }
    let annotation = Annotation { class_id: symbology.class_id(), bbox: bbox.normalized(w, h) };
    write_png(&ctx.staging.join(format!("{id}.png")), &image).map_err(|e| e.to_string())?;
    Ok(SampleMeta {
        id: id.clone(),
        split: SplitName::Train,
        image: String::new(),
        label: String::new(),
        kind: record.kind,
        source: record.source,
        issuer: record.issuer.clone(),
        template_id: template.spec.template_id.clone(),
        symbology,
        class_id: symbology.class_id(),
        record_hash: record_hash(record),
        payload_sha256: sha256_hex(&payload),
        payload_len: payload.len(),
        iin: (record.kind == DocumentKind::DriverLicense).then_some(iin),
        pdf417: pdf,
        scale: placed.scale,
        origin: [placed.origin.0, placed.origin.1],
        modules: [placed.modules.0, placed.modules.1],
        quiet_zone: quiet,
        bbox: annotation.bbox,
        augmented: !trace.is_empty(),
        trace,
        seed: s_i,
    })
}

pub fn write_png(path: &Path, image: &RgbImage) -> Result<(), PipelineError> {
    let file = fs::File::create(path).map_err(io(path))?;
    PngEncoder::new_with_quality(BufWriter::new(file), CompressionType::Fast, FilterType::Sub)
        .write_image(image.as_raw(), image.width(), image.height(), ExtendedColorType::Rgb8)
        .map_err(|e| PipelineError::Io { path: path.to_path_buf(), message: e.to_string() })
}

fn clear_dataset(dir: &Path) -> Result<(), PipelineError> {
    for sub in ["images", "labels", ".staging"] {
        let p = dir.join(sub);
        if p.exists() {
            fs::remove_dir_all(&p).map_err(io(&p))?;
        }
    }
    for f in [MANIFEST, SUMMARY] {
        let p = dir.join(f);
        if p.exists() {
            fs::remove_file(&p).map_err(io(&p))?;
        }
    }
    Ok(())
}

/// Reads every planned corpus for the configured sources, in source then
/// kind order.
pub fn load_corpora(cfg: &PipelineConfig) -> Result<Vec<IdentityRecord>, PipelineError> {
    let mut records = Vec::new();
    for &source in cfg.backend.sources() {
        let source = if source == "llm" { Source::Llm } else { Source::Template };
        for (kind, _) in cfg.kind_counts() {
            let corpus = Corpus::read(&corpus_path(&cfg.corpus_dir(), kind, source))?;
            if corpus.kind != kind {
                return Err(PipelineError::Invalid(format!("corpus for {kind} declares kind {}", corpus.kind)));
            }
            records.extend(corpus.records);
        }
    }
    Ok(records)
}

/// Encodes, composites, augments and splits every corpus record.
pub fn cmd_build(cfg: &PipelineConfig) -> Result<BuildSummary, PipelineError> {
    let templates = match &cfg.templates {
        Some(p) => TemplateSet::load(p)?,
        None => TemplateSet::bundled(),
    };
    let policy = match &cfg.augment.policy {
        Some(p) => AugmentPolicy::load(p)?,
        None => AugmentPolicy::default(),
    };
    policy.validate()?;
    let ec_level = EcLevel::new(cfg.ec_level).ok_or_else(|| PipelineError::Invalid(format!("ec_level {}", cfg.ec_level)))?;
    for (kind, _) in cfg.kind_counts() {
        if templates.for_kind(kind).is_empty() {
            return Err(PipelineError::Invalid(format!("no template for {kind}")));
        }
    }
    let records = load_corpora(cfg)?;
    if records.is_empty() {
        return Err(PipelineError::Invalid("corpora hold no records".into()));
    }
    let dir = cfg.dataset_dir();
    clear_dataset(&dir)?;
    let staging = dir.join(".staging");
    fs::create_dir_all(&staging).map_err(io(&staging))?;
    let ctx = BuildContext { cfg, templates: &templates, policy: &policy, ec_level, staging: &staging };
    let progress = Progress::new("build", records.len());
    let results = parallel_map(records.len(), cfg.parallelism, |i| {
        let r = render_sample(&ctx, i, &records[i]);
        progress.tick();
        r
    });

    let mut metas = Vec::new();
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(m) => metas.push(m),
            Err(error) => {
                let id = format!("{i:06}");
                warn!("sample {id} ({}) failed: {error}", records[i].kind);
                failures.push(SampleFailure { id, kind: records[i].kind, error });
            }
        }
    }
    let kinds: Vec<DocumentKind> = metas.iter().map(|m| m.kind).collect();
    let split = split_dataset(&kinds, cfg.train_fraction, seed::stage(cfg.seed, "split"));
    for &i in &split.val {
        metas[i].split = SplitName::Val;
    }
    for split in [SplitName::Train, SplitName::Val] {
        for sub in ["images", "labels"] {
            let p = dir.join(sub).join(split.as_str());
            fs::create_dir_all(&p).map_err(io(&p))?;
        }
    }
    let mut per_kind: BTreeMap<DocumentKind, KindSummary> = BTreeMap::new();
    for m in &mut metas {
        m.image = image_rel(m.split, &m.id);
        m.label = label_rel(m.split, &m.id);
        let from = staging.join(format!("{}.png", m.id));
        let to = dir.join(&m.image);
        fs::rename(&from, &to).map_err(io(&to))?;
        let label = dir.join(&m.label);
        let line = Annotation { class_id: m.class_id, bbox: m.bbox }.to_line();
        fs::write(&label, line + "\n").map_err(io(&label))?;
        let k = per_kind.entry(m.kind).or_default();
        match m.split {
            SplitName::Train => k.train += 1,
            SplitName::Val => k.val += 1,
        }
        k.augmented += usize::from(m.augmented);
    }
    fs::remove_dir_all(&staging).map_err(io(&staging))?;
    write_manifest(&dir.join(MANIFEST), &metas)?;
    let summary = BuildSummary {
        seed: cfg.seed,
        requested: records.len(),
        written: metas.len(),
        train_fraction: cfg.train_fraction,
        per_kind,
        failures,
    };
    let path = dir.join(SUMMARY);
    fs::write(&path, serde_json::to_string_pretty(&summary).expect("summary serializes") + "\n").map_err(io(&path))?;
    info!("build: {} of {} samples written to {}", summary.written, summary.requested, dir.display());
    let failed = summary.failures.len();
    if failed as f64 > cfg.max_failure_rate * summary.requested as f64 {
        return Err(PipelineError::TooManyFailures { failed, total: summary.requested, limit: cfg.max_failure_rate });
    }
    Ok(summary)
}

/// Fields audited when the config names none.
pub fn default_audit_fields(kind: DocumentKind) -> &'static [&'static str] {
    match kind {
        DocumentKind::DriverLicense => &["full_name", "full_address", "license_number", "date_of_birth"],
        DocumentKind::InsuranceCard => &["member_name", "policy_number", "provider", "plan_type"],
        DocumentKind::UniversityId => &["student_name", "student_id", "department", "university"],
    }
}

fn corpus_id(path: &Path) -> String {
    path.file_name().and_then(|n| n.to_str()).map(|n| n.trim_end_matches(".txt").to_string()).unwrap_or_default()
}

/// Compares two corpora and writes `report.json` and `report.txt` under
/// `{out}/audit`.
pub fn cmd_audit(
    cfg: &PipelineConfig,
    corpus_a: Option<&Path>,
    corpus_b: Option<&Path>,
    fields: Option<&[String]>,
) -> Result<DiversityReport, PipelineError> {
    let dir = cfg.corpus_dir();
    let a_path = corpus_a
        .map(Path::to_path_buf)
        .or_else(|| cfg.audit.corpus_a.clone())
        .unwrap_or_else(|| corpus_path(&dir, DocumentKind::DriverLicense, Source::Llm));
    let b_path = corpus_b
        .map(Path::to_path_buf)
        .or_else(|| cfg.audit.corpus_b.clone())
        .unwrap_or_else(|| corpus_path(&dir, DocumentKind::DriverLicense, Source::Template));
    let a = Corpus::read(&a_path)?;
    let b = Corpus::read(&b_path)?;
    let fields: Vec<String> = match fields {
        Some(f) if !f.is_empty() => f.to_vec(),
        _ if !cfg.audit.fields.is_empty() => cfg.audit.fields.clone(),
        _ => default_audit_fields(a.kind).iter().map(|s| s.to_string()).collect(),
    };
    let names: Vec<&str> = fields.iter().map(String::as_str).collect();
    let (ida, idb) = (corpus_id(&a_path), corpus_id(&b_path));
    let report = compare_corpora((&ida, &a.records), (&idb, &b.records), &names).map_err(|e| match e {
        DiversityError::MissingField { field, corpus } => PipelineError::Invalid(format!("unknown field {field:?} for corpus {corpus}")),
        DiversityError::EmptyCorpus => PipelineError::Io { path: a_path.clone(), message: "empty corpus".into() },
        other => PipelineError::Invalid(other.to_string()),
    })?;
    let out = cfg.audit_dir();
    fs::create_dir_all(&out).map_err(io(&out))?;
    let json = out.join("report.json");
    fs::write(&json, report.to_json() + "\n").map_err(io(&json))?;
    let txt = out.join("report.txt");
    fs::write(&txt, report.to_text()).map_err(io(&txt))?;
    info!("audit: {} vs {} over {} fields -> {}", ida, idb, names.len(), out.display());
    Ok(report)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rate {
    pub samples: usize,
    pub passed: usize,
    /// 1.0 when there are no samples.
    pub rate: f64,
}

impl Rate {
    fn new(samples: usize, passed: usize) -> Rate {
        Rate { samples, passed, rate: if samples == 0 { 1.0 } else { passed as f64 / samples as f64 } }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyFailure {
    pub id: String,
    pub augmented: bool,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub dataset: PathBuf,
    pub total: usize,
    pub clean: Rate,
    pub augmented: Rate,
    pub bbox_valid: Rate,
    pub failures: Vec<VerifyFailure>,
}

/// Outcome of checking one sample.
#[derive(Clone, Debug, PartialEq)]
pub struct SampleCheck {
    pub decoded: Result<(), String>,
    /// The label file parses, is strictly inside the image and matches the
    /// manifest box.
    pub label_ok: bool,
}

fn decode_sample(dataset: &Path, meta: &SampleMeta) -> Result<(), String> {
    let path = dataset.join(&meta.image);
    let image = image::open(&path).map_err(|e| format!("{}: {e}", path.display()))?.to_rgb8();
    let map = meta.trace.homography(image.width(), image.height());
    let grid = meta.module_grid();
    let payload = match meta.symbology {
        Symbology::Pdf417 => read_pdf417(&image, &grid, &map).map_err(|e| e.to_string())?,
        Symbology::Code128 => read_code128(&image, &grid, &map).map_err(|e| e.to_string())?.into_bytes(),
    };
    if sha256_hex(&payload) != meta.payload_sha256 {
        return Err("decoded payload differs from the manifest".into());
    }
    // The record hash is recoverable except for insurance cards, whose
    // symbol carries the policy number only.
    let rebuilt = match meta.kind {
        DocumentKind::DriverLicense => {
            Some(record_hash(&parse_aamva(&payload, &AamvaProfile::default()).map_err(|e: AamvaError| e.to_string())?))
        }
        DocumentKind::UniversityId => Some(sha256_hex(&payload)),
        DocumentKind::InsuranceCard => None,
    };
    if rebuilt.is_some_and(|h| h != meta.record_hash) {
        return Err("decoded record differs from the manifest".into());
    }
    Ok(())
}

fn label_matches(dataset: &Path, meta: &SampleMeta) -> bool {
    fs::read_to_string(dataset.join(&meta.label))
        .ok()
        .and_then(|t| Annotation::parse(t.trim()).ok())
        .is_some_and(|a| {
            let (b, m) = (a.bbox, meta.bbox);
            a.class_id == meta.class_id
                && b.is_valid()
                && [(b.cx, m.cx), (b.cy, m.cy), (b.w, m.w), (b.h, m.h)].iter().all(|(x, y)| (x - y).abs() <= 1e-6)
        })
}

/// Decodes one sample's barcode and checks it and its label against the
/// manifest.
pub fn verify_sample(dataset: &Path, meta: &SampleMeta) -> SampleCheck {
    SampleCheck { decoded: decode_sample(dataset, meta), label_ok: label_matches(dataset, meta) }
}

/// Re-reads every barcode in the dataset and writes
/// `{out}/verify/report.json`. Thresholds are applied by [`VerifyReport::check`].
pub fn cmd_verify(cfg: &PipelineConfig, dataset: Option<&Path>) -> Result<VerifyReport, PipelineError> {
    let dir = dataset.map(Path::to_path_buf).unwrap_or_else(|| cfg.dataset_dir());
    let manifest = dir.join(MANIFEST);
    if !manifest.is_file() {
        return Err(PipelineError::Io { path: manifest, message: "no manifest; build the dataset first".into() });
    }
    let metas = read_manifest(&manifest)?;
    if metas.is_empty() {
        return Err(PipelineError::Io { path: manifest, message: "manifest is empty".into() });
    }
    let progress = Progress::new("verify", metas.len());
    let results = parallel_map(metas.len(), cfg.parallelism, |i| {
        let r = verify_sample(&dir, &metas[i]);
        progress.tick();
        r
    });
    let (mut clean, mut clean_ok, mut aug, mut aug_ok, mut boxes_ok) = (0, 0, 0, 0, 0);
    let mut failures = Vec::new();
    for (m, r) in metas.iter().zip(results) {
        if m.augmented {
            aug += 1;
        } else {
            clean += 1;
        }
        match r.decoded {
            Ok(()) if m.augmented => aug_ok += 1,
            Ok(()) => clean_ok += 1,
            Err(reason) => failures.push(VerifyFailure { id: m.id.clone(), augmented: m.augmented, reason }),
        }
        if r.label_ok {
            boxes_ok += 1;
        } else {
            failures.push(VerifyFailure { id: m.id.clone(), augmented: m.augmented, reason: "invalid label".into() });
        }
    }
    let report = VerifyReport {
        dataset: dir.clone(),
        total: metas.len(),
        clean: Rate::new(clean, clean_ok),
        augmented: Rate::new(aug, aug_ok),
        bbox_valid: Rate::new(metas.len(), boxes_ok),
        failures,
    };
    let out = cfg.output.join("verify");
    fs::create_dir_all(&out).map_err(io(&out))?;
    let path = out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report).expect("report serializes") + "\n").map_err(io(&path))?;
    info!(
        "verify: clean {}/{} ({:.4}), augmented {}/{} ({:.4}), labels {}/{}",
        clean_ok, clean, report.clean.rate, aug_ok, aug, report.augmented.rate, boxes_ok, report.total
    );
    for f in &report.failures {
        warn!("verify: {} failed: {}", f.id, f.reason);
    }
    Ok(report)
}

impl VerifyReport {
    /// Fails when either decode rate is under its configured minimum.
    pub fn check(&self, v: &VerifySettings) -> Result<(), PipelineError> {
        if self.clean.rate < v.min_clean_rate || self.augmented.rate < v.min_augmented_rate {
            return Err(PipelineError::BelowThreshold(format!(
                "clean {:.4} (min {}), augmented {:.4} (min {})",
                self.clean.rate, v.min_clean_rate, self.augmented.rate, v.min_augmented_rate
            )));
        }
        Ok(())
    }
}
