//! Chat-completion client with retries and record/replay fixtures.
//!
//! Requests go to `{LLM_BASE_URL}/v1/chat/completions` with a bearer token
//! from `LLM_API_KEY`. In replay mode responses come from a fixture
//! directory: `index.json` maps a request key to a fixture id, and the
//! response text lives in `{id}.txt`. The request key is the SHA-256 of
//! the sample seed and the rendered prompt, so fixtures survive a change of
//! model name.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use idbsynth_core::record::DocumentKind;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const DEFAULT_TEMPERATURE: f64 = 0.9;
pub const DEFAULT_MAX_TOKENS: u32 = 400;
const PARSER_PHRASE: &str = "separated by |";

#[derive(Debug, thiserror::Error)]
pub enum LlmError {
    #[error("template must contain {0} exactly once")]
    MissingPlaceholder(&'static str),
    #[error("template does not ask for fields {PARSER_PHRASE:?}")]
    MissingSeparatorPhrase,
    #[error("invalid request: {0}")]
    InvalidRequest(String),
    #[error("endpoint not configured: set {0}")]
    NotConfigured(&'static str),
    #[error("endpoint {url} unreachable after {attempts} attempts: {message}")]
    EndpointUnreachable { url: String, attempts: u32, message: String },
    #[error("still rate limited after {attempts} attempts")]
    RateLimitedExhausted { attempts: u32 },
    #[error("endpoint answered HTTP {status}: {body}")]
    HttpStatus { status: u16, body: String },
    #[error("malformed API response: {0}")]
    MalformedApiResponse(String),
    #[error("no fixture for request key {key}")]
    FixtureMissing { key: String },
    #[error("fixture store {path}: {message}")]
    Fixture { path: PathBuf, message: String },
    #[error("issuer {issuer:?}: {source}")]
    Issuer {
        issuer: String,
        #[source]
        source: Box<LlmError>,
    },
}

/// A prompt with `{issuer}` and `{country}` placeholders.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptTemplate {
    pub kind: DocumentKind,
    pub template_text: String,
}

fn placeholder_at(text: &str, name: &'static str) -> Result<usize, LlmError> {
    let mut hits = text.match_indices(name);
    match (hits.next(), hits.next()) {
        (Some((at, _)), None) => Ok(at),
        _ => Err(LlmError::MissingPlaceholder(name)),
    }
}

impl PromptTemplate {
    pub fn new(kind: DocumentKind, template_text: impl Into<String>) -> Result<PromptTemplate, LlmError> {
        let t = PromptTemplate { kind, template_text: template_text.into() };
        placeholder_at(&t.template_text, "{issuer}")?;
        placeholder_at(&t.template_text, "{country}")?;
        if !t.template_text.contains(PARSER_PHRASE) {
            return Err(LlmError::MissingSeparatorPhrase);
        }
        Ok(t)
    }

    pub fn builtin(kind: DocumentKind) -> PromptTemplate {
        let text = match kind {
            DocumentKind::DriverLicense => include_str!("../assets/prompts/driver_license.txt"),
            DocumentKind::InsuranceCard => include_str!("../assets/prompts/insurance_card.txt"),
            DocumentKind::UniversityId => include_str!("../assets/prompts/university_id.txt"),
        };
        PromptTemplate::new(kind, text.trim_end()).expect("bundled prompt")
    }
}

/// Substitutes both placeholders in one pass; the rest of the template is
/// copied unchanged.
pub fn render_prompt(template: &PromptTemplate, issuer: &str, country: &str) -> Result<String, LlmError> {
    if issuer.trim().is_empty() || country.trim().is_empty() {
        return Err(LlmError::InvalidRequest("issuer and country must be non-empty".into()));
    }
    let text = &template.template_text;
    let i = placeholder_at(text, "{issuer}")?;
    let c = placeholder_at(text, "{country}")?;
    let mut spans = [(i, "{issuer}".len(), issuer), (c, "{country}".len(), country)];
    spans.sort_by_key(|s| s.0);
    let mut out = String::with_capacity(text.len() + issuer.len() + country.len());
    let mut pos = 0;
    for (at, len, value) in spans {
        out.push_str(&text[pos..at]);
        out.push_str(value);
        pos = at + len;
    }
    out.push_str(&text[pos..]);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct LlmRequest {
    pub model_name: String,
    pub prompt: String,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Sample seed sent to the endpoint and used for the fixture key.
    pub seed: Option<u64>,
}

impl LlmRequest {
    pub fn new(model_name: impl Into<String>, prompt: impl Into<String>) -> LlmRequest {
        LlmRequest {
            model_name: model_name.into(),
            prompt: prompt.into(),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            seed: None,
        }
    }

    fn check(&self) -> Result<(), LlmError> {
        if self.prompt.trim().is_empty() {
            return Err(LlmError::InvalidRequest("empty prompt".into()));
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(LlmError::InvalidRequest(format!("temperature {} outside [0, 2]", self.temperature)));
        }
        Ok(())
    }

    /// Hex SHA-256 of the seed and prompt.
    pub fn key(&self) -> String {
        let mut h = Sha256::new();
        match self.seed {
            Some(s) => h.update(s.to_string().as_bytes()),
            None => h.update(b"-"),
        }
        h.update(b"\n");
        h.update(self.prompt.as_bytes());
        hex::encode(h.finalize())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LlmResponse {
    pub text: String,
    pub latency_ms: u64,
    pub attempt: u32,
}

/// Exponential backoff: `base * factor^(n-1)` before retry `n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RetryPolicy {
    pub max_attempts: u32,
    pub base: Duration,
    pub factor: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { max_attempts: 5, base: Duration::from_millis(500), factor: 2.0 }
    }
}

impl RetryPolicy {
    pub fn delay(&self, retry: u32) -> Duration {
        self.base.mul_f64(self.factor.powi(retry.saturating_sub(1) as i32))
    }
}

pub type Sleeper = Arc<dyn Fn(Duration) + Send + Sync>;

/// Fixture directory contents.
#[derive(Debug, Default)]
pub struct FixtureStore {
    dir: PathBuf,
    index: BTreeMap<String, String>,
}

impl FixtureStore {
    pub fn open(dir: &Path) -> Result<FixtureStore, LlmError> {
        let path = dir.join("index.json");
        let err = |message: String| LlmError::Fixture { path: path.clone(), message };
        let text = fs::read_to_string(&path).map_err(|e| err(e.to_string()))?;
        let index: BTreeMap<String, String> = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(FixtureStore { dir: dir.to_path_buf(), index })
    }

    fn empty(dir: &Path) -> FixtureStore {
        FixtureStore { dir: dir.to_path_buf(), index: BTreeMap::new() }
    }

    pub fn len(&self) -> usize {
        self.index.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index.is_empty()
    }

    pub fn lookup(&self, key: &str) -> Result<String, LlmError> {
        let id = self.index.get(key).ok_or_else(|| LlmError::FixtureMissing { key: key.to_string() })?;
        let path = self.dir.join(format!("{id}.txt"));
        fs::read_to_string(&path).map_err(|e| LlmError::Fixture { path, message: e.to_string() })
    }

    fn insert(&mut self, key: String, text: &str) -> Result<(), LlmError> {
        let id = format!("rec_{}", &key[..16]);
        let wrap = |path: &Path, e: std::io::Error| LlmError::Fixture { path: path.to_path_buf(), message: e.to_string() };
        fs::create_dir_all(&self.dir).map_err(|e| wrap(&self.dir, e))?;
        let path = self.dir.join(format!("{id}.txt"));
        fs::write(&path, text).map_err(|e| wrap(&path, e))?;
        self.index.insert(key, id);
        let index = self.dir.join("index.json");
        let body = serde_json::to_string_pretty(&self.index).expect("index serializes") + "\n";
        fs::write(&index, body).map_err(|e| wrap(&index, e))
    }
}

#[derive(Clone, Debug)]
pub struct HttpEndpoint {
    pub base_url: String,
    pub api_key: Option<String>,
    pub timeout: Duration,
}

impl HttpEndpoint {
    pub fn new(base_url: impl Into<String>) -> HttpEndpoint {
        HttpEndpoint { base_url: base_url.into(), api_key: None, timeout: Duration::from_secs(120) }
    }

    /// From `LLM_BASE_URL` and, if set, `LLM_API_KEY`.
    pub fn from_env() -> Result<HttpEndpoint, LlmError> {
        let base = std::env::var("LLM_BASE_URL")
            .ok()
            .filter(|v| !v.trim().is_empty())
            .ok_or(LlmError::NotConfigured("LLM_BASE_URL"))?;
        let mut e = HttpEndpoint::new(base);
        e.api_key = std::env::var("LLM_API_KEY").ok().filter(|v| !v.is_empty());
        Ok(e)
    }

    fn url(&self) -> String {
        format!("{}/v1/chat/completions", self.base_url.trim_end_matches('/'))
    }
}

enum Backend {
    Http { endpoint: HttpEndpoint, agent: ureq::Agent },
    Replay(FixtureStore),
    Record { endpoint: HttpEndpoint, agent: ureq::Agent, store: Mutex<FixtureStore> },
}

enum Attempt {
    Done(String),
    Retry(RetryReason),
    Fatal(LlmError),
}

enum RetryReason {
    Transport(String),
    RateLimited,
    Server(u16),
}

/// Safe to share across threads; retry state is per request.
pub struct LlmClient {
    backend: Backend,
    policy: RetryPolicy,
    sleep: Sleeper,
    calls: AtomicUsize,
}

fn agent(endpoint: &HttpEndpoint) -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(endpoint.timeout))
        .build()
        .into()
}

impl LlmClient {
    fn with_backend(backend: Backend) -> LlmClient {
        LlmClient {
            backend,
            policy: RetryPolicy::default(),
            sleep: Arc::new(std::thread::sleep),
            calls: AtomicUsize::new(0),
        }
    }

    pub fn http(endpoint: HttpEndpoint) -> LlmClient {
        let agent = agent(&endpoint);
        LlmClient::with_backend(Backend::Http { endpoint, agent })
    }

    pub fn replay(dir: &Path) -> Result<LlmClient, LlmError> {
        Ok(LlmClient::with_backend(Backend::Replay(FixtureStore::open(dir)?)))
    }

    /// Calls the endpoint and stores every successful response in `dir`.
    pub fn recording(endpoint: HttpEndpoint, dir: &Path) -> Result<LlmClient, LlmError> {
        let store = if dir.join("index.json").exists() { FixtureStore::open(dir)? } else { FixtureStore::empty(dir) };
        let agent = agent(&endpoint);
        Ok(LlmClient::with_backend(Backend::Record { endpoint, agent, store: Mutex::new(store) }))
    }

    pub fn with_policy(mut self, policy: RetryPolicy) -> LlmClient {
        self.policy = policy;
        self
    }

    pub fn with_sleeper(mut self, sleep: Sleeper) -> LlmClient {
        self.sleep = sleep;
        self
    }

    pub fn is_replay(&self) -> bool {
        matches!(self.backend, Backend::Replay(_))
    }

    /// HTTP attempts made so far.
    pub fn http_calls(&self) -> usize {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn complete(&self, request: &LlmRequest) -> Result<LlmResponse, LlmError> {
        request.check()?;
        let (endpoint, agent) = match &self.backend {
            Backend::Replay(store) => {
                return Ok(LlmResponse { text: store.lookup(&request.key())?, latency_ms: 0, attempt: 1 });
            }
            Backend::Http { endpoint, agent } | Backend::Record { endpoint, agent, .. } => (endpoint, agent),
        };
        let started = Instant::now();
        let mut last = RetryReason::Transport(String::new());
        for attempt in 1..=self.policy.max_attempts {
            if attempt > 1 {
                (self.sleep)(self.policy.delay(attempt - 1));
            }
            match self.attempt(endpoint, agent, request) {
                Attempt::Done(text) => {
                    if let Backend::Record { store, .. } = &self.backend {
                        store.lock().expect("fixture store lock").insert(request.key(), &text)?;
                    }
                    let latency_ms = started.elapsed().as_millis() as u64;
                    return Ok(LlmResponse { text, latency_ms, attempt });
                }
                Attempt::Fatal(e) => return Err(e),
                Attempt::Retry(reason) => {
                    log::debug!("attempt {attempt} failed, retrying");
                    last = reason;
                }
            }
        }
        let attempts = self.policy.max_attempts;
        Err(match last {
            RetryReason::RateLimited => LlmError::RateLimitedExhausted { attempts },
            RetryReason::Transport(message) => LlmError::EndpointUnreachable { url: endpoint.url(), attempts, message },
            RetryReason::Server(status) => {
                LlmError::EndpointUnreachable { url: endpoint.url(), attempts, message: format!("HTTP {status}") }
            }
        })
    }

    fn attempt(&self, endpoint: &HttpEndpoint, agent: &ureq::Agent, request: &LlmRequest) -> Attempt {
        self.calls.fetch_add(1, Ordering::Relaxed);
        let mut body = json!({
            "model": request.model_name,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_tokens,
        });
        if let Some(seed) = request.seed {
            body["seed"] = json!(seed);
        }
        let mut call = agent.post(endpoint.url()).header("Content-Type", "application/json");
        if let Some(key) = &endpoint.api_key {
            call = call.header("Authorization", format!("Bearer {key}"));
        }
        let mut response = match call.send(body.to_string()) {
            Ok(r) => r,
            Err(e) => return Attempt::Retry(RetryReason::Transport(e.to_string())),
        };
        let status = response.status().as_u16();
        let text = match response.body_mut().read_to_string() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(RetryReason::Transport(e.to_string())),
        };
        match status {
            200..=299 => match completion_text(&text) {
                Ok(t) => Attempt::Done(t),
                Err(e) => Attempt::Fatal(e),
            },
            429 => Attempt::Retry(RetryReason::RateLimited),
            500..=599 => Attempt::Retry(RetryReason::Server(status)),
            _ => Attempt::Fatal(LlmError::HttpStatus { status, body: text.chars().take(200).collect() }),
        }
    }
}

/// `choices[0].message.content` of a chat-completion body.
fn completion_text(body: &str) -> Result<String, LlmError> {
    let v: Value = serde_json::from_str(body).map_err(|e| LlmError::MalformedApiResponse(e.to_string()))?;
    v.pointer("/choices/0/message/content")
        .and_then(Value::as_str)
        .map(String::from)
        .ok_or_else(|| LlmError::MalformedApiResponse("no choices[0].message.content".into()))
}

/// Settings shared by every request of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchSettings {
    pub model_name: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub parallelism: usize,
}

impl Default for BatchSettings {
    fn default() -> Self {
        BatchSettings {
            model_name: std::env::var("LLM_MODEL").unwrap_or_else(|_| "llama-3-70b-instruct".into()),
            temperature: DEFAULT_TEMPERATURE,
            max_tokens: DEFAULT_MAX_TOKENS,
            parallelism: 4,
        }
    }
}

/// The request for sample `index` of one issuer.
pub fn batch_request(
    template: &PromptTemplate,
    issuer: &str,
    country: &str,
    index: usize,
    settings: &BatchSettings,
) -> Result<LlmRequest, LlmError> {
    Ok(LlmRequest {
        model_name: settings.model_name.clone(),
        prompt: render_prompt(template, issuer, country)?,
        temperature: settings.temperature,
        max_tokens: settings.max_tokens,
        seed: Some(index as u64),
    })
}

/// `issuers.len() * per_issuer` response texts ordered by issuer, then
/// sample index. At most `settings.parallelism` requests are in flight.
pub fn batch_generate(
    client: &LlmClient,
    template: &PromptTemplate,
    issuers: &[(String, String)],
    per_issuer: usize,
    settings: &BatchSettings,
) -> Result<Vec<String>, LlmError> {
    if settings.parallelism == 0 {
        return Err(LlmError::InvalidRequest("parallelism must be at least 1".into()));
    }
    let total = issuers.len() * per_issuer;
    let slots: Vec<Mutex<Option<Result<String, LlmError>>>> = (0..total).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    let failed = AtomicBool::new(false);
    let work = || loop {
        if failed.load(Ordering::Relaxed) {
            return;
        }
        let job = next.fetch_add(1, Ordering::Relaxed);
        if job >= total {
            return;
        }
        let (issuer, country) = &issuers[job / per_issuer];
        let result = batch_request(template, issuer, country, job % per_issuer, settings)
            .and_then(|r| client.complete(&r))
            .map(|r| r.text)
            .map_err(|e| LlmError::Issuer { issuer: issuer.clone(), source: Box::new(e) });
        if result.is_err() {
            failed.store(true, Ordering::Relaxed);
        }
        *slots[job].lock().expect("slot lock") = Some(result);
    };
    std::thread::scope(|s| {
        for _ in 0..settings.parallelism.min(total.max(1)) {
            s.spawn(work);
        }
    });
    let mut out = Vec::with_capacity(total);
    for slot in slots {
        match slot.into_inner().expect("slot lock") {
            Some(Ok(text)) => out.push(text),
            Some(Err(e)) => return Err(e),
            // Skipped after an earlier failure; that failure is reported.
            None => continue,
        }
    }
    if out.len() < total {
        return Err(LlmError::InvalidRequest("batch aborted".into()));
    }
    Ok(out)
}
