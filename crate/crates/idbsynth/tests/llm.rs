mod common;

use std::path::Path;
use std::sync::atomic::Ordering;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use common::{chat_body, StubServer};
use idbsynth::llm::{
    batch_generate, batch_request, render_prompt, BatchSettings, HttpEndpoint, LlmClient, LlmError, LlmRequest,
    PromptTemplate, RetryPolicy,
};
use idbsynth_core::record::{parse_llm_response_with, validate_record, DocumentKind, RecordSchema};

fn fixtures() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/assets/fixtures"))
}

fn no_sleep(log: Arc<Mutex<Vec<Duration>>>) -> idbsynth::llm::Sleeper {
    Arc::new(move |d| log.lock().unwrap().push(d))
}

fn settings(parallelism: usize) -> BatchSettings {
    BatchSettings { model_name: "test-model".into(), temperature: 0.9, max_tokens: 300, parallelism }
}

#[test]
fn rendering() {
    let dl = PromptTemplate::builtin(DocumentKind::DriverLicense);
    let text = render_prompt(&dl, "California", "USA").unwrap();
    assert!(text.contains("California") && text.contains("USA") && text.contains("separated by |"));
    let (before, _) = dl.template_text.split_once("{issuer}").unwrap();
    assert!(text.starts_with(before));
    assert!(matches!(render_prompt(&dl, "", "USA"), Err(LlmError::InvalidRequest(_))));
    let ins = PromptTemplate::builtin(DocumentKind::InsuranceCard);
    assert!(render_prompt(&ins, "Blue Cross Blue Shield", "USA").unwrap().contains("Blue Cross Blue Shield"));
    for kind in DocumentKind::ALL {
        let t = PromptTemplate::builtin(kind);
        let schema = RecordSchema::for_kind(kind);
        for f in &schema.required_fields {
            assert!(t.template_text.contains(f.as_str()), "{kind} prompt names {f}");
        }
    }
}

#[test]
fn retries_server_errors() {
    let server = StubServer::start(
        Duration::ZERO,
        Arc::new(|n, _| if n < 3 { (500, "oops".into()) } else { (200, chat_body("ok")) }),
    );
    let delays = Arc::new(Mutex::new(Vec::new()));
    let client = LlmClient::http(HttpEndpoint::new(&server.url)).with_sleeper(no_sleep(delays.clone()));
    let r = client.complete(&LlmRequest::new("m", "hello")).unwrap();
    assert_eq!((r.text.as_str(), r.attempt), ("ok", 4));
    assert_eq!(server.calls(), 4);
    let ms: Vec<u128> = delays.lock().unwrap().iter().map(Duration::as_millis).collect();
    assert_eq!(ms, [500, 1000, 2000]);
}

#[test]
fn rate_limit_exhausts() {
    let server = StubServer::start(Duration::ZERO, Arc::new(|_, _| (429, "slow down".into())));
    let client = LlmClient::http(HttpEndpoint::new(&server.url)).with_sleeper(no_sleep(Default::default()));
    let e = client.complete(&LlmRequest::new("m", "hello")).unwrap_err();
    assert!(matches!(e, LlmError::RateLimitedExhausted { attempts: 5 }), "{e}");
    assert_eq!(server.calls(), 5);
}

#[test]
fn unreachable_and_client_errors() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let client = LlmClient::http(HttpEndpoint::new(format!("http://127.0.0.1:{port}")))
        .with_sleeper(no_sleep(Default::default()))
        .with_policy(RetryPolicy { max_attempts: 2, ..RetryPolicy::default() });
    assert!(matches!(client.complete(&LlmRequest::new("m", "x")), Err(LlmError::EndpointUnreachable { attempts: 2, .. })));

    let server = StubServer::start(Duration::ZERO, Arc::new(|_, _| (200, "{\"choices\": []}".into())));
    let client = LlmClient::http(HttpEndpoint::new(&server.url));
    assert!(matches!(client.complete(&LlmRequest::new("m", "x")), Err(LlmError::MalformedApiResponse(_))));

    let server = StubServer::start(Duration::ZERO, Arc::new(|_, _| (401, "no key".into())));
    let client = LlmClient::http(HttpEndpoint::new(&server.url));
    assert!(matches!(client.complete(&LlmRequest::new("m", "x")), Err(LlmError::HttpStatus { status: 401, .. })));
    assert_eq!(server.calls(), 1);
    assert!(matches!(client.complete(&LlmRequest::new("m", " ")), Err(LlmError::InvalidRequest(_))));
}

#[test]
fn request_body_shape() {
    let seen = Arc::new(Mutex::new(None));
    let s2 = seen.clone();
    let server = StubServer::start(
        Duration::ZERO,
        Arc::new(move |_, req| {
            *s2.lock().unwrap() = Some(req.clone());
            (200, chat_body("x"))
        }),
    );
    let client = LlmClient::http(HttpEndpoint::new(format!("{}/", server.url)));
    let mut req = LlmRequest::new("llama", "prompt text");
    req.seed = Some(3);
    client.complete(&req).unwrap();
    let body = seen.lock().unwrap().clone().unwrap();
    assert_eq!(body["model"], "llama");
    assert_eq!(body["messages"][0]["content"], "prompt text");
    assert_eq!(body["temperature"], 0.9);
    assert_eq!(body["seed"], 3);
}

#[test]
fn batch_order_and_concurrency() {
    let server = StubServer::start(
        Duration::from_millis(30),
        Arc::new(|_, req| {
            let prompt = req["messages"][0]["content"].as_str().unwrap();
            let issuer = if prompt.contains("Texas") { "Texas" } else { "California" };
            (200, chat_body(&format!("{issuer}#{}", req["seed"])))
        }),
    );
    let client = LlmClient::http(HttpEndpoint::new(&server.url));
    let t = PromptTemplate::builtin(DocumentKind::DriverLicense);
    let issuers = vec![("California".to_string(), "USA".to_string()), ("Texas".to_string(), "USA".to_string())];
    let out = batch_generate(&client, &t, &issuers, 3, &settings(2)).unwrap();
    assert_eq!(out, ["California#0", "California#1", "California#2", "Texas#0", "Texas#1", "Texas#2"]);
    assert!(server.max_in_flight.load(Ordering::SeqCst) <= 2);

    let single = batch_generate(&client, &t, &issuers[..1], 1, &settings(1)).unwrap();
    let direct = client.complete(&batch_request(&t, "California", "USA", 0, &settings(1)).unwrap()).unwrap();
    assert_eq!(single, [direct.text]);
    assert!(matches!(batch_generate(&client, &t, &issuers, 1, &settings(0)), Err(LlmError::InvalidRequest(_))));
}

#[test]
fn batch_errors_name_the_issuer() {
    let server = StubServer::start(Duration::ZERO, Arc::new(|_, _| (400, "bad".into())));
    let client = LlmClient::http(HttpEndpoint::new(&server.url));
    let t = PromptTemplate::builtin(DocumentKind::UniversityId);
    let e = batch_generate(&client, &t, &[("MIT".into(), "USA".into())], 2, &settings(1)).unwrap_err();
    assert!(matches!(e, LlmError::Issuer { ref issuer, .. } if issuer == "MIT"));
}

#[test]
fn record_then_replay_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let server = StubServer::start(
        Duration::ZERO,
        Arc::new(|n, _| (200, chat_body(&format!("family_name: Doe{n}|first_name: Jo")))),
    );
    let recorder = LlmClient::recording(HttpEndpoint::new(&server.url), dir.path()).unwrap();
    let t = PromptTemplate::builtin(DocumentKind::DriverLicense);
    let issuers = vec![("Ohio".to_string(), "USA".to_string())];
    let live = batch_generate(&recorder, &t, &issuers, 3, &settings(1)).unwrap();
    let replay = LlmClient::replay(dir.path()).unwrap();
    let a = batch_generate(&replay, &t, &issuers, 3, &settings(3)).unwrap();
    let b = batch_generate(&replay, &t, &issuers, 3, &settings(1)).unwrap();
    assert_eq!(a, live);
    assert_eq!(a, b);
    assert_eq!(replay.http_calls(), 0);
    let missing = batch_request(&t, "Ohio", "USA", 9, &settings(1)).unwrap();
    assert!(matches!(replay.complete(&missing), Err(LlmError::FixtureMissing { .. })));
}

#[test]
fn shipped_fixtures_parse() {
    let client = LlmClient::replay(fixtures()).unwrap();
    let config_path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/llm-fixtures.json");
    let config = idbsynth::config::PipelineConfig::load(&config_path).unwrap();
    let mut count = 0;
    for (kind, per) in config.generation_plan() {
        let t = PromptTemplate::builtin(kind);
        let per_issuer = per[0].1;
        assert!(per.iter().all(|p| p.1 == per_issuer));
        let issuers: Vec<(String, String)> = per.iter().map(|(r, _)| (r.issuer.clone(), r.country.clone())).collect();
        let texts = batch_generate(&client, &t, &issuers, per_issuer, &settings(2)).unwrap();
        for (i, text) in texts.iter().enumerate() {
            let (issuer, country) = &issuers[i / per_issuer];
            let r = parse_llm_response_with(text, &RecordSchema::for_kind(kind), Some(issuer), Some(country))
                .unwrap_or_else(|e| panic!("{kind} {issuer} #{i}: {e}"));
            assert!(validate_record(&r).ok);
            count += 1;
        }
    }
    assert!(count >= 12);
    let first = client.complete(&batch_request(
        &PromptTemplate::builtin(DocumentKind::DriverLicense),
        "California",
        "USA",
        0,
        &settings(1),
    ).unwrap()).unwrap();
    assert_eq!(first.attempt, 1);
    assert_eq!(first.text, std::fs::read_to_string(fixtures().join("dl_ca_01.txt")).unwrap());
}
