use std::collections::VecDeque;
use std::net::SocketAddr;
use std::sync::{Arc, Mutex};
use std::time::Duration;

use axum::extract::State;
use axum::http::{HeaderMap, StatusCode};
use axum::routing::post;
use axum::Router;
use serde_json::{json, Value};

use nodemind::{LiveClient, RetryPolicy, Retrying};
use nodemind_core::{ChatMessage, CompletionParams, Provider, ProviderErrorKind};

#[derive(Default)]
struct Fake {
    replies: Mutex<VecDeque<(u16, String)>>,
    seen: Mutex<Vec<(Option<String>, Value)>>,
}

async fn chat(State(fake): State<Arc<Fake>>, headers: HeaderMap, body: String) -> (StatusCode, String) {
    let auth = headers.get("authorization").map(|v| v.to_str().unwrap().to_owned());
    fake.seen.lock().unwrap().push((auth, serde_json::from_str(&body).unwrap_or(Value::Null)));
    let (status, text) = fake.replies.lock().unwrap().pop_front().unwrap_or((500, "empty".into()));
    (StatusCode::from_u16(status).unwrap(), text)
}

/// Starts a fake chat endpoint; the runtime lives until the test process ends.
fn fake_server(replies: Vec<(u16, String)>) -> (SocketAddr, Arc<Fake>) {
    let fake = Arc::new(Fake { replies: Mutex::new(replies.into()), ..Fake::default() });
    let listener = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    listener.set_nonblocking(true).unwrap();
    let addr = listener.local_addr().unwrap();
    let app = Router::new().route("/v1/chat/completions", post(chat)).with_state(fake.clone());
    std::thread::spawn(move || {
        let rt = tokio::runtime::Builder::new_current_thread().enable_all().build().unwrap();
        rt.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).unwrap();
            axum::serve(listener, app).await.unwrap();
        });
    });
    (addr, fake)
}

fn completion(text: &str) -> (u16, String) {
    (200, json!({ "choices": [{ "index": 0, "message": { "role": "assistant", "content": text } }] }).to_string())
}

fn messages() -> Vec<ChatMessage> {
    vec![ChatMessage::system("You are helpful."), ChatMessage::user("Surrealism")]
}

fn client(addr: SocketAddr) -> LiveClient {
    LiveClient::new(format!("http://{addr}/v1/"), Some("sk-test".into()))
}

fn fast() -> RetryPolicy {
    RetryPolicy { base_delay_secs: 0.01, ..RetryPolicy::default() }
}

#[test]
fn sends_openai_wire_format() {
    let (addr, fake) = fake_server(vec![completion("# A\n## B")]);
    let params = CompletionParams { model: "test-model".into(), temperature: 0.5, max_tokens: 256, ..Default::default() };
    assert_eq!(client(addr).complete(&messages(), &params).unwrap(), "# A\n## B");
    let seen = fake.seen.lock().unwrap();
    let (auth, body) = &seen[0];
    assert_eq!(auth.as_deref(), Some("Bearer sk-test"));
    assert_eq!(body["model"], "test-model");
    assert_eq!(body["temperature"], 0.5);
    assert_eq!(body["max_tokens"], 256);
    assert_eq!(body["messages"], json!([{ "role": "system", "content": "You are helpful." }, { "role": "user", "content": "Surrealism" }]));
}

#[test]
fn rate_limit_then_success_takes_exactly_one_retry() {
    let (addr, fake) = fake_server(vec![(429, "slow down".into()), completion("ok")]);
    let p = Retrying::new(client(addr), fast());
    assert_eq!(p.complete(&messages(), &CompletionParams::default()).unwrap(), "ok");
    assert_eq!(fake.seen.lock().unwrap().len(), 2);
}

#[test]
fn missing_credential_fails_without_network() {
    let (addr, fake) = fake_server(vec![completion("unused")]);
    let p = Retrying::new(LiveClient::new(format!("http://{addr}/v1"), None), fast());
    let e = p.complete(&messages(), &CompletionParams::default()).unwrap_err();
    assert_eq!(e.kind, ProviderErrorKind::AuthError);
    let from_env = LiveClient::from_env(format!("http://{addr}/v1"), "NODEMIND_TEST_SURELY_UNSET_KEY");
    assert_eq!(from_env.complete(&messages(), &CompletionParams::default()).unwrap_err().kind, ProviderErrorKind::AuthError);
    assert!(fake.seen.lock().unwrap().is_empty());
}

#[test]
fn status_codes_map_to_error_kinds() {
    let cases = [
        ((401, "bad key".to_owned()), ProviderErrorKind::AuthError),
        ((503, "down".to_owned()), ProviderErrorKind::ServerError),
        ((429, "later".to_owned()), ProviderErrorKind::RateLimited),
        ((400, "bad request".to_owned()), ProviderErrorKind::MalformedResponse),
        ((200, "not json".to_owned()), ProviderErrorKind::MalformedResponse),
        ((200, json!({ "choices": [] }).to_string()), ProviderErrorKind::MalformedResponse),
    ];
    for (reply, kind) in cases {
        let (addr, _) = fake_server(vec![reply.clone()]);
        let e = client(addr).complete(&messages(), &CompletionParams::default()).unwrap_err();
        assert_eq!(e.kind, kind, "{reply:?}");
    }
}

#[test]
fn server_errors_stop_after_four_attempts() {
    let (addr, fake) = fake_server(vec![(500, "boom".into()); 6]);
    let e = Retrying::new(client(addr), fast()).complete(&messages(), &CompletionParams::default()).unwrap_err();
    assert_eq!(e.kind, ProviderErrorKind::ServerError);
    assert_eq!(fake.seen.lock().unwrap().len(), 4);
}

#[test]
fn auth_errors_are_not_retried() {
    let (addr, fake) = fake_server(vec![(401, "no".into()), completion("late")]);
    let e = Retrying::new(client(addr), fast()).complete(&messages(), &CompletionParams::default()).unwrap_err();
    assert_eq!(e.kind, ProviderErrorKind::AuthError);
    assert_eq!(fake.seen.lock().unwrap().len(), 1);
}

#[test]
fn unreachable_endpoint_is_network_error() {
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let params = CompletionParams { timeout: Duration::from_secs(2), ..Default::default() };
    let e = LiveClient::new(format!("http://127.0.0.1:{port}"), Some("k".into())).complete(&messages(), &params).unwrap_err();
    assert!(matches!(e.kind, ProviderErrorKind::Network | ProviderErrorKind::Timeout), "{e}");
    assert!(e.retryable());
}

/// Opt-in check against a real endpoint: set NODEMIND_LIVE_BASE_URL and
/// OPENAI_API_KEY, then run with `--ignored`.
#[test]
#[ignore]
fn live_endpoint_answers() {
    let base = std::env::var("NODEMIND_LIVE_BASE_URL").unwrap_or_else(|_| "https://api.openai.com/v1".into());
    let p = Retrying::new(LiveClient::from_env(base, "OPENAI_API_KEY"), RetryPolicy::default());
    let out = p.complete(&[ChatMessage::user("Reply with the single word: ok")], &CompletionParams::default()).unwrap();
    assert!(!out.trim().is_empty());
}
