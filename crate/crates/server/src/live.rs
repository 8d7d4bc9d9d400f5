//! Client for OpenAI-compatible chat-completion endpoints.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use nodemind_core::{ChatMessage, CompletionParams, Provider, ProviderError, ProviderErrorKind};

#[derive(Serialize)]
struct Request<'a> {
    model: &'a str,
    messages: &'a [ChatMessage],
    temperature: f32,
    max_tokens: u32,
}

#[derive(Deserialize)]
struct Response {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    message: Message,
}

#[derive(Deserialize)]
struct Message {
    content: Option<String>,
}

/// Blocking HTTP client. One attempt per call; wrap in
/// [`Retrying`](crate::retry::Retrying) for backoff.
pub struct LiveClient {
    base_url: String,
    api_key: Option<String>,
    http: OnceLock<reqwest::blocking::Client>,
}

impl LiveClient {
    pub fn new(base_url: impl Into<String>, api_key: Option<String>) -> Self {
        let base_url = base_url.into().trim_end_matches('/').to_owned();
        Self { base_url, api_key: api_key.filter(|k| !k.is_empty()), http: OnceLock::new() }
    }

    /// Reads the key from the environment variable `var`.
    pub fn from_env(base_url: impl Into<String>, var: &str) -> Self {
        Self::new(base_url, std::env::var(var).ok())
    }

    pub fn endpoint(&self) -> String {
        format!("{}/chat/completions", self.base_url)
    }

    fn http(&self) -> &reqwest::blocking::Client {
        self.http.get_or_init(reqwest::blocking::Client::new)
    }
}

fn err(kind: ProviderErrorKind, detail: impl Into<String>) -> ProviderError {
    ProviderError::new(kind, detail)
}

fn status_kind(status: reqwest::StatusCode) -> ProviderErrorKind {
    match status.as_u16() {
        401 | 403 => ProviderErrorKind::AuthError,
        408 => ProviderErrorKind::Timeout,
        429 => ProviderErrorKind::RateLimited,
        500..=599 => ProviderErrorKind::ServerError,
        _ => ProviderErrorKind::MalformedResponse,
    }
}

impl Provider for LiveClient {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ProviderError> {
        let Some(key) = &self.api_key else {
            return Err(err(ProviderErrorKind::AuthError, "no API key configured"));
        };
        if messages.is_empty() {
            return Err(err(ProviderErrorKind::MalformedResponse, "no messages to send"));
        }
        let body = Request {
            model: &params.model,
            messages,
            temperature: params.temperature,
            max_tokens: params.max_tokens,
        };
        let resp = self
            .http()
            .post(self.endpoint())
            .bearer_auth(key)
            .timeout(params.timeout)
            .json(&body)
            .send()
            .map_err(|e| {
                let kind = if e.is_timeout() { ProviderErrorKind::Timeout } else { ProviderErrorKind::Network };
                err(kind, e.to_string())
            })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| err(ProviderErrorKind::Network, e.to_string()))?;
        if !status.is_success() {
            return Err(err(status_kind(status), format!("HTTP {status}: {text}")));
        }
        let parsed: Response =
            serde_json::from_str(&text).map_err(|e| err(ProviderErrorKind::MalformedResponse, e.to_string()))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.message.content)
            .ok_or_else(|| err(ProviderErrorKind::MalformedResponse, "response has no message content"))
    }
}
