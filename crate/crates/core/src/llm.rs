//! Chat-completion provider abstraction.
//!
//! The engine only needs "messages in, text out". The live HTTP client lives
//! in the service crate; [`ScriptedProvider`] replays canned responses and is
//! what every engine test runs against.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self { role: Role::System, content: content.into() }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self { role: Role::User, content: content.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletionParams {
    pub model: String,
    pub temperature: f32,
    pub max_tokens: u32,
    #[serde(with = "secs")]
    pub timeout: Duration,
}

impl Default for CompletionParams {
    fn default() -> Self {
        Self { model: "gpt-4o".into(), temperature: 0.7, max_tokens: 1024, timeout: Duration::from_secs(60) }
    }
}

impl CompletionParams {
    pub fn validate(&self) -> Result<(), String> {
        if self.model.trim().is_empty() {
            return Err("model name is empty".into());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.max_tokens == 0 {
            return Err("max_tokens must be positive".into());
        }
        Ok(())
    }
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let secs = f64::deserialize(d)?;
        Duration::try_from_secs_f64(secs).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderErrorKind {
    Network,
    Timeout,
    RateLimited,
    ServerError,
    AuthError,
    MalformedResponse,
    /// A scripted provider ran out of responses.
    ScriptExhausted,
}

impl ProviderErrorKind {
    pub fn retryable(self) -> bool {
        matches!(self, Self::Network | Self::Timeout | Self::RateLimited | Self::ServerError)
    }

    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "network" => Self::Network,
            "timeout" => Self::Timeout,
            "rate_limited" => Self::RateLimited,
            "server_error" => Self::ServerError,
            "auth_error" => Self::AuthError,
            "malformed_response" => Self::MalformedResponse,
            _ => return None,
        })
    }
}

impl fmt::Display for ProviderErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::Network => "network",
            Self::Timeout => "timeout",
            Self::RateLimited => "rate_limited",
            Self::ServerError => "server_error",
            Self::AuthError => "auth_error",
            Self::MalformedResponse => "malformed_response",
            Self::ScriptExhausted => "script_exhausted",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("provider error ({kind}): {detail}")]
pub struct ProviderError {
    pub kind: ProviderErrorKind,
    pub detail: String,
}

impl ProviderError {
    pub fn new(kind: ProviderErrorKind, detail: impl Into<String>) -> Self {
        Self { kind, detail: detail.into() }
    }

    pub fn retryable(&self) -> bool {
        self.kind.retryable()
    }
}

/// Something that turns a chat transcript into the assistant's reply.
/// Implementations must be safe to call from several threads.
pub trait Provider: Send + Sync {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for &P {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ProviderError> {
        (**self).complete(messages, params)
    }
}

impl<P: Provider + ?Sized> Provider for std::sync::Arc<P> {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ProviderError> {
        (**self).complete(messages, params)
    }
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn complete(&self, messages: &[ChatMessage], params: &CompletionParams) -> Result<String, ProviderError> {
        (**self).complete(messages, params)
    }
}

/// One scripted reply: either a response body or an injected failure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ScriptStep {
    Respond(String),
    Fail(ProviderErrorKind),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ScriptError {
    #[error("script is empty")]
    Empty,
    #[error("unknown error kind `{0}` in script step {1}")]
    UnknownErrorKind(String, usize),
}

/// Parses the fixture format: responses separated by lines consisting of
/// `---`. A step whose first line is `!error <kind>` injects a provider
/// failure (`network`, `timeout`, `rate_limited`, `server_error`,
/// `auth_error`, `malformed_response`).
pub fn parse_script(text: &str) -> Result<Vec<ScriptStep>, ScriptError> {
    let mut chunks: Vec<Vec<&str>> = vec![Vec::new()];
    for line in text.lines() {
        if line.trim_end() == "---" {
            chunks.push(Vec::new());
        } else {
            chunks.last_mut().expect("at least one chunk").push(line);
        }
    }
    let mut steps = Vec::new();
    for chunk in chunks {
        let body = chunk.join("\n");
        let body = body.trim();
        if body.is_empty() {
            continue;
        }
        if let Some(kind) = body.strip_prefix("!error") {
            let name = kind.split_whitespace().next().unwrap_or("");
            let kind = ProviderErrorKind::parse(name)
                .ok_or_else(|| ScriptError::UnknownErrorKind(name.to_owned(), steps.len()))?;
            steps.push(ScriptStep::Fail(kind));
        } else {
            steps.push(ScriptStep::Respond(body.to_owned()));
        }
    }
    if steps.is_empty() {
        return Err(ScriptError::Empty);
    }
    Ok(steps)
}

/// Stable hex digest of a transcript, used to key scripted responses.
pub fn fingerprint(messages: &[ChatMessage]) -> String {
    let mut hasher = Sha256::new();
    for m in messages {
        let role = match m.role {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        };
        hasher.update(role.as_bytes());
        hasher.update([0]);
        hasher.update(m.content.as_bytes());
        hasher.update([0]);
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

enum Script {
    Queue(VecDeque<ScriptStep>),
    Keyed(HashMap<String, ScriptStep>),
}

/// Deterministic provider replaying canned responses, either in order or
/// keyed by request fingerprint. Every request is captured for inspection.
pub struct ScriptedProvider {
    script: Mutex<Script>,
    requests: Mutex<Vec<Vec<ChatMessage>>>,
    delay: Option<Duration>,
}

impl ScriptedProvider {
    pub fn new<I, S>(responses: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self::from_steps(responses.into_iter().map(|r| ScriptStep::Respond(r.into())))
    }

    pub fn from_steps(steps: impl IntoIterator<Item = ScriptStep>) -> Self {
        Self {
            script: Mutex::new(Script::Queue(steps.into_iter().collect())),
            requests: Mutex::new(Vec::new()),
            delay: None,
        }
    }

    pub fn from_script(text: &str) -> Result<Self, ScriptError> {
        Ok(Self::from_steps(parse_script(text)?))
    }

    /// A provider that answers by request fingerprint (see [`fingerprint`]).
    /// The same request always yields the same response.
    pub fn keyed(map: impl IntoIterator<Item = (String, String)>) -> Self {
        Self {
            script: Mutex::new(Script::Keyed(map.into_iter().map(|(k, v)| (k, ScriptStep::Respond(v))).collect())),
            requests: Mutex::new(Vec::new()),
            delay: None,
        }
    }

    /// Sleeps for `delay` before answering each request.
    pub fn with_delay(mut self, delay: Duration) -> Self {
        self.delay = Some(delay);
        self
    }

    /// Appends steps to a queue-mode script.
    pub fn push(&self, step: ScriptStep) {
        if let Script::Queue(q) = &mut *self.script.lock().expect("script lock") {
            q.push_back(step);
        }
    }

    pub fn requests(&self) -> Vec<Vec<ChatMessage>> {
        self.requests.lock().expect("requests lock").clone()
    }

    pub fn request_count(&self) -> usize {
        self.requests.lock().expect("requests lock").len()
    }

    pub fn remaining(&self) -> usize {
        match &*self.script.lock().expect("script lock") {
            Script::Queue(q) => q.len(),
            Script::Keyed(m) => m.len(),
        }
    }
}

impl Provider for ScriptedProvider {
    fn complete(&self, messages: &[ChatMessage], _params: &CompletionParams) -> Result<String, ProviderError> {
        self.requests.lock().expect("requests lock").push(messages.to_vec());
        if let Some(d) = self.delay {
            std::thread::sleep(d);
        }
        let step = match &mut *self.script.lock().expect("script lock") {
            Script::Queue(q) => q.pop_front(),
            Script::Keyed(m) => m.get(&fingerprint(messages)).cloned(),
        };
        match step {
            Some(ScriptStep::Respond(r)) => Ok(r),
            Some(ScriptStep::Fail(kind)) => Err(ProviderError::new(kind, "scripted failure")),
            None => Err(ProviderError::new(ProviderErrorKind::ScriptExhausted, "no scripted response left")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ask(p: &ScriptedProvider, q: &str) -> Result<String, ProviderError> {
        p.complete(&[ChatMessage::user(q)], &CompletionParams::default())
    }

    #[test]
    fn queued_responses_in_order_then_exhausted() {
        let p = ScriptedProvider::new(["r1", "r2"]);
        assert_eq!(ask(&p, "a").unwrap(), "r1");
        assert_eq!(ask(&p, "b").unwrap(), "r2");
        assert_eq!(ask(&p, "c").unwrap_err().kind, ProviderErrorKind::ScriptExhausted);
        assert_eq!(p.request_count(), 3);
    }

    #[test]
    fn echoes_outline() {
        let p = ScriptedProvider::new(["# A\n## B"]);
        assert_eq!(ask(&p, "x").unwrap(), "# A\n## B");
    }

    #[test]
    fn keyed_script_is_deterministic() {
        let msgs = [ChatMessage::user("same prompt")];
        let p = ScriptedProvider::keyed([(fingerprint(&msgs), "answer".to_string())]);
        assert_eq!(ask(&p, "same prompt").unwrap(), "answer");
        assert_eq!(ask(&p, "same prompt").unwrap(), "answer");
        assert_eq!(ask(&p, "other").unwrap_err().kind, ProviderErrorKind::ScriptExhausted);
    }

    #[test]
    fn script_format() {
        let steps = parse_script("# A\n## B\n---\n!error rate_limited\n---\n\n# C\n").unwrap();
        assert_eq!(
            steps,
            vec![
                ScriptStep::Respond("# A\n## B".into()),
                ScriptStep::Fail(ProviderErrorKind::RateLimited),
                ScriptStep::Respond("# C".into()),
            ]
        );
        assert_eq!(parse_script("---\n\n---"), Err(ScriptError::Empty));
        assert!(matches!(parse_script("!error bogus"), Err(ScriptError::UnknownErrorKind(..))));
    }

    #[test]
    fn retryable_kinds() {
        use ProviderErrorKind::*;
        for k in [Network, Timeout, RateLimited, ServerError] {
            assert!(k.retryable());
        }
        for k in [AuthError, MalformedResponse, ScriptExhausted] {
            assert!(!k.retryable());
        }
    }

    #[test]
    fn params_validation() {
        assert!(CompletionParams::default().validate().is_ok());
        let hot = CompletionParams { temperature: 2.5, ..Default::default() };
        assert!(hot.validate().is_err());
    }
}
