#![allow(dead_code)]

use std::sync::Arc;

use nodemind::api::{AppState, SharedEngine};
use nodemind::{BackgroundServer, RetryPolicy, Retrying};
use nodemind_core::store::FixedClock;
use nodemind_core::{Engine, PromptConfig, Provider, ScriptedProvider};
use serde_json::Value;

pub const SURREALISM: &str = include_str!("../fixtures/surrealism.txt");
pub const CASE_STUDY: &str = include_str!("../fixtures/case_study.txt");

pub fn fixture(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

pub fn clock() -> Arc<FixedClock> {
    Arc::new(FixedClock("2026-10-15T12:00:00Z".parse().unwrap()))
}

/// Engine over `provider` with the default retry count but no backoff delay.
pub fn engine(provider: Arc<ScriptedProvider>) -> SharedEngine {
    let policy = RetryPolicy { base_delay_secs: 0.0, ..RetryPolicy::default() };
    let p: Arc<dyn Provider> = Arc::new(Retrying::new(provider, policy));
    Engine::new(p, PromptConfig::default())
}

pub fn scripted(script: &str) -> Arc<ScriptedProvider> {
    Arc::new(ScriptedProvider::from_script(script).unwrap())
}

pub struct Harness {
    pub server: BackgroundServer,
    pub state: Arc<AppState>,
    pub provider: Arc<ScriptedProvider>,
    http: reqwest::blocking::Client,
}

impl Harness {
    pub fn start(provider: Arc<ScriptedProvider>) -> Self {
        let state = Arc::new(AppState::in_memory(engine(provider.clone()), clock()));
        Self::with_state(state, provider)
    }

    pub fn with_state(state: Arc<AppState>, provider: Arc<ScriptedProvider>) -> Self {
        let server = BackgroundServer::start(state.clone(), "127.0.0.1:0").unwrap();
        Self { server, state, provider, http: reqwest::blocking::Client::new() }
    }

    pub fn post(&self, path: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = self.http.post(self.server.url(path));
        if let Some(b) = body {
            req = req.json(&b);
        }
        let resp = req.send().unwrap();
        let status = resp.status().as_u16();
        (status, resp.json().unwrap())
    }

    pub fn get_text(&self, path: &str) -> (u16, String) {
        let resp = self.http.get(self.server.url(path)).send().unwrap();
        (resp.status().as_u16(), resp.text().unwrap())
    }

    pub fn get(&self, path: &str) -> (u16, Value) {
        let (status, text) = self.get_text(path);
        (status, serde_json::from_str(&text).unwrap())
    }

    pub fn create(&self, query: &str) -> Value {
        let (status, body) = self.post("/maps", Some(serde_json::json!({ "query": query })));
        assert_eq!(status, 201, "{body}");
        body
    }
}

/// Finds the id of the first node with `text` in a returned tree.
pub fn find(tree: &Value, text: &str) -> Option<u64> {
    if tree["text"] == text {
        return tree["id"].as_u64();
    }
    tree["children"].as_array()?.iter().find_map(|c| find(c, text))
}

pub fn count(tree: &Value) -> usize {
    1 + tree["children"].as_array().map_or(0, |cs| cs.iter().map(count).sum())
}

pub fn max_depth(tree: &Value) -> u64 {
    let own = tree["depth"].as_u64().unwrap();
    tree["children"].as_array().map_or(own, |cs| cs.iter().map(max_depth).max().unwrap_or(own).max(own))
}
