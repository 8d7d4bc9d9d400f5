//! Service configuration, loaded from TOML and overridden by flags.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use nodemind_core::{CompletionParams, EnrichOptions, PromptConfig, Provider, ScriptedProvider};

use crate::live::LiveClient;
use crate::retry::{RetryPolicy, Retrying, Throttled};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum ProviderKind {
    #[default]
    Live,
    Scripted,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub kind: ProviderKind,
    pub base_url: String,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Response script for the scripted provider.
    pub script: Option<PathBuf>,
    pub max_in_flight: usize,
    pub retry: RetryPolicy,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        Self {
            kind: ProviderKind::Live,
            base_url: "https://api.openai.com/v1".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            script: None,
            max_in_flight: 4,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Config {
    pub addr: String,
    /// Where map documents are persisted. `None` keeps maps in memory only.
    pub data_dir: Option<PathBuf>,
    /// Prompt template file; the built-in templates are used when unset.
    pub templates: Option<PathBuf>,
    pub provider: ProviderConfig,
    pub params: CompletionParams,
    pub enrich: EnrichOptions,
}

impl Default for Config {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
            data_dir: Some(PathBuf::from("maps")),
            templates: None,
            provider: ProviderConfig::default(),
            params: CompletionParams::default(),
            enrich: EnrichOptions::default(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{}: {message}", path.display())]
    Invalid { path: PathBuf, message: String },
    #[error("{0}")]
    Provider(String),
}

impl Config {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.into(), source })?;
        let cfg: Config =
            toml::from_str(&text).map_err(|e| ConfigError::Invalid { path: path.into(), message: e.to_string() })?;
        cfg.params.validate().map_err(|message| ConfigError::Invalid { path: path.into(), message })?;
        Ok(cfg)
    }

    pub fn prompts(&self) -> Result<PromptConfig, ConfigError> {
        match &self.templates {
            None => Ok(PromptConfig::default()),
            Some(path) => PromptConfig::load(path)
                .map_err(|e| ConfigError::Invalid { path: path.clone(), message: e.to_string() }),
        }
    }
}

/// Builds the configured provider: the raw client, capped in flight and
/// wrapped in retries.
pub fn build_provider(cfg: &ProviderConfig) -> Result<Arc<dyn Provider>, ConfigError> {
    let inner: Arc<dyn Provider> = match cfg.kind {
        ProviderKind::Live => Arc::new(LiveClient::from_env(&cfg.base_url, &cfg.api_key_env)),
        ProviderKind::Scripted => {
            let path = cfg
                .script
                .as_ref()
                .ok_or_else(|| ConfigError::Provider("scripted provider needs a script file".into()))?;
            let text =
                std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
            let p = ScriptedProvider::from_script(&text)
                .map_err(|e| ConfigError::Invalid { path: path.clone(), message: e.to_string() })?;
            Arc::new(p)
        }
    };
    Ok(Arc::new(Retrying::new(Throttled::new(inner, cfg.max_in_flight.max(1)), cfg.retry.clone())))
}
