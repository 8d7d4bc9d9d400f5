//! HTTP service and command-line driver for `nodemind-core`.
//!
//! Includes the live client for OpenAI-compatible chat endpoints, retry with
//! jittered exponential backoff, and a process-wide in-flight cap.

pub mod api;
pub mod cli;
pub mod config;
pub mod live;
pub mod retry;

pub use api::{router, AppState, BackgroundServer};
pub use config::{build_provider, Config, ProviderConfig, ProviderKind};
pub use live::LiveClient;
pub use retry::{RetryPolicy, Retrying, Throttled};
