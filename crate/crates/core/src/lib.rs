//! Engine for node-based, non-linear exploration of a topic with a chat LLM.
//!
//! A query is turned into a four-level mind map; any node can then be deepened
//! with an explanation, worked examples, or a free-form question, with the
//! node's ancestor chain injected into the prompt as context. Every structural
//! change, including AI-generated attachments, goes through a reversible
//! command history.
//!
//! The pieces:
//!
//! - [`map`]: the tree, its edit commands and undo/redo history.
//! - [`outline`]: the `#`-level outline format every LLM response uses.
//! - [`prompt`]: keyword routing and prompt templates.
//! - [`llm`]: the provider abstraction and a scripted provider for tests.
//! - [`redundancy`]: token repetition rate used to reject duplicate content.
//! - [`enrich`]: map generation and the three per-node AI actions.
//! - [`store`]: versioned on-disk documents and outline export.

pub mod enrich;
pub mod llm;
pub mod map;
pub mod outline;
pub mod prompt;
pub mod redundancy;
pub mod store;
#[cfg(feature = "testkit")]
pub mod testkit;

pub use enrich::{EnrichError, EnrichOptions, EnrichWarning, EnrichmentKind, EnrichmentResult, Engine, GeneratedMap};
pub use llm::{ChatMessage, CompletionParams, Provider, ProviderError, ProviderErrorKind, Role, ScriptedProvider};
pub use map::{EditCommand, MapError, MindMap, Node, NodeId, NodeOrigin};
pub use outline::{OutlineFragment, OutlineLimits, OutlineTree, Violation, ViolationKind};
pub use prompt::{NodeContext, PromptBundle, PromptConfig, RoutingTable, TemplateCategory};
