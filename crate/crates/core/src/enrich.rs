//! Map generation and the per-node AI actions.
//!
//! Each action follows the same pipeline: build the prompt with the node's
//! ancestor chain as context, call the provider, parse the `#` outline,
//! re-base it under the target node, drop redundant candidates, and attach
//! the rest as one undoable history entry.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::{CompletionParams, Provider, ProviderError};
use crate::map::{MapError, MindMap, NodeId, NodeOrigin};
use crate::outline::{
    char_len, fragment_to_forest, fragment_to_tree, parse_outline, validate_initial_map, OutlineError,
    OutlineLimits, OutlineTree, Violation,
};
use crate::prompt::{NodeContext, PromptBundle, PromptConfig, PromptError, TemplateCategory};
use crate::redundancy::{repetition_rate, DEFAULT_THRESHOLD};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnrichmentKind {
    Explain,
    Examples,
    Explore,
}

impl EnrichmentKind {
    pub fn origin(self) -> NodeOrigin {
        match self {
            Self::Explain => NodeOrigin::Explanation,
            Self::Examples => NodeOrigin::Example,
            Self::Explore => NodeOrigin::Exploration,
        }
    }
}

impl std::str::FromStr for EnrichmentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "explain" => Ok(Self::Explain),
            "examples" => Ok(Self::Examples),
            "explore" => Ok(Self::Explore),
            other => Err(format!("unknown enrichment kind `{other}` (expected explain, examples or explore)")),
        }
    }
}

/// Non-fatal findings attached to a generation or enrichment.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnrichWarning {
    Outline(Violation),
    TooManyExamples { received: usize, kept: usize },
    RedundantContent { text: String, rate: f64 },
    AnswerTooLong { chars: usize, limit: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnrichmentResult {
    /// Top-level attached nodes, in order. Each may carry descendants.
    pub attached: Vec<NodeId>,
    pub warnings: Vec<EnrichWarning>,
    pub raw_response: String,
}

#[derive(Debug, Clone)]
pub struct GeneratedMap {
    pub map: MindMap,
    pub category: TemplateCategory,
    pub warnings: Vec<Violation>,
    pub raw_response: String,
}

#[derive(Debug, Clone, Error)]
pub enum EnrichError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("question is empty")]
    EmptyQuestion,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("malformed generation: {reason}")]
    GenerationMalformed { reason: String, raw: String },
    #[error("generated content repeats existing content (repetition rate {rate:.2})")]
    RedundantContent { rate: f64, candidates: Vec<String>, raw: String },
    #[error("response contained no usable examples")]
    NoExamples { raw: String },
}

impl From<PromptError> for EnrichError {
    fn from(e: PromptError) -> Self {
        match e {
            PromptError::EmptyQuery => Self::EmptyQuery,
            PromptError::EmptyQuestion => Self::EmptyQuestion,
            PromptError::Config(reason) => Self::GenerationMalformed { reason, raw: String::new() },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnrichOptions {
    /// Repetition rate at or above which a candidate is rejected.
    pub redundancy_threshold: f64,
    /// Compare candidates against every node in the map instead of only the
    /// target's existing children.
    pub whole_map_redundancy: bool,
    pub max_examples: usize,
    /// Advisory length limit for explanation and exploration answers.
    pub answer_char_limit: usize,
    pub limits: OutlineLimits,
}

impl Default for EnrichOptions {
    fn default() -> Self {
        Self {
            redundancy_threshold: DEFAULT_THRESHOLD,
            whole_map_redundancy: false,
            max_examples: 3,
            answer_char_limit: 100,
            limits: OutlineLimits::default(),
        }
    }
}

/// Provider, templates and decoding parameters bundled together.
pub struct Engine<P> {
    pub provider: P,
    pub prompts: PromptConfig,
    pub params: CompletionParams,
    pub options: EnrichOptions,
}

impl<P: Provider> Engine<P> {
    pub fn new(provider: P, prompts: PromptConfig) -> Self {
        Self { provider, prompts, params: CompletionParams::default(), options: EnrichOptions::default() }
    }

    pub fn with_params(mut self, params: CompletionParams) -> Self {
        self.params = params;
        self
    }

    pub fn with_options(mut self, options: EnrichOptions) -> Self {
        self.options = options;
        self
    }

    /// Generates an initial map for `query`. Structural problems in the
    /// response are reported as warnings, not errors.
    pub fn generate_map(&self, query: &str) -> Result<GeneratedMap, EnrichError> {
        let bundle = self.prompts.build_generate_prompt(query)?;
        let raw = self.call(&bundle)?;
        let malformed = |e: OutlineError, raw: &str| EnrichError::GenerationMalformed { reason: e.to_string(), raw: raw.to_owned() };
        let frag = parse_outline(&raw).map_err(|e| malformed(e, &raw))?;
        let tree = fragment_to_tree(&frag).map_err(|e| malformed(e, &raw))?;
        let mut warnings = frag.warnings.clone();
        warnings.extend(validate_initial_map(&tree, &self.options.limits));
        let map = MindMap::from_outline(&tree, NodeOrigin::Generated)?;
        Ok(GeneratedMap {
            map,
            category: bundle.category.unwrap_or(TemplateCategory::Fallback),
            warnings,
            raw_response: raw,
        })
    }

    pub fn explain_node(&self, map: &mut MindMap, node: NodeId) -> Result<EnrichmentResult, EnrichError> {
        let ctx = NodeContext::for_node(map, node)?;
        let bundle = self.prompts.build_explain_prompt(&ctx);
        self.attach_single(map, node, &bundle, EnrichmentKind::Explain)
    }

    pub fn explore_node(&self, map: &mut MindMap, node: NodeId, question: &str) -> Result<EnrichmentResult, EnrichError> {
        let ctx = NodeContext::for_node(map, node)?;
        let bundle = self.prompts.build_custom_question_prompt(&ctx, question)?;
        self.attach_single(map, node, &bundle, EnrichmentKind::Explore)
    }

    pub fn exemplify_node(&self, map: &mut MindMap, node: NodeId) -> Result<EnrichmentResult, EnrichError> {
        let ctx = NodeContext::for_node(map, node)?;
        let bundle = self.prompts.build_examples_prompt(&ctx);
        let raw = self.call(&bundle)?;
        let (mut forest, mut warnings) = self.parse_attachment(&raw)?;
        if forest.is_empty() {
            return Err(EnrichError::NoExamples { raw });
        }
        if forest.len() > self.options.max_examples {
            warnings.push(EnrichWarning::TooManyExamples { received: forest.len(), kept: self.options.max_examples });
            forest.truncate(self.options.max_examples);
        }

        let mut references = self.references(map, node);
        let mut accepted = Vec::new();
        let mut worst = 0.0_f64;
        let mut rejected = Vec::new();
        for candidate in forest {
            let rate = repetition_rate(&candidate.text, &references);
            if rate >= self.options.redundancy_threshold {
                worst = worst.max(rate);
                rejected.push(candidate.text.clone());
                warnings.push(EnrichWarning::RedundantContent { text: candidate.text, rate });
                continue;
            }
            references.push(candidate.text.clone());
            accepted.push(candidate);
        }
        if accepted.is_empty() {
            return Err(EnrichError::RedundantContent { rate: worst, candidates: rejected, raw });
        }
        let attached = map.attach_batch(node, &accepted, NodeOrigin::Example)?;
        Ok(EnrichmentResult { attached, warnings, raw_response: raw })
    }

    /// Dispatches on `kind`; `question` is required for `Explore`.
    pub fn enrich(
        &self,
        map: &mut MindMap,
        node: NodeId,
        kind: EnrichmentKind,
        question: Option<&str>,
    ) -> Result<EnrichmentResult, EnrichError> {
        match kind {
            EnrichmentKind::Explain => self.explain_node(map, node),
            EnrichmentKind::Examples => self.exemplify_node(map, node),
            EnrichmentKind::Explore => self.explore_node(map, node, question.unwrap_or("")),
        }
    }

    fn call(&self, bundle: &PromptBundle) -> Result<String, ProviderError> {
        self.provider.complete(&bundle.messages(), &self.params)
    }

    fn parse_attachment(&self, raw: &str) -> Result<(Vec<OutlineTree>, Vec<EnrichWarning>), EnrichError> {
        let frag = parse_outline(raw)
            .map_err(|e| EnrichError::GenerationMalformed { reason: e.to_string(), raw: raw.to_owned() })?;
        let warnings = frag.warnings.iter().cloned().map(EnrichWarning::Outline).collect();
        Ok((fragment_to_forest(&frag), warnings))
    }

    fn references(&self, map: &MindMap, node: NodeId) -> Vec<String> {
        if self.options.whole_map_redundancy {
            map.nodes().map(|n| n.text.clone()).collect()
        } else {
            map.node(node)
                .map(|n| n.children.iter().filter_map(|c| map.node(*c)).map(|c| c.text.clone()).collect())
                .unwrap_or_default()
        }
    }

    /// Explanation and exploration attach exactly one child; any further
    /// top-level entries in the response are folded beneath it.
    fn attach_single(
        &self,
        map: &mut MindMap,
        node: NodeId,
        bundle: &PromptBundle,
        kind: EnrichmentKind,
    ) -> Result<EnrichmentResult, EnrichError> {
        let raw = self.call(bundle)?;
        let (forest, mut warnings) = self.parse_attachment(&raw)?;
        let mut trees = forest.into_iter();
        let Some(mut answer) = trees.next() else {
            return Err(EnrichError::GenerationMalformed { reason: "response has no entries".into(), raw });
        };
        answer.children.extend(trees);

        let chars = char_len(&answer.text);
        if chars > self.options.answer_char_limit {
            warnings.push(EnrichWarning::AnswerTooLong { chars, limit: self.options.answer_char_limit });
        }
        let rate = repetition_rate(&answer.text, &self.references(map, node));
        if rate >= self.options.redundancy_threshold {
            return Err(EnrichError::RedundantContent { rate, candidates: vec![answer.text], raw });
        }
        let attached = map.attach_batch(node, std::slice::from_ref(&answer), kind.origin())?;
        Ok(EnrichmentResult { attached, warnings, raw_response: raw })
    }
}
