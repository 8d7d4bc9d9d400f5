//! Keyword routing and prompt templates.
//!
//! Templates and the routing table are loaded from a TOML file. The default
//! file ships with the crate (`config/prompts.toml`) and is embedded at
//! compile time; operators can point the service at an edited copy.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::llm::ChatMessage;
use crate::map::{MapError, MindMap, NodeId};

/// The shipped template file.
pub const DEFAULT_PROMPTS: &str = include_str!("../config/prompts.toml");

const CONFIG_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateCategory {
    HumanitiesTopic,
    ScienceTopic,
    BusinessTopic,
    CreativeTopic,
    AppRecommendation,
    CityDescription,
    Fallback,
}

impl fmt::Display for TemplateCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Self::HumanitiesTopic => "humanities_topic",
            Self::ScienceTopic => "science_topic",
            Self::BusinessTopic => "business_topic",
            Self::CreativeTopic => "creative_topic",
            Self::AppRecommendation => "app_recommendation",
            Self::CityDescription => "city_description",
            Self::Fallback => "fallback",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategoryRule {
    #[serde(rename = "name")]
    pub category: TemplateCategory,
    pub keywords: Vec<String>,
    pub template: String,
}

/// Ordered keyword rules. The last rule is always the fallback.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RoutingTable {
    rules: Vec<CategoryRule>,
}

impl RoutingTable {
    pub fn new(rules: Vec<CategoryRule>) -> Result<Self, PromptError> {
        let fallbacks = rules.iter().filter(|r| r.category == TemplateCategory::Fallback).count();
        if fallbacks != 1 || rules.last().map(|r| r.category) != Some(TemplateCategory::Fallback) {
            return Err(PromptError::Config("exactly one fallback category is required and it must be last".into()));
        }
        for rule in &rules {
            check_placeholders(&rule.template, &["query"])
                .map_err(|p| PromptError::Config(format!("template for {}: unknown placeholder {{{p}}}", rule.category)))?;
        }
        Ok(Self { rules })
    }

    pub fn rules(&self) -> &[CategoryRule] {
        &self.rules
    }

    /// Adds keywords to a category, e.g. to make the creative template
    /// reachable.
    pub fn add_keywords(&mut self, category: TemplateCategory, keywords: &[&str]) {
        if let Some(rule) = self.rules.iter_mut().find(|r| r.category == category) {
            rule.keywords.extend(keywords.iter().map(|k| k.to_string()));
        }
    }

    /// First rule, in table order, with a keyword occurring in `query`
    /// (case-insensitive substring match).
    pub fn route(&self, query: &str) -> Result<TemplateCategory, PromptError> {
        Ok(self.route_rule(query)?.category)
    }

    fn route_rule(&self, query: &str) -> Result<&CategoryRule, PromptError> {
        if query.trim().is_empty() {
            return Err(PromptError::EmptyQuery);
        }
        let haystack = query.to_lowercase();
        let rule = self
            .rules
            .iter()
            .find(|r| {
                r.category == TemplateCategory::Fallback
                    || r.keywords.iter().any(|k| !k.is_empty() && haystack.contains(&k.to_lowercase()))
            })
            .expect("fallback rule is always present");
        Ok(rule)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("query is empty")]
    EmptyQuery,
    #[error("question is empty")]
    EmptyQuestion,
    #[error("invalid prompt config: {0}")]
    Config(String),
}

#[derive(Deserialize)]
struct RawConfig {
    version: u32,
    generate_base: String,
    explain: String,
    examples: String,
    custom_question: String,
    category: Vec<CategoryRule>,
}

/// All templates plus the routing table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PromptConfig {
    pub generate_base: String,
    pub explain: String,
    pub examples: String,
    pub custom_question: String,
    pub table: RoutingTable,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_PROMPTS).expect("shipped prompt config is valid")
    }
}

impl PromptConfig {
    pub fn from_toml_str(text: &str) -> Result<Self, PromptError> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| PromptError::Config(e.to_string()))?;
        if raw.version != CONFIG_VERSION {
            return Err(PromptError::Config(format!("unsupported config version {}", raw.version)));
        }
        let node_ph = ["parent_information", "node_information"];
        let checks = [
            ("generate_base", &raw.generate_base, &[][..]),
            ("explain", &raw.explain, &node_ph[..]),
            ("examples", &raw.examples, &node_ph[..]),
            ("custom_question", &raw.custom_question, &["parent_information", "node_information", "question"][..]),
        ];
        for (name, template, allowed) in checks {
            if template.trim().is_empty() {
                return Err(PromptError::Config(format!("template `{name}` is empty")));
            }
            check_placeholders(template, allowed)
                .map_err(|p| PromptError::Config(format!("template `{name}`: unknown placeholder {{{p}}}")))?;
        }
        Ok(Self {
            generate_base: raw.generate_base,
            explain: raw.explain,
            examples: raw.examples,
            custom_question: raw.custom_question,
            table: RoutingTable::new(raw.category)?,
        })
    }

    pub fn load(path: &Path) -> Result<Self, PromptError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| PromptError::Config(format!("reading {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn build_generate_prompt(&self, query: &str) -> Result<PromptBundle, PromptError> {
        let rule = self.table.route_rule(query)?;
        let part2 = fill(&rule.template, &[("query", query)]);
        Ok(PromptBundle {
            system: format!("{}\n\n{}", self.generate_base, part2),
            user: query.to_owned(),
            category: Some(rule.category),
        })
    }

    pub fn build_explain_prompt(&self, ctx: &NodeContext) -> PromptBundle {
        PromptBundle { system: fill(&self.explain, &ctx.pairs()), user: String::new(), category: None }
    }

    pub fn build_examples_prompt(&self, ctx: &NodeContext) -> PromptBundle {
        PromptBundle { system: fill(&self.examples, &ctx.pairs()), user: String::new(), category: None }
    }

    pub fn build_custom_question_prompt(&self, ctx: &NodeContext, question: &str) -> Result<PromptBundle, PromptError> {
        if question.trim().is_empty() {
            return Err(PromptError::EmptyQuestion);
        }
        let mut pairs = ctx.pairs().to_vec();
        pairs.push(("question", question));
        Ok(PromptBundle { system: fill(&self.custom_question, &pairs), user: question.to_owned(), category: None })
    }
}

/// The messages sent for one LLM call.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system: String,
    /// Empty for the node explanation and example prompts, which are
    /// system-only instructions.
    pub user: String,
    /// Routed category, for generation prompts.
    pub category: Option<TemplateCategory>,
}

impl PromptBundle {
    pub fn messages(&self) -> Vec<ChatMessage> {
        let mut out = vec![ChatMessage::system(self.system.clone())];
        if !self.user.is_empty() {
            out.push(ChatMessage::user(self.user.clone()));
        }
        out
    }
}

/// Background for a node action: the ancestor chain and the node itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeContext {
    /// Ancestor texts from the root down to the parent, joined by `" > "`.
    /// Empty for the root.
    pub parent_information: String,
    pub node_information: String,
}

impl NodeContext {
    pub fn new(parent_information: impl Into<String>, node_information: impl Into<String>) -> Self {
        Self { parent_information: parent_information.into(), node_information: node_information.into() }
    }

    pub fn for_node(map: &MindMap, id: NodeId) -> Result<Self, MapError> {
        let node = map.get(id)?;
        let chain: Vec<&str> = map
            .ancestors(id)?
            .into_iter()
            .map(|a| map.get(a).map(|n| n.text.as_str()))
            .collect::<Result<_, _>>()?;
        Ok(Self { parent_information: chain.join(" > "), node_information: node.text.clone() })
    }

    fn pairs(&self) -> [(&'static str, &str); 2] {
        [("parent_information", &self.parent_information), ("node_information", &self.node_information)]
    }
}

/// Single-pass placeholder substitution; substituted values are never
/// rescanned.
fn fill(template: &str, values: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + 64);
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        out.push_str(&rest[..open]);
        let after = &rest[open + 1..];
        let replaced = after.find('}').and_then(|close| {
            let name = &after[..close];
            values.iter().find(|(k, _)| *k == name).map(|(_, v)| (*v, close))
        });
        match replaced {
            Some((value, close)) => {
                out.push_str(value);
                rest = &after[close + 1..];
            }
            None => {
                out.push('{');
                rest = after;
            }
        }
    }
    out.push_str(rest);
    out
}

/// Names of `{identifier}` placeholders in a template.
pub fn placeholders(template: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = template;
    while let Some(open) = rest.find('{') {
        let after = &rest[open + 1..];
        match after.find('}') {
            Some(close) => {
                let name = &after[..close];
                if !name.is_empty() && name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                    out.push(name);
                }
                rest = &after[close + 1..];
            }
            None => break,
        }
    }
    out
}

fn check_placeholders<'a>(template: &'a str, allowed: &[&str]) -> Result<(), &'a str> {
    match placeholders(template).into_iter().find(|p| !allowed.contains(p)) {
        Some(p) => Err(p),
        None => Ok(()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn routes_paper_examples() {
        let cfg = PromptConfig::default();
        assert_eq!(cfg.table.route("Dadaism").unwrap(), TemplateCategory::HumanitiesTopic);
        assert_eq!(cfg.table.route("explain quantum mechanics to me").unwrap(), TemplateCategory::ScienceTopic);
        assert_eq!(cfg.table.route("how to train a parrot").unwrap(), TemplateCategory::Fallback);
        assert_eq!(cfg.table.route("  "), Err(PromptError::EmptyQuery));
    }

    #[test]
    fn substring_match_has_no_word_boundaries() {
        let cfg = PromptConfig::default();
        assert_eq!(cfg.table.route("apple pie").unwrap(), TemplateCategory::AppRecommendation);
    }

    #[test]
    fn creative_becomes_reachable_with_extra_keywords() {
        let mut cfg = PromptConfig::default();
        assert_eq!(cfg.table.route("Future fashion design").unwrap(), TemplateCategory::Fallback);
        cfg.table.add_keywords(TemplateCategory::CreativeTopic, &["design"]);
        assert_eq!(cfg.table.route("Future fashion design").unwrap(), TemplateCategory::CreativeTopic);
    }

    #[test]
    fn generation_bundle() {
        let cfg = PromptConfig::default();
        let b = cfg.build_generate_prompt("Surrealism").unwrap();
        assert!(b.system.contains("mind map for Surrealism"));
        assert!(b.system.starts_with(&cfg.generate_base));
        assert_eq!(b.user, "Surrealism");
        assert_eq!(b.category, Some(TemplateCategory::HumanitiesTopic));

        let city = cfg.build_generate_prompt("recommend a city").unwrap();
        assert_eq!(city.category, Some(TemplateCategory::CityDescription));
        for aspect in ["City Characteristics", "Culture and Lifestyle", "City Economy", "Personal Experiences", "Future Prospects"] {
            assert!(city.system.contains(aspect), "{aspect}");
        }
        assert_eq!(cfg.build_generate_prompt(""), Err(PromptError::EmptyQuery));
    }

    #[test]
    fn node_prompts() {
        let cfg = PromptConfig::default();
        let ctx = NodeContext::new("Surrealism > Major artists", "Salvador Dali");
        let explain = cfg.build_explain_prompt(&ctx);
        assert!(explain.system.contains("Surrealism > Major artists"));
        assert!(explain.system.contains("Salvador Dali"));
        assert!(explain.system.contains("should start with #"));
        assert_eq!(explain.messages().len(), 1);

        let examples = cfg.build_examples_prompt(&NodeContext::new("", "André Breton"));
        assert!(examples.system.contains("at least 1 and at most 3"));
        assert!(examples.system.contains("one additional # compared to"));
        assert!(examples.system.contains("André Breton"));

        let custom = cfg.build_custom_question_prompt(&ctx, "Who is Max Ernst?").unwrap();
        assert_eq!(custom.user, "Who is Max Ernst?");
        assert!(custom.system.contains("total character limit for the answer is 100 characters"));
        assert_eq!(cfg.build_custom_question_prompt(&ctx, " "), Err(PromptError::EmptyQuestion));
    }

    #[test]
    fn substituted_values_are_not_rescanned() {
        assert_eq!(fill("a {x} b", &[("x", "{x}")]), "a {x} b");
        assert_eq!(fill("{unknown} {x}", &[("x", "1")]), "{unknown} 1");
    }

    #[test]
    fn config_validation() {
        let bad = DEFAULT_PROMPTS.replace("version = 1", "version = 2");
        assert!(PromptConfig::from_toml_str(&bad).is_err());
        let bad = DEFAULT_PROMPTS.replace("for {query}.", "for {topic}.");
        assert!(PromptConfig::from_toml_str(&bad).is_err());
        let no_fallback = DEFAULT_PROMPTS.replace("name = \"fallback\"", "name = \"city_description\"");
        assert!(PromptConfig::from_toml_str(&no_fallback).is_err());
    }
}
