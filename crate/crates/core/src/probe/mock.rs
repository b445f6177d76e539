//! Offline providers that read the rendered prompt back.
//!
//! Mocks parse the final `Question:` block of the prompt to find which label
//! shows which option text, so their scores follow the option text when the
//! presentation order is permuted.

use std::collections::HashMap;

use crate::distribution::DistributionSet;
use crate::survey::Question;

use super::provider::{CompletionRequest, Provider, ProviderError, TokenLogprobs};

pub const DEFAULT_SCORE_TOKEN: &str = " {label}";

/// Question text and (label, option text) pairs recovered from a prompt.
#[derive(Debug, Clone, PartialEq)]
pub struct ParsedPrompt {
    pub question: String,
    pub options: Vec<(String, String)>,
}

pub fn parse_prompt(prompt: &str) -> Option<ParsedPrompt> {
    let start = if prompt.starts_with("Question: ") {
        prompt.rfind("\nQuestion: ").map_or(0, |i| i + 1)
    } else {
        prompt.rfind("\nQuestion: ")? + 1
    };
    let mut lines = prompt[start..].lines();
    let question = lines.next()?.strip_prefix("Question: ")?.to_string();
    let mut options = Vec::new();
    for line in lines {
        if line.trim_end() == "Answer:" {
            return Some(ParsedPrompt { question, options });
        }
        let (label, text) = line.split_once(". ")?;
        options.push((label.to_string(), text.to_string()));
    }
    None
}

fn token(score_token: &str, label: &str) -> String {
    score_token.replace("{label}", label)
}

/// Keeps the `k` most likely tokens, breaking ties by token order.
fn truncate(mut map: TokenLogprobs, k: usize) -> TokenLogprobs {
    if map.len() <= k {
        return map;
    }
    let mut entries: Vec<(String, f64)> = std::mem::take(&mut map).into_iter().collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    entries.truncate(k);
    entries.into_iter().collect()
}

fn unparseable(prompt: &str) -> ProviderError {
    let head: String = prompt.chars().take(40).collect();
    ProviderError::Api(format!("mock could not parse prompt starting {head:?}"))
}

/// Spreads mass evenly over every presented label, refusal included.
pub struct UniformMock {
    model_id: String,
    score_token: String,
}

impl UniformMock {
    pub fn new(model_id: impl Into<String>) -> Self {
        Self {
            model_id: model_id.into(),
            score_token: DEFAULT_SCORE_TOKEN.into(),
        }
    }
}

fn uniform_map(parsed: &ParsedPrompt, score_token: &str) -> TokenLogprobs {
    let lp = -(parsed.options.len() as f64).ln();
    parsed
        .options
        .iter()
        .map(|(label, _)| (token(score_token, label), lp))
        .collect()
}

impl Provider for UniformMock {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn params(&self) -> String {
        "mock-uniform".into()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
        let parsed = parse_prompt(&request.prompt).ok_or_else(|| unparseable(&request.prompt))?;
        Ok(truncate(uniform_map(&parsed, &self.score_token), request.top_logprobs))
    }
}

/// Returns the same token map for every prompt.
pub struct FixedMapMock {
    model_id: String,
    map: TokenLogprobs,
}

impl FixedMapMock {
    pub fn new(model_id: impl Into<String>, map: TokenLogprobs) -> Self {
        Self {
            model_id: model_id.into(),
            map,
        }
    }
}

impl Provider for FixedMapMock {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn params(&self) -> String {
        format!("mock-fixed:{}", serde_json::to_string(&self.map).unwrap_or_default())
    }

    fn complete(&self, request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
        Ok(truncate(self.map.clone(), request.top_logprobs))
    }
}

/// Option text -> answer probability for each question text.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OptionTable {
    by_question: HashMap<String, HashMap<String, f64>>,
}

impl OptionTable {
    /// Spreads each distribution over its option texts; a defined refusal
    /// rate `r` puts `r` on the refusal option and scales the rest by `1 - r`.
    pub fn from_distributions(questions: &[Question], dists: &DistributionSet) -> Self {
        let mut by_question = HashMap::new();
        for q in questions {
            let Some(d) = dists.get(&q.qid) else { continue };
            let r = d.refusal_rate.unwrap_or(0.0);
            let mut options: HashMap<String, f64> = q
                .non_refusal_options()
                .iter()
                .zip(&d.probs)
                .map(|(o, p)| (o.text.clone(), (1.0 - r) * p))
                .collect();
            if let (Some(refusal), Some(rate)) = (q.refusal_option(), d.refusal_rate) {
                options.insert(refusal.text.clone(), rate);
            }
            by_question.insert(q.text.clone(), options);
        }
        Self { by_question }
    }

    fn lookup(&self, parsed: &ParsedPrompt, score_token: &str) -> Option<TokenLogprobs> {
        let table = self.by_question.get(&parsed.question)?;
        let mut map = TokenLogprobs::new();
        for (label, text) in &parsed.options {
            let p = *table.get(text)?;
            if p > 0.0 {
                map.insert(token(score_token, label), p.ln());
            }
        }
        Some(map)
    }
}

/// Answers with a designated group's opinion distribution.
///
/// With triggers set, the group distribution is only used when one of the
/// trigger strings (typically the group's rendered steering contexts)
/// appears in the prompt; otherwise the fallback table answers, or a uniform
/// spread when there is none.
pub struct GroupMimicMock {
    model_id: String,
    table: OptionTable,
    triggers: Vec<String>,
    fallback: Option<OptionTable>,
    score_token: String,
}

impl GroupMimicMock {
    pub fn new(model_id: impl Into<String>, table: OptionTable) -> Self {
        Self {
            model_id: model_id.into(),
            table,
            triggers: Vec::new(),
            fallback: None,
            score_token: DEFAULT_SCORE_TOKEN.into(),
        }
    }

    pub fn steered_by(mut self, triggers: Vec<String>) -> Self {
        self.triggers = triggers;
        self
    }

    pub fn with_fallback(mut self, fallback: OptionTable) -> Self {
        self.fallback = Some(fallback);
        self
    }

    pub fn with_score_token(mut self, score_token: impl Into<String>) -> Self {
        self.score_token = score_token.into();
        self
    }

    fn active(&self, prompt: &str) -> bool {
        self.triggers.is_empty() || self.triggers.iter().any(|t| prompt.contains(t.as_str()))
    }
}

impl Provider for GroupMimicMock {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn params(&self) -> String {
        "mock-group".into()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
        let parsed = parse_prompt(&request.prompt).ok_or_else(|| unparseable(&request.prompt))?;
        let table = if self.active(&request.prompt) {
            Some(&self.table)
        } else {
            self.fallback.as_ref()
        };
        let map = table
            .and_then(|t| t.lookup(&parsed, &self.score_token))
            .unwrap_or_else(|| uniform_map(&parsed, &self.score_token));
        Ok(truncate(map, request.top_logprobs))
    }
}

/// Fails every request with the same error.
pub struct FailingMock {
    model_id: String,
    error: ProviderError,
}

impl FailingMock {
    pub fn new(model_id: impl Into<String>, error: ProviderError) -> Self {
        Self {
            model_id: model_id.into(),
            error,
        }
    }
}

impl Provider for FailingMock {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn params(&self) -> String {
        "mock-failing".into()
    }

    fn complete(&self, _request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
        Err(self.error.clone())
    }
}
