//! Prompt construction, provider queries and conversion of returned
//! log-probabilities into opinion distributions.

mod cache;
mod extract;
mod http;
pub mod mock;
mod prompt;
mod provider;
mod query;
mod steering;

use thiserror::Error;

pub use cache::{cache_key, CacheRecord, ProbeCache};
pub use extract::{bound_missing_options, extract_distribution, total_assigned_mass, BoundedLogprobs};
pub use http::CompletionsProvider;
pub use mock::DEFAULT_SCORE_TOKEN;
pub use prompt::{
    build_prompt, build_prompt_with, permutation_seed, InstructionVariant, Presentation, PromptSpec,
    EXAMPLE_INSTRUCTION, GENERAL_INSTRUCTION,
};
pub use provider::{CompletionRequest, Counted, Provider, ProviderError, TokenLogprobs};
pub use query::{query_logprobs, ProbeResult, QuerySettings, RateLimiter, RetryPolicy};
pub use steering::{default_label, ContextKind, SteeringContext, SteeringTemplates};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProbeError {
    #[error("bad permutation: {0}")]
    BadPermutation(String),
    #[error("attribute {attribute} has no group {group:?}")]
    UnknownGroup { attribute: String, group: String },
    #[error("template error: {0}")]
    Template(String),
    #[error("provider for {model_id} failed: {message}")]
    Provider { model_id: String, message: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("rate limit retries exhausted: {0}")]
    RateLimit(String),
    #[error("no expected label in the response ({model_id}, prompt {prompt_hash})")]
    AllMissing { model_id: String, prompt_hash: String },
    #[error("{qid}: label {label} absent from log-prob map")]
    MissingLabel { qid: String, label: String },
    #[error("{model_id}/{qid}: not cached and running offline")]
    CacheMiss { model_id: String, qid: String },
    #[error("cache i/o: {0}")]
    Io(String),
}
