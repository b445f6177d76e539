use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde::Serialize;
use thiserror::Error;

/// Next-token log-probabilities keyed by the raw token string.
pub type TokenLogprobs = BTreeMap<String, f64>;

/// One completion request: score a single next token, return the top K.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompletionRequest {
    pub model_id: String,
    pub prompt: String,
    pub max_tokens: u32,
    pub top_logprobs: usize,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProviderError {
    #[error("transport failure: {0}")]
    Transport(String),
    #[error("rate limited: {0}")]
    RateLimited(String),
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("provider rejected request: {0}")]
    Api(String),
}

impl ProviderError {
    /// Whether retrying the same request could succeed.
    pub fn is_transient(&self) -> bool {
        matches!(self, ProviderError::Transport(_) | ProviderError::RateLimited(_))
    }
}

/// A model endpoint that returns next-token log-probabilities.
pub trait Provider: Send + Sync {
    fn model_id(&self) -> &str;

    /// Request parameters beyond the prompt that change the answer; part of
    /// the cache key.
    fn params(&self) -> String {
        String::new()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError>;
}

impl<P: Provider + ?Sized> Provider for Box<P> {
    fn model_id(&self) -> &str {
        (**self).model_id()
    }

    fn params(&self) -> String {
        (**self).params()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
        (**self).complete(request)
    }
}

/// Wraps a provider and counts calls that reach it.
pub struct Counted<P> {
    inner: P,
    calls: AtomicUsize,
}

impl<P: Provider> Counted<P> {
    pub fn new(inner: P) -> Self {
        Self {
            inner,
            calls: AtomicUsize::new(0),
        }
    }

    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    pub fn inner(&self) -> &P {
        &self.inner
    }
}

impl<P: Provider> Provider for Counted<P> {
    fn model_id(&self) -> &str {
        self.inner.model_id()
    }

    fn params(&self) -> String {
        self.inner.params()
    }

    fn complete(&self, request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        self.inner.complete(request)
    }
}
