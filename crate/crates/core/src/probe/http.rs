use std::time::Duration;

use serde::Deserialize;
use serde_json::json;

use super::provider::{CompletionRequest, Provider, ProviderError, TokenLogprobs};

/// Client for an OpenAI-style `/completions` endpoint that returns
/// `logprobs.top_logprobs` for the first generated token.
pub struct CompletionsProvider {
    model_id: String,
    base_url: String,
    api_key: String,
    agent: ureq::Agent,
}

#[derive(Deserialize)]
struct CompletionResponse {
    choices: Vec<Choice>,
}

#[derive(Deserialize)]
struct Choice {
    logprobs: Option<Logprobs>,
}

#[derive(Deserialize)]
struct Logprobs {
    top_logprobs: Vec<Option<TokenLogprobs>>,
}

impl CompletionsProvider {
    /// Reads the API key from the environment variable `api_key_env`.
    pub fn from_env(
        model_id: impl Into<String>,
        base_url: impl Into<String>,
        api_key_env: &str,
        timeout: Duration,
    ) -> Result<Self, ProviderError> {
        let api_key = std::env::var(api_key_env)
            .map_err(|_| ProviderError::Auth(format!("environment variable {api_key_env} is not set")))?;
        Ok(Self::new(model_id, base_url, api_key, timeout))
    }

    pub fn new(model_id: impl Into<String>, base_url: impl Into<String>, api_key: String, timeout: Duration) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            model_id: model_id.into(),
            base_url: base_url.into().trim_end_matches('/').to_string(),
            api_key,
            agent,
        }
    }
}

impl Provider for CompletionsProvider {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn params(&self) -> String {
        format!("completions:{}:temperature=0", self.base_url)
    }

    fn complete(&self, request: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
        let body = json!({
            "model": request.model_id,
            "prompt": request.prompt,
            "max_tokens": request.max_tokens,
            "logprobs": request.top_logprobs,
            "temperature": 0,
        });
        let mut response = self
            .agent
            .post(&format!("{}/completions", self.base_url))
            .header("Authorization", &format!("Bearer {}", self.api_key))
            .send_json(&body)
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| ProviderError::Transport(e.to_string()))?;
        match status {
            200..=299 => {}
            401 | 403 => return Err(ProviderError::Auth(format!("HTTP {status}: {text}"))),
            429 => return Err(ProviderError::RateLimited(format!("HTTP {status}: {text}"))),
            500..=599 => return Err(ProviderError::Transport(format!("HTTP {status}: {text}"))),
            _ => return Err(ProviderError::Api(format!("HTTP {status}: {text}"))),
        }
        let parsed: CompletionResponse =
            serde_json::from_str(&text).map_err(|e| ProviderError::Api(format!("bad response body: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .and_then(|c| c.logprobs)
            .and_then(|l| l.top_logprobs.into_iter().next().flatten())
            .ok_or_else(|| ProviderError::Api("response carries no top_logprobs".into()))
    }
}
