use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::cache::{cache_key, CacheRecord, ProbeCache};
use super::mock::DEFAULT_SCORE_TOKEN;
use super::provider::{CompletionRequest, Provider, ProviderError};
use super::{ProbeError, PromptSpec};

/// Label log-probabilities read off one provider response.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    pub prompt_hash: String,
    pub model_id: String,
    /// Presented label -> log-probability; labels outside the top K are absent.
    pub logprobs: BTreeMap<String, f64>,
    /// Number of tokens the provider returned.
    pub returned_top_k: usize,
    /// Mass of every returned token, answer labels or not.
    pub raw_mass: f64,
    /// Smallest probability among the returned tokens.
    pub raw_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RetryPolicy {
    pub attempts: u32,
    #[serde(with = "millis")]
    pub base_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            attempts: 3,
            base_delay: Duration::from_millis(500),
        }
    }
}

mod millis {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(d.as_millis() as u64)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        u64::deserialize(d).map(Duration::from_millis)
    }
}

/// Token bucket shared by every worker querying one provider.
pub struct RateLimiter {
    rate: f64,
    burst: f64,
    state: Mutex<(f64, Instant)>,
}

impl RateLimiter {
    pub fn new(requests_per_second: f64, burst: u32) -> Self {
        let burst = f64::from(burst.max(1));
        Self {
            rate: requests_per_second,
            burst,
            state: Mutex::new((burst, Instant::now())),
        }
    }

    /// Blocks until a request may be sent.
    pub fn acquire(&self) {
        loop {
            let wait = {
                let mut state = self.state.lock().expect("rate limiter lock");
                let now = Instant::now();
                let refill = now.duration_since(state.1).as_secs_f64() * self.rate;
                state.0 = (state.0 + refill).min(self.burst);
                state.1 = now;
                if state.0 >= 1.0 {
                    state.0 -= 1.0;
                    return;
                }
                (1.0 - state.0) / self.rate
            };
            thread::sleep(Duration::from_secs_f64(wait));
        }
    }
}

#[derive(Clone)]
pub struct QuerySettings {
    pub top_k: usize,
    /// Token scored for each label; `{label}` is substituted.
    pub score_token: String,
    pub retry: RetryPolicy,
    pub rate_limiter: Option<Arc<RateLimiter>>,
    /// Serve from cache only; a miss is an error instead of a provider call.
    pub offline: bool,
}

impl Default for QuerySettings {
    fn default() -> Self {
        Self {
            top_k: 100,
            score_token: DEFAULT_SCORE_TOKEN.into(),
            retry: RetryPolicy::default(),
            rate_limiter: None,
            offline: false,
        }
    }
}

fn with_retries<T>(
    policy: &RetryPolicy,
    mut call: impl FnMut() -> Result<T, ProviderError>,
) -> Result<T, ProviderError> {
    let attempts = policy.attempts.max(1);
    let mut attempt = 0;
    loop {
        match call() {
            Ok(v) => return Ok(v),
            Err(e) if e.is_transient() && attempt + 1 < attempts => {
                let delay = policy.base_delay * 2u32.pow(attempt);
                log::debug!("transient provider error ({e}); retrying in {delay:?}");
                thread::sleep(delay);
                attempt += 1;
            }
            Err(e) => return Err(e),
        }
    }
}

fn to_result(record: &CacheRecord, prompt: &PromptSpec, score_token: &str) -> ProbeResult {
    let finite = || {
        record
            .logprobs
            .values()
            .filter(|lp| lp.is_finite())
            .map(|lp| lp.min(0.0).exp())
    };
    let mut logprobs = BTreeMap::new();
    for label in prompt.presentation.expected_labels() {
        let token = score_token.replace("{label}", label);
        if let Some(&lp) = record.logprobs.get(&token).filter(|lp| lp.is_finite()) {
            logprobs.insert(label.to_string(), lp.min(0.0));
        }
    }
    ProbeResult {
        prompt_hash: record.prompt_hash.clone(),
        model_id: record.model_id.clone(),
        logprobs,
        returned_top_k: record.logprobs.len(),
        raw_mass: finite().sum(),
        raw_min: finite().fold(f64::INFINITY, f64::min),
    }
}

/// Scores a prompt's answer labels, consulting the cache first.
///
/// On a miss the provider is called (transient failures retried with
/// exponential backoff) and the raw token map is appended to the cache
/// before the result is derived from it, so hits and misses produce
/// identical results.
pub fn query_logprobs(
    provider: &dyn Provider,
    prompt: &PromptSpec,
    cache: &ProbeCache,
    settings: &QuerySettings,
) -> Result<ProbeResult, ProbeError> {
    let model_id = provider.model_id();
    let key = cache_key(model_id, &prompt.text, settings.top_k, &provider.params());
    if let Some(record) = cache.get(&key) {
        return Ok(to_result(&record, prompt, &settings.score_token));
    }
    if settings.offline {
        return Err(ProbeError::CacheMiss {
            model_id: model_id.to_string(),
            qid: prompt.qid.clone(),
        });
    }
    let request = CompletionRequest {
        model_id: model_id.to_string(),
        prompt: prompt.text.clone(),
        max_tokens: 1,
        top_logprobs: settings.top_k,
    };
    let tokens = with_retries(&settings.retry, || {
        if let Some(limiter) = &settings.rate_limiter {
            limiter.acquire();
        }
        provider.complete(&request)
    })
    .map_err(|e| match e {
        ProviderError::Auth(m) => ProbeError::Auth(m),
        ProviderError::RateLimited(m) => ProbeError::RateLimit(m),
        other => ProbeError::Provider {
            model_id: model_id.to_string(),
            message: other.to_string(),
        },
    })?;
    let record = CacheRecord::new(key, model_id, prompt.hash(), tokens);
    cache.put(record.clone()).map_err(|e| ProbeError::Io(e.to_string()))?;
    Ok(to_result(&record, prompt, &settings.score_token))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::probe::mock::{FixedMapMock, UniformMock};
    use crate::probe::provider::{Counted, TokenLogprobs};
    use crate::probe::{build_prompt, InstructionVariant, SteeringContext};
    use crate::survey::test_support::ordinal_question;
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn prompt(n: usize) -> PromptSpec {
        let q = ordinal_question("q", n, false);
        let perm: Vec<usize> = (0..n).collect();
        build_prompt(&q, &SteeringContext::none(), InstructionVariant::None, &perm).unwrap()
    }

    fn fast() -> QuerySettings {
        QuerySettings {
            top_k: 10,
            retry: RetryPolicy {
                attempts: 3,
                base_delay: Duration::from_millis(1),
            },
            ..Default::default()
        }
    }

    fn map(entries: &[(&str, f64)]) -> TokenLogprobs {
        entries.iter().map(|(t, l)| (t.to_string(), *l)).collect()
    }

    #[test]
    fn echoes_fixed_map() {
        let m = map(&[(" A", -0.5), (" B", -1.5), (" the", -2.0)]);
        let p = FixedMapMock::new("fixed", m);
        let r = query_logprobs(&p, &prompt(2), &ProbeCache::in_memory(), &fast()).unwrap();
        assert_eq!(
            r.logprobs,
            [("A".to_string(), -0.5), ("B".to_string(), -1.5)].into_iter().collect()
        );
        assert_eq!(r.returned_top_k, 3);
        assert_eq!(r.model_id, "fixed");
        assert_eq!(r.prompt_hash, prompt(2).hash());
    }

    #[test]
    fn second_call_served_from_cache() {
        let p = Counted::new(UniformMock::new("u"));
        let cache = ProbeCache::in_memory();
        let first = query_logprobs(&p, &prompt(3), &cache, &fast()).unwrap();
        let second = query_logprobs(&p, &prompt(3), &cache, &fast()).unwrap();
        assert_eq!(p.calls(), 1);
        assert_eq!(first, second);
    }

    #[test]
    fn partial_coverage() {
        let m = map(&[(" A", -0.1), (" B", -2.5), (" C", -3.0), (" D", -4.0)]);
        let p = FixedMapMock::new("f", m);
        let settings = QuerySettings { top_k: 2, ..fast() };
        let r = query_logprobs(&p, &prompt(4), &ProbeCache::in_memory(), &settings).unwrap();
        assert_eq!(r.logprobs.len(), 2);
        assert_eq!(r.returned_top_k, 2);
    }

    #[test]
    fn offline_miss() {
        let p = UniformMock::new("u");
        let settings = QuerySettings {
            offline: true,
            ..fast()
        };
        assert!(matches!(
            query_logprobs(&p, &prompt(2), &ProbeCache::in_memory(), &settings),
            Err(ProbeError::CacheMiss { .. })
        ));
    }

    struct Flaky {
        failures: usize,
        error: ProviderError,
        calls: AtomicUsize,
    }

    impl Provider for Flaky {
        fn model_id(&self) -> &str {
            "flaky"
        }

        fn complete(&self, _: &CompletionRequest) -> Result<TokenLogprobs, ProviderError> {
            if self.calls.fetch_add(1, Ordering::SeqCst) < self.failures {
                Err(self.error.clone())
            } else {
                Ok(map(&[(" A", -0.1)]))
            }
        }
    }

    fn flaky(failures: usize, error: ProviderError) -> Flaky {
        Flaky {
            failures,
            error,
            calls: AtomicUsize::new(0),
        }
    }

    #[test]
    fn retries_transient_failures() {
        let p = flaky(2, ProviderError::Transport("reset".into()));
        assert!(query_logprobs(&p, &prompt(2), &ProbeCache::in_memory(), &fast()).is_ok());
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);
    }

    #[test]
    fn gives_up_after_budget() {
        let p = flaky(3, ProviderError::Transport("reset".into()));
        let err = query_logprobs(&p, &prompt(2), &ProbeCache::in_memory(), &fast()).unwrap_err();
        assert!(matches!(err, ProbeError::Provider { .. }));
        assert_eq!(p.calls.load(Ordering::SeqCst), 3);

        let p = flaky(5, ProviderError::RateLimited("slow down".into()));
        let err = query_logprobs(&p, &prompt(2), &ProbeCache::in_memory(), &fast()).unwrap_err();
        assert!(matches!(err, ProbeError::RateLimit(_)));
    }

    #[test]
    fn auth_errors_are_not_retried() {
        let p = flaky(1, ProviderError::Auth("no key".into()));
        let err = query_logprobs(&p, &prompt(2), &ProbeCache::in_memory(), &fast()).unwrap_err();
        assert!(matches!(err, ProbeError::Auth(_)));
        assert_eq!(p.calls.load(Ordering::SeqCst), 1);
    }

    #[test]
    fn rate_limiter_spaces_requests() {
        let limiter = RateLimiter::new(200.0, 1);
        let start = Instant::now();
        for _ in 0..5 {
            limiter.acquire();
        }
        // First token is free; four more at 5 ms each.
        assert!(start.elapsed() >= Duration::from_millis(15));
    }
}
