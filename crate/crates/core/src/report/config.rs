use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::human::WeightingMode;
use crate::metrics::DEFAULT_MODAL_TEMPERATURE;
use crate::probe::{ContextKind, InstructionVariant, RetryPolicy, SteeringTemplates, DEFAULT_SCORE_TOKEN};

use super::RunError;

/// An (attribute, group) pair such as `POLPARTY` / `Democrat`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroupRef {
    pub attribute: String,
    pub group: String,
}

impl GroupRef {
    pub fn new(attribute: impl Into<String>, group: impl Into<String>) -> Self {
        Self {
            attribute: attribute.into(),
            group: group.into(),
        }
    }
}

impl fmt::Display for GroupRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}={}", self.attribute, self.group)
    }
}

/// The 22 steering groups, named after the attribute and group ids of the
/// bundled demographic survey. Entries that do not resolve against the
/// loaded surveys are dropped with a warning.
pub fn default_steering_groups() -> Vec<GroupRef> {
    [
        ("CREGION", "Northeast"),
        ("CREGION", "South"),
        ("EDUCATION", "College graduate/some postgrad"),
        ("EDUCATION", "Less than high school"),
        ("SEX", "Male"),
        ("SEX", "Female"),
        ("POLIDEOLOGY", "Liberal"),
        ("POLIDEOLOGY", "Conservative"),
        ("POLIDEOLOGY", "Moderate"),
        ("INCOME", "$100,000 or more"),
        ("INCOME", "Less than $30,000"),
        ("POLPARTY", "Democrat"),
        ("POLPARTY", "Republican"),
        ("RACE", "Black"),
        ("RACE", "White"),
        ("RACE", "Asian"),
        ("RACE", "Hispanic"),
        ("RELIG", "Protestant"),
        ("RELIG", "Jewish"),
        ("RELIG", "Hindu"),
        ("RELIG", "Atheist"),
        ("RELIG", "Muslim"),
    ]
    .into_iter()
    .map(|(a, g)| GroupRef::new(a, g))
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurveyInput {
    /// Survey document (JSON).
    pub schema: PathBuf,
    /// Respondent table (CSV).
    pub microdata: PathBuf,
}

/// Where a group-mimic mock answers from when it is not steered.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MimicFallback {
    #[default]
    Uniform,
    Overall,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProviderConfig {
    /// OpenAI-style `/completions` endpoint.
    Completions {
        base_url: String,
        /// Name of the environment variable holding the API key.
        api_key_env: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
    Uniform,
    Fixed {
        logprobs: BTreeMap<String, f64>,
    },
    /// Answers with a group's human distribution; when `steerable`, only
    /// when that group's steering context is in the prompt.
    GroupMimic {
        attribute: String,
        group: String,
        #[serde(default)]
        steerable: bool,
        #[serde(default)]
        fallback: MimicFallback,
    },
    Failing {
        #[serde(default = "default_failure")]
        message: String,
    },
}

fn default_timeout() -> u64 {
    30
}

fn default_failure() -> String {
    "simulated outage".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub id: String,
    pub provider: ProviderConfig,
    #[serde(default = "default_top_k")]
    pub top_k: usize,
}

fn default_top_k() -> usize {
    100
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RobustnessConfig {
    /// Also probe every question under a seeded random option order.
    pub permute: bool,
    pub seed: u64,
    /// Extra runs of the default prompt with these instruction blocks.
    pub instruction_variants: Vec<InstructionVariant>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConcurrencyConfig {
    pub max_in_flight: usize,
    /// Per-model request rate; unlimited when absent.
    pub requests_per_second: Option<f64>,
    pub retry: RetryPolicy,
}

impl Default for ConcurrencyConfig {
    fn default() -> Self {
        Self {
            max_in_flight: 4,
            requests_per_second: None,
            retry: RetryPolicy::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PromptConfig {
    /// Instruction block of the standard (non-robustness) prompts.
    pub instruction: InstructionVariant,
    /// Token scored for each answer label; `{label}` is substituted.
    pub score_token: String,
    pub templates: SteeringTemplates,
}

impl Default for PromptConfig {
    fn default() -> Self {
        Self {
            instruction: InstructionVariant::None,
            score_token: DEFAULT_SCORE_TOKEN.into(),
            templates: SteeringTemplates::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub surveys: Vec<SurveyInput>,
    #[serde(default)]
    pub models: Vec<ModelConfig>,
    #[serde(default)]
    pub weighting: WeightingMode,
    /// Groups scored in the representativeness and consistency tables;
    /// every declared group when absent.
    #[serde(default)]
    pub groups: Option<Vec<GroupRef>>,
    /// Groups used for steering; the 22 defaults when absent.
    #[serde(default)]
    pub steering_groups: Option<Vec<GroupRef>>,
    #[serde(default = "default_contexts")]
    pub contexts: Vec<ContextKind>,
    #[serde(default)]
    pub robustness: RobustnessConfig,
    #[serde(default = "default_subset")]
    pub steering_subset_size: usize,
    #[serde(default = "default_temperature")]
    pub modal_temperature: f64,
    pub output_dir: PathBuf,
    /// Probe cache file; `<output_dir>/cache/probes.jsonl` when absent.
    #[serde(default)]
    pub cache_path: Option<PathBuf>,
    #[serde(default)]
    pub concurrency: ConcurrencyConfig,
    #[serde(default)]
    pub prompt: PromptConfig,
}

fn default_contexts() -> Vec<ContextKind> {
    ContextKind::STEERING.to_vec()
}

fn default_subset() -> usize {
    500
}

fn default_temperature() -> f64 {
    DEFAULT_MODAL_TEMPERATURE
}

impl RunConfig {
    /// Minimal config: one survey, no models, defaults elsewhere.
    pub fn new(schema: impl Into<PathBuf>, microdata: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            surveys: vec![SurveyInput {
                schema: schema.into(),
                microdata: microdata.into(),
            }],
            models: Vec::new(),
            weighting: WeightingMode::default(),
            groups: None,
            steering_groups: None,
            contexts: default_contexts(),
            robustness: RobustnessConfig::default(),
            steering_subset_size: default_subset(),
            modal_temperature: default_temperature(),
            output_dir: output_dir.into(),
            cache_path: None,
            concurrency: ConcurrencyConfig::default(),
            prompt: PromptConfig::default(),
        }
    }

    /// Parses a TOML (`.toml`) or JSON document. Relative paths inside it
    /// are resolved against the document's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, RunError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| RunError::io(path, e))?;
        let mut config: RunConfig = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?
        } else {
            toml::from_str(&text).map_err(|e| RunError::Config(format!("{}: {e}", path.display())))?
        };
        if let Some(base) = path.parent() {
            config.resolve_paths(base);
        }
        config.validate()?;
        Ok(config)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for s in &mut self.surveys {
            join(&mut s.schema);
            join(&mut s.microdata);
        }
        join(&mut self.output_dir);
        if let Some(c) = self.cache_path.as_mut() {
            join(c);
        }
    }

    /// Checks everything that can be checked without loading the surveys.
    pub fn validate(&self) -> Result<(), RunError> {
        if self.surveys.is_empty() {
            return Err(RunError::Config("no surveys configured".into()));
        }
        for s in &self.surveys {
            for p in [&s.schema, &s.microdata] {
                if !p.is_file() {
                    return Err(RunError::Config(format!("{} does not exist", p.display())));
                }
            }
        }
        let mut ids = std::collections::HashSet::new();
        for m in &self.models {
            if m.id.is_empty() || !ids.insert(m.id.as_str()) {
                return Err(RunError::Config(format!("model id {:?} is empty or repeated", m.id)));
            }
            if m.top_k == 0 {
                return Err(RunError::Config(format!("{}: top_k must be positive", m.id)));
            }
        }
        if self.contexts.contains(&ContextKind::None) {
            return Err(RunError::Config(
                "contexts lists \"none\"; only steering contexts belong there".into(),
            ));
        }
        if !(self.modal_temperature.is_finite() && self.modal_temperature > 0.0) {
            return Err(RunError::Config(format!(
                "modal_temperature {} must be positive",
                self.modal_temperature
            )));
        }
        if self.concurrency.max_in_flight == 0 {
            return Err(RunError::Config("concurrency.max_in_flight must be positive".into()));
        }
        if let Some(rps) = self.concurrency.requests_per_second {
            if !(rps.is_finite() && rps > 0.0) {
                return Err(RunError::Config(format!("requests_per_second {rps} must be positive")));
            }
        }
        if !self.prompt.score_token.contains("{label}") {
            return Err(RunError::Config("prompt.score_token must contain {label}".into()));
        }
        Ok(())
    }

    pub fn cache_file(&self) -> PathBuf {
        self.cache_path
            .clone()
            .unwrap_or_else(|| self.output_dir.join("cache").join("probes.jsonl"))
    }

    /// Digest of the canonical JSON form of the config.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
